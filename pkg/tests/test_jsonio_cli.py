import json
from fractions import Fraction as F

import pytest

from tropma import cli, jsonio, tangent_pl
from tropma.jsonio import FormatError


@pytest.fixture()
def tate_json(tmp_path):
    p = tmp_path / "tate.json"
    p.write_text(json.dumps({"n": 1, "periods": [[1]], "b": [[1]],
                             "z0": ["1/2"], "polarized": True}))
    return str(p)


@pytest.fixture()
def two_tate_json(tmp_path):
    p = tmp_path / "c2.json"
    p.write_text(json.dumps({"n": 2, "periods": [[1, 0], [0, 1]],
                             "b": [[1, 0], [0, 1]], "z0": ["1/2", "1/2"]}))
    return str(p)


class TestRoundTrips:
    def test_rationals(self):
        for x in (F(0), F(3), F(-7, 2), F(22, 7)):
            assert jsonio.dec_q(jsonio.enc_q(x)) == x

    def test_float_rejected(self):
        with pytest.raises(FormatError, match="floats"):
            jsonio.dec_q(0.5)

    def test_bad_literal_rejected(self):
        with pytest.raises(FormatError, match="bad rational"):
            jsonio.dec_q("1/0")

    def test_cocycle(self, tate):
        assert jsonio.dec_cocycle(jsonio.enc_cocycle(tate)) == tate

    def test_function(self, tate):
        f = tangent_pl(tate, 2)
        f2 = jsonio.dec_function(jsonio.enc_function(f))
        assert [(p.m, p.c) for p in f2.pieces] == [(p.m, p.c) for p in f.pieces]
        assert f2.cocycle == tate

    def test_measure(self, tate):
        from tropma import ma_pl
        mu = ma_pl(tangent_pl(tate, 3))
        mu2 = jsonio.dec_measure(jsonio.enc_measure(mu))
        assert mu2 == mu

    def test_measure_total_validated(self):
        with pytest.raises(FormatError, match="total"):
            jsonio.dec_measure({"atoms": [{"at": [0], "mass": 1}],
                                "pieces": [], "total": 2})

    def test_skeleton(self, tate):
        from tropma.linalg import mat, vec
        from tropma.polyhedra import AffineLatticeFrame, hull
        from tropma.skeleton import SkeletonFace, SkeletonSpec
        face = SkeletonFace("top", hull([(0,), (1,)]),
                            AffineLatticeFrame((F(0),), ((F(1),),)),
                            0, F(1), mat([[1]]), vec([0]), True)
        spec = SkeletonSpec(tate, 1, (face,))
        spec2 = jsonio.dec_skeleton(jsonio.enc_skeleton(spec))
        assert spec2 == spec


class TestCli:
    def test_validate(self, tate_json, capsys):
        assert cli.main(["validate", "--in", tate_json]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out == {"kind": "cocycle", "valid": True}

    def test_approximate_writes_artifact(self, tate_json, tmp_path):
        out = tmp_path / "out.json"
        rc = cli.main(["approximate", "--in", tate_json, "--eps", "1/4",
                       "--seed", "7", "--out", str(out)])
        assert rc == 0
        artifact = json.loads(out.read_text())
        bound = jsonio.dec_q(artifact["certificate"]["sup_error_bound"])
        assert bound <= F(1, 4)
        assert artifact["certificate"]["strictly_convex"] is True

    def test_zero_eps_is_exit_one(self, tate_json, capsys):
        assert cli.main(["approximate", "--in", tate_json, "--eps", "0"]) == 1
        err = json.loads(capsys.readouterr().out)
        assert "epsilon must be positive" in err["error"]["message"]

    def test_bad_sigma_is_exit_one(self, tmp_path, capsys):
        req = {"cocycle": {"n": 1, "periods": [[1]], "b": [[1]], "z0": ["1/2"]},
               "sigma": ["not-a-polytope"], "eps": "1/4"}
        p = tmp_path / "req.json"
        p.write_text(json.dumps(req))
        assert cli.main(["approximate", "--in", str(p)]) == 1

    def test_float_in_input_is_exit_one(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"n": 1, "periods": [[1]], "b": [[1]], "z0": [0.5]}))
        assert cli.main(["validate", "--in", str(p)]) == 1

    def test_ma_fundamental(self, tate_json, capsys):
        assert cli.main(["ma", "--in", tate_json, "--k", "3", "--fundamental"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["total"] == 1
        assert [a["mass"] for a in out["atoms"]] == ["1/3"] * 3

    def test_mass_check_pass_and_fail(self, tmp_path, capsys, tate):
        spec = {
            "cocycle": {"n": 1, "periods": [[1]], "b": [[1]], "z0": ["1/2"]},
            "d": 1,
            "faces": [{"id": "top", "carrier": {"vertices": [[0], [1]]},
                       "frame": {"basepoint": [0], "basis": [[1]]},
                       "e": 0, "degH": 1, "f_aff": {"L": [[1]], "t": [0]},
                       "abelian_nondegenerate": True, "boundary": []}],
        }
        spec_p = tmp_path / "spec.json"
        spec_p.write_text(json.dumps(spec))
        f1 = tmp_path / "k1.json"
        f1.write_text(jsonio.dumps(jsonio.enc_function(tangent_pl(tate, 1))))
        f5 = tmp_path / "k5.json"
        f5.write_text(jsonio.dumps(jsonio.enc_function(tangent_pl(tate, 5))))
        rc = cli.main(["mass-check", "--in", str(spec_p),
                       "--metric", "canonical", "--metric", str(f1),
                       "--metric", str(f5)])
        report = json.loads(capsys.readouterr().out)
        assert rc == 0 and report["equal"]
        assert set(report["totals"].values()) == {1}

        corrupted = tmp_path / "bad_measure.json"
        corrupted.write_text(json.dumps({
            "atoms": [{"at": ["1/2"], "mass": "7/5"}], "pieces": []}))
        rc = cli.main(["mass-check", "--in", str(spec_p),
                       "--metric", "canonical", "--metric", str(corrupted)])
        report = json.loads(capsys.readouterr().out)
        assert rc == 2 and not report["equal"]
        assert set(report["totals"].values()) == {1, "7/5"}

    def test_degree_report(self, tmp_path, capsys, two_tate):
        spec = {
            "cocycle": {"n": 2, "periods": [[1, 0], [0, 1]],
                        "b": [[1, 0], [0, 1]], "z0": ["1/2", "1/2"]},
            "d": 2,
            "faces": [{"id": "top",
                       "carrier": {"vertices": [[0, 0], [1, 0], [0, 1], [1, 1]]},
                       "frame": {"basepoint": [0, 0], "basis": [[1, 0], [0, 1]]},
                       "e": 0, "degH": 1,
                       "f_aff": {"L": [[1, 0], [0, 1]], "t": [0, 0]},
                       "abelian_nondegenerate": True, "boundary": []}],
        }
        spec_p = tmp_path / "spec2.json"
        spec_p.write_text(json.dumps(spec))
        fp = tmp_path / "f.json"
        fp.write_text(jsonio.dumps(jsonio.enc_function(tangent_pl(two_tate, 1))))
        rc = cli.main(["degree", "--in", str(spec_p), "--metric", str(fp)])
        report = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert report["total"] == 2
        assert report["degrees"] == [{"face": "top", "at": ["1/2", "1/2"],
                                      "degree": 2}]

    def test_plot_deterministic_and_2d_only(self, tmp_path, two_tate, tate,
                                            capsys):
        fp = tmp_path / "f2.json"
        fp.write_text(jsonio.dumps(jsonio.enc_function(tangent_pl(two_tate, 1))))
        out1 = tmp_path / "a.svg"
        out2 = tmp_path / "b.svg"
        assert cli.main(["plot", "--in", str(fp), "--out", str(out1)]) == 0
        assert cli.main(["plot", "--in", str(fp), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert out1.read_bytes().startswith(b"<svg")

        f1 = tmp_path / "f1.json"
        f1.write_text(jsonio.dumps(jsonio.enc_function(tangent_pl(tate, 1))))
        assert cli.main(["plot", "--in", str(f1)]) == 1
        err = json.loads(capsys.readouterr().out)
        assert "2-D only" in err["error"]["message"]

    def test_retries_exhausted_is_exit_two(self, tmp_path, monkeypatch):
        import tropma.approx as ax
        monkeypatch.setattr(ax, "_rand_frac", lambda rng, r, grain=4096: F(0))
        req = {"cocycle": {"n": 1, "periods": [[1]], "b": [[1]], "z0": ["1/2"]},
               "sigma": [{"vertices": [[0]]}], "eps": "1/4", "max_retries": 2}
        p = tmp_path / "req.json"
        p.write_text(json.dumps(req))
        assert cli.main(["approximate", "--in", str(p)]) == 2
