import json
import math

import pytest

from polygevrey.cli import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_SCHEMA,
    EXIT_UNKNOWN_COMMAND,
    EXIT_VERDICT_FAIL,
    main,
)

PI = math.pi


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


class TestDispatch:
    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == EXIT_UNKNOWN_COMMAND

    def test_no_args_usage(self):
        assert main([]) == EXIT_UNKNOWN_COMMAND

    def test_missing_config(self, tmp_path):
        assert main(["transform", "--out", str(tmp_path)]) == EXIT_SCHEMA

    def test_bad_config_types(self, tmp_path):
        cfg = write(tmp_path, "bad.json", {"alpha": "x"})
        assert main(["predict-type", "--config", cfg, "--out", str(tmp_path)]) == EXIT_SCHEMA

    def test_unreadable_config(self, tmp_path):
        assert main(["transform", "--config", str(tmp_path / "none.json")]) == EXIT_SCHEMA


class TestPredictType:
    def test_circle_row(self, tmp_path):
        cfg = write(
            tmp_path,
            "pt.json",
            {
                "alpha": 0.0,
                "beta": PI / 2,
                "theta0": PI / 4,
                "R0": 1.0,
                "R_alpha": 1.0,
                "R_beta": 1.0,
                "points": 9,
            },
        )
        out = tmp_path / "out"
        assert main(["predict-type", "--config", cfg, "--out", str(out)]) == EXIT_OK
        lines = (out / "predict_type.csv").read_text().splitlines()
        assert lines[0] == "theta,fz_type,sine_type,circle_type,r_tilde,final_type"
        mid = [l for l in lines if l.startswith("0.78539816")]
        assert mid, "expected a row at theta = pi/4"
        cols = mid[0].split(",")
        assert float(cols[3]) == pytest.approx(math.sqrt(2), abs=1e-10)

    def test_deterministic_output(self, tmp_path):
        cfg = write(
            tmp_path,
            "pt.json",
            {"alpha": -0.5, "beta": 0.5, "theta0": 0.0, "R0": 2.0, "points": 33},
        )
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["predict-type", "--config", cfg, "--out", str(out1)]) == EXIT_OK
        assert main(["predict-type", "--config", cfg, "--out", str(out2)]) == EXIT_OK
        assert (out1 / "predict_type.csv").read_bytes() == (out2 / "predict_type.csv").read_bytes()
        assert (out1 / "predict_type.json").read_bytes() == (out2 / "predict_type.json").read_bytes()


class TestTransform:
    def test_euler_grid(self, tmp_path):
        cfg = write(
            tmp_path,
            "tr.json",
            {
                "testbed": "euler",
                "z0": [0.5],
                "tol": 1e-12,
                "direction": [0.0],
                "radii": {"r0": 0.4, "ratio": 0.7, "count": 5},
            },
        )
        out = tmp_path / "out"
        assert main(["transform", "--config", cfg, "--out", str(out)]) == EXIT_OK
        lines = (out / "transform.csv").read_text().splitlines()
        assert lines[0] == "re_z1,im_z1,re_F,im_F,est_err"
        assert len(lines) == 6
        first = [float(v) for v in lines[1].split(",")]
        assert first[0] == pytest.approx(0.4)
        # value sanity against the direct formula at z=0.4
        from polygevrey import testbed

        want = testbed.get("euler").fn((0.4,))
        assert first[2] == pytest.approx(want.real, rel=1e-9)

    def test_inline_series(self, tmp_path):
        cfg = write(
            tmp_path,
            "tr2.json",
            {
                "series": {"dim": 1, "coeffs": [{"index": [0], "re": 1.0, "im": 0.0}]},
                "z0": [[0.5, 0.0]],
                "direction": [0.0],
                "radii": [0.2, 0.1],
            },
        )
        out = tmp_path / "out2"
        assert main(["transform", "--config", cfg, "--out", str(out)]) == EXIT_OK
        lines = (out / "transform.csv").read_text().splitlines()
        val = float(lines[1].split(",")[2])
        assert val == pytest.approx(1 - math.exp(-0.5 / 0.2), rel=1e-9)

    def test_tail_error_exit_code(self, tmp_path):
        # z0 inside the Borel disc but beyond the 0.9 R evaluation guard
        coeffs = [
            {"index": [n], "re": ((-1.0) ** n) * math.factorial(n), "im": 0.0}
            for n in range(21)
        ]
        cfg = write(
            tmp_path,
            "tr3.json",
            {
                "series": {"dim": 1, "coeffs": coeffs},
                "z0": [0.95],
                "direction": [0.0],
                "radii": [0.2, 0.1],
            },
        )
        out = tmp_path / "out3"
        assert main(["transform", "--config", cfg, "--out", str(out)]) == EXIT_NUMERICAL
        assert (out / "error.json").exists()


class TestTypeFit:
    def test_euler_within_ten_percent(self, tmp_path):
        cfg = write(
            tmp_path,
            "tf.json",
            {
                "testbed": "euler",
                "mode": "gevrey",
                "directions": [0.0, PI / 6],
                "radii": {"r0": 0.5, "ratio": 0.82, "count": 22},
                "n_max": 22,
                "window": [4, 16],
                "noise_floor": 1e-9,
            },
        )
        out = tmp_path / "out"
        assert main(["type-fit", "--config", cfg, "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "type_fit.json").read_text())
        for entry in report["directions"]:
            fitted, law = entry["fitted"][0], entry["law"][0]
            assert abs(fitted - law) / law < 0.1

    def test_flat_mode(self, tmp_path):
        cfg = write(
            tmp_path,
            "tf2.json",
            {
                "testbed": "flat1",
                "mode": "flat",
                "directions": [0.0],
                "radii": {"r0": 0.5, "ratio": 0.7, "count": 10},
            },
        )
        out = tmp_path / "out"
        assert main(["type-fit", "--config", cfg, "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "type_fit.json").read_text())
        assert report["directions"][0]["rates"][0] == pytest.approx(2.0, rel=1e-9)


class TestVerify:
    def test_coherence_rat2(self, tmp_path):
        cfg = write(
            tmp_path,
            "vc.json",
            {"suite": "coherence", "testbed": "rat2", "tol": 1e-6, "max_order": 2},
        )
        out = tmp_path / "out"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "coherence.json").read_text())
        assert report["ok"]
        assert report["report"]["max_residual"] < 1e-6

    def test_pl_poly(self, tmp_path):
        cfg = write(
            tmp_path,
            "vp.json",
            {
                "suite": "pl",
                "testbed": "poly",
                "polysector": {
                    "sectors": [
                        {"alpha": -PI / 3, "beta": PI / 3, "rho": 1.0},
                        {"alpha": -PI / 3, "beta": PI / 3, "rho": 1.0},
                    ]
                },
                "boundary_density": 4,
                "interior_samples": 4,
            },
        )
        out = tmp_path / "out"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == EXIT_OK
        assert json.loads((out / "pl.json").read_text())["ok"]

    def test_remainder_euler(self, tmp_path):
        cfg = write(
            tmp_path,
            "vr.json",
            {
                "suite": "remainder",
                "testbed": "euler",
                "directions": [0.0, PI / 6],
                "radii": {"r0": 0.5, "ratio": 0.82, "count": 22},
                "n_max": 22,
                "window": [4, 16],
                "rel_tol": 0.15,
            },
        )
        out = tmp_path / "out"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "remainder.json").read_text())
        assert report["ok"]
        assert all(d["rel_err"] < 0.15 for d in report["directions"])

    def test_first_order_rat2(self, tmp_path):
        cfg = write(
            tmp_path,
            "vf.json",
            {"suite": "first-order", "testbed": "rat2", "tol": 1e-6, "max_order": 1},
        )
        out = tmp_path / "out"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == EXIT_OK

    def test_unknown_suite(self, tmp_path):
        cfg = write(tmp_path, "vu.json", {"suite": "nope"})
        assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == EXIT_SCHEMA


class TestInterpolate:
    def test_smoke(self, tmp_path):
        cfg = write(
            tmp_path,
            "ip.json",
            {
                "testbed": "rat2",
                "cap": 10,
                "coeff_cap": 6,
                "orders": 1,
                "samples": [0.04, 0.06, 0.09],
                "tol": 1e-3,
                "precheck_tol": None,
                "inner_probe": {"steps": 16, "tol": 1e-10},
                "probe": {"steps": 13},
            },
        )
        out = tmp_path / "out"
        assert main(["interpolate", "--config", cfg, "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "interpolate.json").read_text())
        assert report["ok"]
        assert report["worst_abs_err"] < 1e-3

    def test_non_rat2_rejected(self, tmp_path):
        cfg = write(tmp_path, "ip2.json", {"testbed": "euler"})
        assert main(["interpolate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_SCHEMA

    def test_failing_verdict_exit_code(self, tmp_path):
        cfg = write(
            tmp_path,
            "ip3.json",
            {
                "testbed": "rat2",
                "cap": 8,
                "coeff_cap": 4,
                "orders": 0,
                "samples": [0.05, 0.08],
                "tol": 1e-12,
                "precheck_tol": None,
                "inner_probe": {"steps": 16, "tol": 1e-10},
                "probe": {"steps": 13},
            },
        )
        out = tmp_path / "out"
        assert main(["interpolate", "--config", cfg, "--out", str(out)]) == EXIT_VERDICT_FAIL
        assert not json.loads((out / "interpolate.json").read_text())["ok"]


class TestListTestbed:
    def test_prints_and_writes(self, tmp_path, capsys):
        assert main(["list-testbed", "--out", str(tmp_path)]) == EXIT_OK
        captured = capsys.readouterr()
        assert "rat2" in captured.out
        payload = json.loads((tmp_path / "testbed.json").read_text())
        assert any(e["id"] == "euler" for e in payload["entries"])
