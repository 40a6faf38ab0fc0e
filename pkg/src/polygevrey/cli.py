"""Batch driver: JSON experiment configs in, CSV/JSON reports out.

Subcommands: transform, type-fit, predict-type, verify, interpolate,
list-testbed.  Reports are byte-identical across runs with the same config:
no wall-clock stamps, sorted keys, fixed float formatting, deterministic
orderings.  Exit codes: 0 success (and verification verdicts that pass),
1 completed verification with a failing verdict, 2 config/schema violation,
3 numerical non-convergence (a partial report is written), 64 unknown
subcommand.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import testbed
from .errors import (
    CoherenceError,
    ConfigError,
    DomainError,
    PolygevreyError,
    ProbeError,
    QuadratureError,
    TailError,
)
from .families import (
    ProbeSpec,
    check_coherence,
    check_first_order_coherence,
    extract_element,
    family_from_series,
    fit_type_from_remainders,
    remainder_constants,
)
from .flatness_bounds import fit_flat_type, pl_check
from .geometry import Multidirection, Polysector, geometric_radii
from .series import MultiIndexSeries
from .transforms import (
    LaplaceSpec,
    brg_function,
    interpolate_first_order,
    truncated_laplace_with_error,
)
from .typecalc import TypeProfile, circle_type, final_type, fz_type, r_tilde, sine_type

EXIT_OK = 0
EXIT_VERDICT_FAIL = 1
EXIT_SCHEMA = 2
EXIT_NUMERICAL = 3
EXIT_UNKNOWN_COMMAND = 64


def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real:.17g} {x.imag:.17g}"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _require(cfg: dict, key: str, kind=None):
    if key not in cfg:
        raise ConfigError(f"config key {key!r} is required")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"config key {key!r} must be {kind}, got {type(val).__name__}")
    return val


def _load_config(path: str) -> dict:
    try:
        with open(path, "r") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _z0_from(cfg) -> tuple[complex, ...]:
    raw = _require(cfg, "z0", list)
    out = []
    for item in raw:
        if isinstance(item, (int, float)):
            out.append(complex(item))
        elif isinstance(item, list) and len(item) == 2:
            out.append(complex(item[0], item[1]))
        else:
            raise ConfigError(f"z0 entries must be numbers or [re, im] pairs, got {item!r}")
    return tuple(out)


def _series_from(cfg) -> MultiIndexSeries:
    if "series" in cfg:
        return MultiIndexSeries.from_json(_require(cfg, "series", dict))
    if "testbed" in cfg:
        entry = testbed.get(_require(cfg, "testbed", str))
        ser = entry.known.get("series")
        if ser is None:
            raise ConfigError(f"testbed entry {entry.id!r} carries no series")
        return ser
    raise ConfigError("config needs either 'series' or 'testbed'")


def _radii_from(cfg, key="radii") -> list[float]:
    raw = _require(cfg, key)
    if isinstance(raw, dict):
        return list(
            geometric_radii(
                float(_require(raw, "r0")),
                float(_require(raw, "ratio")),
                int(_require(raw, "count")),
            )
        )
    if isinstance(raw, list):
        vals = [float(r) for r in raw]
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("explicit radii must be strictly decreasing")
        return vals
    raise ConfigError(f"{key} must be a list or a geometric-grid object")


def _probe_from(cfg) -> ProbeSpec:
    raw = cfg.get("probe", {})
    if not isinstance(raw, dict):
        raise ConfigError("probe must be an object")
    allowed = {
        "r0", "ratio", "steps", "window", "agree", "tol", "circle_frac", "circle_nodes",
    }
    bad = set(raw) - allowed
    if bad:
        raise ConfigError(f"unknown probe keys: {sorted(bad)}")
    return ProbeSpec(**raw)


def _jitter_radii(radii: list[float], seed: int | None, enabled: bool) -> list[float]:
    if not enabled or seed is None:
        return radii
    rng = np.random.default_rng(seed)
    return [r * (1.0 + 1e-3 * (rng.random() - 0.5)) for r in radii]


# ---------------------------------------------------------------------------
# subcommands


def _cmd_transform(cfg: dict, out: Path, threads: int, seed) -> int:
    ser = _series_from(cfg)
    z0 = _z0_from(cfg)
    spec = LaplaceSpec(z0, tol=float(cfg.get("tol", 1e-10)), max_depth=int(cfg.get("max_depth", 30)))
    func = brg_function(ser, spec)
    direction = _require(cfg, "direction", list)
    radii = _jitter_radii(_radii_from(cfg), seed, cfg.get("jitter", False))
    pts = np.asarray(
        [[r * complex(math.cos(t), math.sin(t)) for t in direction] for r in radii],
        dtype=complex,
    )
    if len(z0) == 1:
        vals, errs = truncated_laplace_with_error(
            lambda t: _borel_eval(ser, t), spec, pts[:, 0]
        )
        errs = np.asarray(errs, dtype=float)
    else:
        vals = func.eval_many(pts)
        errs = np.full(len(pts), spec.tol)
    header = []
    for j in range(len(z0)):
        header += [f"re_z{j + 1}", f"im_z{j + 1}"]
    header += ["re_F", "im_F", "est_err"]
    rows = []
    for p, v, e in zip(pts, np.atleast_1d(vals), np.atleast_1d(errs)):
        row = []
        for w in p:
            row += [w.real, w.imag]
        row += [v.real, v.imag, float(e)]
        rows.append(row)
    _write_csv(out / "transform.csv", header, rows)
    _write_csv(
        out / "series.csv",
        ["N", "abs_coeff", "abs_coeff_over_factorial"],
        [list(row) for row in ser.csv_rows()],
    )
    _write_json(
        out / "transform.json",
        {"command": "transform", "dim": len(z0), "points": len(rows), "spec": spec.to_json()},
    )
    return EXIT_OK


def _borel_eval(ser: MultiIndexSeries, t: np.ndarray) -> np.ndarray:
    from .series import borel_transform, evaluate_many

    return evaluate_many(borel_transform(ser), t[:, None])


def _cmd_type_fit(cfg: dict, out: Path, threads: int, seed) -> int:
    mode = cfg.get("mode", "gevrey")
    entry = testbed.get(_require(cfg, "testbed", str))
    directions = _require(cfg, "directions", list)
    radii = _jitter_radii(_radii_from(cfg), seed, cfg.get("jitter", False))
    rows = []
    report = {"command": "type-fit", "mode": mode, "testbed": entry.id, "directions": []}
    if mode == "gevrey":
        ser = entry.known.get("series")
        if ser is None:
            raise ConfigError(f"entry {entry.id!r} has no series for a Gevrey fit")
        z0 = entry.known.get("z0")
        if z0 is None:
            raise ConfigError(f"entry {entry.id!r} has no z0; cannot build its family")
        fam = family_from_series(ser, z0)
        n_max = int(cfg.get("n_max", 20))
        window = tuple(cfg.get("window", (4, max(6, n_max - 4))))
        floor = float(cfg.get("noise_floor", 1e-9))
        for theta in directions:
            theta_t = tuple(float(t) for t in theta) if isinstance(theta, list) else (float(theta),)
            cons = remainder_constants(
                entry.fn,
                fam,
                theta_t,
                [radii] * entry.dim,
                [(n,) * entry.dim if entry.dim > 1 else (n,) for n in range(n_max + 1)],
                noise_floor=floor,
            )
            rates, logc, rms = fit_type_from_remainders(cons, window=window)
            law = None
            profile = entry.known.get("type_profile")
            if profile is not None:
                law = [p.fn(t) for p, t in zip(profile, theta_t)]
            rows.append(list(theta_t) + list(rates) + [rms] + (law or []))
            report["directions"].append(
                {
                    "theta": list(theta_t),
                    "fitted": list(rates),
                    "rms": rms,
                    "law": law,
                }
            )
        header = [f"theta{j + 1}" for j in range(entry.dim)]
        header += [f"R{j + 1}_fit" for j in range(entry.dim)] + ["rms"]
        if report["directions"] and report["directions"][0]["law"] is not None:
            header += [f"R{j + 1}_law" for j in range(entry.dim)]
    elif mode == "flat":
        for theta in directions:
            theta_t = tuple(float(t) for t in theta) if isinstance(theta, list) else (float(theta),)
            d = Multidirection(theta_t)
            from .geometry import ray_points

            pts = ray_points(entry.fn.domain, d, [radii] * entry.dim)
            samples = [
                (tuple(abs(w) for w in pt), abs(entry.fn(pt)))
                for pt in pts
            ]
            fit = fit_flat_type(samples)
            rows.append(list(theta_t) + list(fit.rates) + [fit.residual])
            report["directions"].append(
                {"theta": list(theta_t), "rates": list(fit.rates), "residual": fit.residual}
            )
        header = [f"theta{j + 1}" for j in range(entry.dim)]
        header += [f"flat_rate{j + 1}" for j in range(entry.dim)] + ["residual"]
    else:
        raise ConfigError(f"unknown type-fit mode {mode!r}")
    _write_csv(out / "type_fit.csv", header, rows)
    _write_json(out / "type_fit.json", report)
    return EXIT_OK


def _cmd_predict_type(cfg: dict, out: Path, threads: int, seed) -> int:
    alpha = float(_require(cfg, "alpha"))
    beta = float(_require(cfg, "beta"))
    theta0 = float(_require(cfg, "theta0"))
    r0 = float(_require(cfg, "R0"))
    r_alpha = float(cfg.get("R_alpha", r0))
    r_beta = float(cfg.get("R_beta", r0))
    z0_mod = float(cfg.get("z0_mod", r0))
    profile_value = float(cfg.get("profile_value", r0))
    points = int(cfg.get("points", 181))
    if points < 2:
        raise ConfigError("points must be >= 2")
    if not alpha < theta0 < beta:
        raise ConfigError("need alpha < theta0 < beta")
    profile = TypeProfile.constant(alpha, beta, profile_value)
    margin = (beta - alpha) * 1e-9
    rows = []
    for k in range(points):
        theta = alpha + (beta - alpha) * k / (points - 1)
        theta_in = min(max(theta, alpha + margin), beta - margin)
        fz = fz_type(theta, alpha, beta, theta0, r0)
        sine = sine_type(theta, alpha, beta, theta0, r0) if beta - alpha < math.pi else float("nan")
        circ = circle_type(r_alpha, r_beta, alpha, beta, theta)
        if abs(theta - theta0) < 0.5 * math.pi:
            rt = r_tilde(z0_mod, theta, theta0)[0]
        else:
            rt = float("nan")
        try:
            fin = final_type((theta_in,), (theta0,), (r0,), (profile,))[0]
        except DomainError:
            fin = float("nan")
        rows.append([theta, fz, sine, circ, rt, fin])
    _write_csv(
        out / "predict_type.csv",
        ["theta", "fz_type", "sine_type", "circle_type", "r_tilde", "final_type"],
        rows,
    )
    _write_json(
        out / "predict_type.json",
        {
            "command": "predict-type",
            "alpha": alpha,
            "beta": beta,
            "theta0": theta0,
            "R0": r0,
            "points": points,
        },
    )
    return EXIT_OK


def _cmd_verify(cfg: dict, out: Path, threads: int, seed) -> int:
    suite = _require(cfg, "suite", str)
    if suite == "coherence":
        tol = float(cfg.get("tol", 1e-6))
        if "series" in cfg or "z0" in cfg:
            ser = _series_from(cfg)
            fam = family_from_series(ser, _z0_from(cfg))
        else:
            entry = testbed.get(_require(cfg, "testbed", str))
            fam = entry.known.get("total_family")
            if fam is None:
                raise ConfigError(f"entry {entry.id!r} has no total family")
        rep = check_coherence(
            fam,
            tol,
            probe=_probe_from(cfg) if "probe" in cfg else None,
            max_order=int(cfg.get("max_order", 3)),
            samples_per_axis=int(cfg.get("samples_per_axis", 2)),
            threads=threads,
        )
        ok = rep.ok() and not rep.probe_failures
        _write_json(out / "coherence.json", {"ok": ok, "report": rep.to_json()})
        return EXIT_OK if ok else EXIT_VERDICT_FAIL
    if suite == "pl":
        entry = testbed.get(_require(cfg, "testbed", str))
        poly = Polysector.from_json(_require(cfg, "polysector", dict))
        rep = pl_check(
            entry.fn,
            poly,
            boundary_density=int(cfg.get("boundary_density", 6)),
            interior_samples=int(cfg.get("interior_samples", 6)),
            tol=float(cfg.get("tol", 1e-9)),
            growth_attestation=cfg.get("growth_attestation"),
            threads=threads,
        )
        _write_json(out / "pl.json", {"ok": rep.ok(), "report": rep.to_json()})
        return EXIT_OK if rep.ok() else EXIT_VERDICT_FAIL
    if suite == "remainder":
        entry = testbed.get(_require(cfg, "testbed", str))
        ser = entry.known.get("series")
        z0 = entry.known.get("z0")
        profile = entry.known.get("type_profile")
        if ser is None or z0 is None or profile is None:
            raise ConfigError(f"entry {entry.id!r} lacks series/z0/type data")
        fam = family_from_series(ser, z0)
        radii = _radii_from(cfg)
        n_max = int(cfg.get("n_max", 20))
        rel_tol = float(cfg.get("rel_tol", 0.15))
        results = []
        ok = True
        for theta in _require(cfg, "directions", list):
            theta_t = tuple(float(t) for t in theta) if isinstance(theta, list) else (float(theta),)
            cons = remainder_constants(
                entry.fn, fam, theta_t, [radii] * entry.dim,
                [(n,) for n in range(n_max + 1)], noise_floor=float(cfg.get("noise_floor", 1e-9)),
            )
            rates, _, rms = fit_type_from_remainders(cons, window=tuple(cfg.get("window", (4, 16))))
            law = [p.fn(t) for p, t in zip(profile, theta_t)]
            rel = max(abs(r - l) / l for r, l in zip(rates, law))
            ok = ok and rel <= rel_tol
            results.append(
                {"theta": list(theta_t), "fitted": list(rates), "law": law, "rel_err": rel}
            )
        _write_json(out / "remainder.json", {"ok": ok, "rel_tol": rel_tol, "directions": results})
        return EXIT_OK if ok else EXIT_VERDICT_FAIL
    if suite == "first-order":
        entry = testbed.get(_require(cfg, "testbed", str))
        fam1 = entry.known.get("first_order")
        if fam1 is None:
            raise ConfigError(f"entry {entry.id!r} has no first-order family")
        rep = check_first_order_coherence(
            fam1, float(cfg.get("tol", 1e-6)), max_order=int(cfg.get("max_order", 2))
        )
        ok = rep.ok() and not rep.probe_failures
        _write_json(out / "first_order.json", {"ok": ok, "report": rep.to_json()})
        return EXIT_OK if ok else EXIT_VERDICT_FAIL
    raise ConfigError(f"unknown verify suite {suite!r}")


def _cmd_interpolate(cfg: dict, out: Path, threads: int, seed) -> int:
    name = _require(cfg, "testbed", str)
    if name != "rat2":
        raise ConfigError("interpolate currently drives the rat2 first-order family")
    opening = float(cfg.get("opening", 1.2))
    cap = int(cfg.get("cap", 16))
    z0 = _z0_from(cfg) if "z0" in cfg else (0.92, 0.92)
    fam1 = testbed.rat2_first_order_family(opening=opening, cap=cap)
    profiles = [TypeProfile.constant(-opening, opening, float(cfg.get("profile_value", 1.0)))] * 2
    inner_defaults = dict(r0=0.3, ratio=0.7, steps=20, tol=1e-11, circle_frac=0.75, circle_nodes=128)
    inner_defaults.update(cfg.get("inner_probe", {}))
    inner = ProbeSpec(**inner_defaults)
    func = interpolate_first_order(
        fam1,
        profiles,
        z0,
        probe=inner,
        coeff_cap=int(cfg.get("coeff_cap", 10)),
        precheck_tol=cfg.get("precheck_tol", 1e-3),
        precheck_orders=int(cfg.get("precheck_orders", 1)),
    )
    samples = [float(s) for s in cfg.get("samples", [0.02 * 1.13**k for k in range(10)])]
    orders = int(cfg.get("orders", 3))
    probe_defaults = dict(r0=0.2, ratio=0.75, steps=16, tol=1e-5, circle_frac=0.75, circle_nodes=128)
    probe_defaults.update(cfg.get("probe", {}))
    probe = ProbeSpec(**probe_defaults)
    rows = []
    worst = 0.0
    for axis in (0, 1):
        for k in range(orders + 1):
            for sv in samples:
                res = extract_element(func, (axis,), (k,), (sv,), probe=probe, strict=False)
                true = (-1.0) ** k / (1.0 + sv)
                err = abs(res.value - true)
                worst = max(worst, err)
                rows.append(
                    [axis + 1, k, sv, res.value.real, res.value.imag, true, err, res.error]
                )
    tol = float(cfg.get("tol", 1e-4))
    _write_csv(
        out / "interpolate.csv",
        ["axis", "order", "z", "re_extracted", "im_extracted", "true", "abs_err", "probe_err"],
        rows,
    )
    _write_json(
        out / "interpolate.json",
        {"command": "interpolate", "worst_abs_err": worst, "tol": tol, "ok": worst <= tol},
    )
    return EXIT_OK if worst <= tol else EXIT_VERDICT_FAIL


def _cmd_list_testbed(cfg: dict, out: Path | None, threads: int, seed) -> int:
    lines = []
    payload = []
    for entry_id in testbed.ids():
        entry = testbed.get(entry_id)
        fields = {}
        for key in sorted(entry.known):
            fields[key] = entry.notes[key]
        payload.append({"id": entry.id, "dim": entry.dim, "known": fields})
        lines.append(f"{entry.id} (dim {entry.dim})")
        for key, note in fields.items():
            lines.append(f"    {key}: {note}")
    print("\n".join(lines))
    if out is not None:
        _write_json(out / "testbed.json", {"entries": payload})
    return EXIT_OK


_COMMANDS = {
    "transform": _cmd_transform,
    "type-fit": _cmd_type_fit,
    "predict-type": _cmd_predict_type,
    "verify": _cmd_verify,
    "interpolate": _cmd_interpolate,
    "list-testbed": _cmd_list_testbed,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        print("usage: polygevrey <command> [--config PATH] [--out DIR] [--threads N] [--seed N]")
        print("commands:", ", ".join(sorted(_COMMANDS)))
        return EXIT_UNKNOWN_COMMAND
    command = argv[0]
    if command in ("-h", "--help"):
        print(__doc__)
        print("commands:", ", ".join(sorted(_COMMANDS)))
        return EXIT_OK
    if command not in _COMMANDS:
        print(f"unknown subcommand {command!r}", file=sys.stderr)
        return EXIT_UNKNOWN_COMMAND
    parser = argparse.ArgumentParser(prog=f"polygevrey {command}", add_help=True)
    parser.add_argument("--config", help="JSON experiment configuration")
    parser.add_argument("--out", default=".", help="output directory for reports")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None, help="jitter seed (off unless config enables jitter)")
    try:
        args = parser.parse_args(argv[1:])
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code not in (0, None) else EXIT_OK
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if command == "list-testbed":
            cfg = _load_config(args.config) if args.config else {}
        else:
            if not args.config:
                raise ConfigError(f"{command} requires --config")
            cfg = _load_config(args.config)
        return _COMMANDS[command](cfg, out, max(1, args.threads), args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (QuadratureError, TailError, ProbeError, CoherenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        _write_json(out / "error.json", {"error": str(exc), "command": command})
        return EXIT_NUMERICAL
    except (DomainError, PolygevreyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    raise SystemExit(main())
