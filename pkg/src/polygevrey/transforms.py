"""Truncated Laplace transforms and the interpolation constructions built on them.

The quadrature backbone is adaptive composite Gauss-Legendre: 15-point panels
with recursive bisection on the segment parameter.  The kernel e^{-s z0/z} is
smooth but decays sharply when |z| is small, so the panels concentrate near
s = 0 exactly where adaptivity pays off.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_legendre

from .errors import DomainError, ProbeError, QuadratureError, SeriesError, TailError
from .geometry import Polysector, Sector
from .series import (
    MultiIndexSeries,
    borel_transform,
    evaluate_many,
    fit_gevrey_type,
    gamma1_norm,
)

_GL_NODES, _GL_WEIGHTS = roots_legendre(15)
_GL_NODES = np.asarray(_GL_NODES)
_GL_WEIGHTS = np.asarray(_GL_WEIGHTS)


@dataclass(frozen=True)
class LaplaceSpec:
    """Integration endpoints and quadrature controls for truncated Laplace transforms."""

    z0: tuple[complex, ...]
    tol: float = 1e-10
    max_depth: int = 30
    scheme: str = "gl15"

    def __init__(self, z0, tol: float = 1e-10, max_depth: int = 30, scheme: str = "gl15"):
        if isinstance(z0, (complex, float, int)):
            z0 = (z0,)
        z0 = tuple(complex(w) for w in z0)
        if any(w == 0 for w in z0):
            raise DomainError("integration endpoints must be nonzero")
        if not tol > 0:
            raise DomainError("quadrature tolerance must be positive")
        if scheme != "gl15":
            raise DomainError(f"unknown quadrature scheme {scheme!r}")
        object.__setattr__(self, "z0", z0)
        object.__setattr__(self, "tol", float(tol))
        object.__setattr__(self, "max_depth", int(max_depth))
        object.__setattr__(self, "scheme", scheme)

    @property
    def dim(self) -> int:
        return len(self.z0)

    def to_json(self) -> dict:
        return {
            "z0": [[w.real, w.imag] for w in self.z0],
            "tol": self.tol,
            "max_depth": self.max_depth,
            "scheme": self.scheme,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LaplaceSpec":
        try:
            z0 = tuple(complex(p[0], p[1]) for p in obj["z0"])
        except (KeyError, TypeError, IndexError) as exc:
            raise DomainError(f"bad Laplace spec: {obj!r}") from exc
        return cls(
            z0,
            tol=float(obj.get("tol", 1e-10)),
            max_depth=int(obj.get("max_depth", 30)),
            scheme=obj.get("scheme", "gl15"),
        )


@dataclass(frozen=True)
class SampledFunction:
    """Holomorphic function represented by an evaluation callback on a polysector.

    ``fn`` receives a complex array of shape (k, dim) when ``vectorized`` is
    true, else a tuple of complex coordinates.  Callbacks must be pure.
    """

    domain: Polysector
    fn: Callable
    vectorized: bool = True
    derivative_hint: int | None = None

    def __call__(self, zs) -> complex:
        if isinstance(zs, (complex, float, int)):
            zs = (zs,)
        if self.vectorized:
            pts = np.asarray([tuple(zs)], dtype=complex)
            return complex(self.fn(pts)[0])
        return complex(self.fn(tuple(zs)))

    def eval_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        if self.vectorized:
            return np.asarray(self.fn(pts), dtype=complex)
        return np.asarray([self.fn(tuple(p)) for p in pts], dtype=complex)


def _gl_panel(fvec, a: float, b: float):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    vals = fvec(mid + half * _GL_NODES)
    return half * np.tensordot(_GL_WEIGHTS, vals, axes=(0, 0))


def adaptive_panel_quad(
    fvec: Callable[[np.ndarray], np.ndarray],
    a: float = 0.0,
    b: float = 1.0,
    tol: float = 1e-10,
    max_depth: int = 30,
):
    """Adaptive composite 15-point Gauss-Legendre on [a, b].

    ``fvec`` maps an (m,) array of abscissae to an (m, ...) array of complex
    integrand values; trailing axes are integrated in one shared refinement
    tree (a panel is split while any batch column still fails its share of
    the tolerance budget).  Returns (value, error_estimate).
    """
    total_len = b - a
    eps = float(np.finfo(float).eps)
    whole = _gl_panel(fvec, a, b)
    value = np.zeros_like(whole)
    err = np.zeros(np.shape(whole), dtype=float)
    # roundoff floor: panel estimates cannot beat eps * (integrand scale) * length
    scale = float(np.max(np.abs(whole))) / total_len
    stack = [(a, b, whole, 0)]
    while stack:
        lo, hi, coarse, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _gl_panel(fvec, lo, mid)
        right = _gl_panel(fvec, mid, hi)
        fine = left + right
        panel_len = hi - lo
        scale = max(scale, float(np.max(np.abs(fine))) / panel_len)
        panel_err = np.abs(fine - coarse)
        budget = panel_len * max(tol / total_len, 8.0 * eps * scale)
        if np.max(panel_err) <= budget or depth >= max_depth:
            if depth >= max_depth and np.max(panel_err) > budget:
                raise QuadratureError(
                    f"quadrature stalled at depth {depth} with error {np.max(panel_err):.3e}",
                    partial=value + fine,
                    error=float(np.max(err + panel_err)),
                )
            value = value + fine
            err = err + panel_err
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    return value, err


def _require_half_plane(z0: complex, z: np.ndarray):
    w = z0 / z
    if np.any(w.real <= 0):
        raise DomainError(
            "z outside the half-plane sector: need |arg z - arg z0| < pi/2 on every point"
        )
    return w


def truncated_laplace_with_error(
    phi: Callable[[np.ndarray], np.ndarray],
    spec: LaplaceSpec,
    z,
    axis: int = 0,
):
    """(1/z) * integral of phi(t) e^{-t/z} dt over the segment [0, z0].

    Parametrized as t = s z0, s in [0, 1].  ``phi`` maps an array of t values
    to an array of the same shape.  ``z`` may be a scalar or a 1-D array; the
    quadrature refinement tree is shared across the batch.
    """
    z0 = spec.z0[axis]
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z_arr == 0):
        raise DomainError("z must be nonzero")
    w = _require_half_plane(z0, z_arr)

    def fvec(s: np.ndarray) -> np.ndarray:
        ph = np.asarray(phi(s * z0), dtype=complex)
        kern = w[None, :] * np.exp(-np.multiply.outer(s, w))
        return ph[:, None] * kern

    val, err = adaptive_panel_quad(fvec, 0.0, 1.0, spec.tol, spec.max_depth)
    if np.isscalar(z) or np.asarray(z).ndim == 0:
        return complex(val[0]), float(err[0])
    return val, err


def truncated_laplace(phi, spec: LaplaceSpec, z, axis: int = 0):
    """Value-only form of :func:`truncated_laplace_with_error`."""
    val, _ = truncated_laplace_with_error(phi, spec, z, axis=axis)
    return val


def truncated_laplace_nd(
    phi: Callable[[np.ndarray], np.ndarray],
    spec: LaplaceSpec,
    z: Sequence[complex],
) -> complex:
    """Iterated truncated Laplace transform over all axes of ``spec.z0``.

    ``phi`` maps an array of points with shape (k, n) to a (k,) array.  Axis 0
    is integrated outermost, the last axis innermost; each level runs the 1-D
    adaptive quadrature with the inner levels evaluated at its panel nodes.
    """
    n = spec.dim
    zt = tuple(complex(w) for w in z)
    if len(zt) != n:
        raise DomainError(f"point has {len(zt)} coordinates, spec has {n}")
    ws = []
    for j in range(n):
        if zt[j] == 0:
            raise DomainError("z components must be nonzero")
        ws.append(_require_half_plane(spec.z0[j], np.asarray([zt[j]]))[0])

    def level(j: int, prefix: np.ndarray) -> np.ndarray:
        nb = prefix.shape[0]
        wj = ws[j]
        z0j = spec.z0[j]

        def fvec(s: np.ndarray) -> np.ndarray:
            m = s.size
            tj = s * z0j
            pts = np.empty((m * nb, j + 1), dtype=complex)
            pts[:, :j] = np.tile(prefix, (m, 1))
            pts[:, j] = np.repeat(tj, nb)
            inner = phi(pts) if j == n - 1 else level(j + 1, pts)
            kern = wj * np.exp(-s * wj)
            return np.asarray(inner, dtype=complex).reshape(m, nb) * kern[:, None]

        val, _ = adaptive_panel_quad(fvec, 0.0, 1.0, spec.tol, spec.max_depth)
        return val

    start = np.zeros((1, 0), dtype=complex)
    return complex(level(0, start)[0])


def brg_type(z0: Sequence[complex], theta: Sequence[float]) -> tuple[float, ...]:
    """Per-axis type |z0_j| cos(theta_j - arg z0_j) of the truncated-Laplace expansion."""
    z0 = tuple(complex(w) for w in z0)
    thetas = tuple(float(t) for t in theta)
    if len(z0) != len(thetas):
        raise DomainError("one direction per axis required")
    out = []
    for w, t in zip(z0, thetas):
        gap = t - cmath.phase(w)
        if not abs(gap) < 0.5 * math.pi:
            raise DomainError(f"direction {t} outside the half-plane around arg z0 = {cmath.phase(w)}")
        out.append(abs(w) * math.cos(gap))
    return tuple(out)


def half_plane_polysector(z0: Sequence[complex]) -> Polysector:
    """Product of the half-plane sectors bisected by the arguments of z0."""
    return Polysector(
        Sector(cmath.phase(w) - 0.5 * math.pi, cmath.phase(w) + 0.5 * math.pi, math.inf)
        for w in z0
    )


def _borel_tail_bound(fhat: MultiIndexSeries, types: Sequence[float], t_mods: Sequence[float]) -> float:
    """Bound on the dropped Borel-sum tail beyond the stored degree, from the Gamma^1 envelope."""
    weights = [min(r, 1e12) for r in types]
    norm = gamma1_norm(fhat, weights)
    if norm == 0:
        return 0.0
    qs = [max(tm / r, 0.0) for tm, r in zip(t_mods, types)]
    if any(q >= 1 for q in qs):
        return math.inf
    full = 1.0
    stored = 1.0
    for q, d in zip(qs, fhat.degree_bound):
        full *= 1.0 / (1.0 - q)
        stored *= (1.0 - q ** (d + 1)) / (1.0 - q) if q > 0 else 1.0
    return norm * (full - stored)


def brg_function(fhat: MultiIndexSeries, spec: LaplaceSpec) -> SampledFunction:
    """Truncated Laplace transform of the Borel sum of a 1-Gevrey series.

    The result is holomorphic on the product of half-planes around the
    arguments of z0 and carries the series' family as its expansion, with the
    cosine type law of :func:`brg_type`.  The Borel sum is evaluated from the
    stored coefficients; evaluation stays inside |t_j| <= 0.9 R_j and the
    a-posteriori tail bound (from the fitted Gevrey envelope) must clear the
    quadrature tolerance.
    """
    if fhat.dim != spec.dim:
        raise DomainError("series dimension and spec dimension disagree")
    domain = half_plane_polysector(spec.z0)
    if fhat.n_nonzero == 0:
        return SampledFunction(domain, lambda pts: np.zeros(len(pts), dtype=complex))

    try:
        fit = fit_gevrey_type(fhat)
        types = fit.type_estimate
    except SeriesError:
        # too few coefficients to fit a rate; treat the type as unbounded
        types = (math.inf,) * fhat.dim
    for j, w in enumerate(spec.z0):
        if not abs(w) < types[j]:
            raise DomainError(
                f"z0 outside the Borel disc on axis {j}: |z0|={abs(w):.6g}, type={types[j]:.6g}"
            )
        if abs(w) > 0.9 * types[j]:
            raise TailError(
                f"Borel sum restricted to |t| <= 0.9 R: |z0|={abs(w):.6g} vs R={types[j]:.6g}"
            )
    tail = _borel_tail_bound(fhat, types, [abs(w) for w in spec.z0])
    if not tail <= spec.tol:
        raise TailError(
            f"Borel-sum tail bound {tail:.3e} exceeds quadrature tolerance {spec.tol:.3e}"
        )
    phi_series = borel_transform(fhat)

    def phi(pts: np.ndarray) -> np.ndarray:
        return evaluate_many(phi_series, pts)

    if fhat.dim == 1:

        def fn(pts: np.ndarray) -> np.ndarray:
            vals, _ = truncated_laplace_with_error(
                lambda t: evaluate_many(phi_series, t[:, None]), spec, pts[:, 0]
            )
            return np.atleast_1d(vals)

    else:

        def fn(pts: np.ndarray) -> np.ndarray:
            return np.asarray([truncated_laplace_nd(phi, spec, p) for p in pts], dtype=complex)

    return SampledFunction(domain, fn)


# ---------------------------------------------------------------------------
# first-order interpolation (two variables)


def interpolate_first_order(
    fam1,
    profiles,
    z0: Sequence[complex],
    spec: LaplaceSpec | None = None,
    probe=None,
    coeff_cap: int = 8,
    precheck_tol: float | None = 1e-4,
    precheck_orders: int = 1,
) -> SampledFunction:
    """Interpolate a coherent two-variable first-order family.

    Two passes.  First, the truncated Laplace transform along axis 0 of the
    exponential generating series of the axis-0 sequence; its axis-1
    coefficient functions are then extracted by the same radius-ladder
    machinery that backs :func:`polygevrey.families.extract_element`.  Second,
    the axis-1 transform of the generating series of the corrected axis-1
    sequence.  The sum of the two passes has the given family as its
    first-order family, which is the postcondition contract tested by
    extraction.

    ``coeff_cap`` bounds the number of corrected axis-1 coefficients: high
    orders are both numerically fragile to extract and strongly damped by the
    t^m/m! weights, so a small cap loses nothing at the evaluation accuracy
    the quadrature provides.
    """
    from .errors import CoherenceError
    from .families import (
        FirstOrderFamily,
        ProbeSpec,
        axis_coefficient_ladder,
        check_first_order_coherence,
    )

    if fam1.dim != 2:
        raise DomainError("interpolation implemented for two variables")
    host = fam1.host
    s2 = host.sectors[1]
    z0 = tuple(complex(w) for w in z0)
    if len(z0) != 2:
        raise DomainError("z0 must have two components")
    for j, (sec, w) in enumerate(zip(host.sectors, z0)):
        if sec.opening > math.pi + 1e-12:
            raise DomainError(f"axis {j} opening exceeds pi")
        t0 = cmath.phase(w)
        if sec.alpha < t0 - 0.5 * math.pi - 1e-12 or sec.beta > t0 + 0.5 * math.pi + 1e-12:
            raise DomainError(f"axis {j} sector not contained in the half-plane around arg z0")
        if not abs(w) < profiles[j].sup():
            raise DomainError(f"|z0| on axis {j} must stay below the profile sup")
    probe = probe or ProbeSpec()
    spec = spec or LaplaceSpec(z0, tol=1e-13, max_depth=45)

    if precheck_tol is not None:
        report = check_first_order_coherence(
            fam1, precheck_tol, probe.light(), max_order=precheck_orders
        )
        if report.failures:
            raise CoherenceError(
                f"first-order family fails coherence at {precheck_tol:g}: "
                f"max residual {report.max_residual:.3e}",
                report=report,
            )

    f1 = fam1.sequences[0]
    f2 = fam1.sequences[1]
    n_cap = len(f1) - 1
    m_cap = min(len(f2) - 1, coeff_cap)
    inv_fact1 = np.array([1.0 / math.factorial(n) for n in range(n_cap + 1)])
    inv_fact2 = np.array([1.0 / math.factorial(m) for m in range(m_cap + 1)])
    w01, w02 = z0

    def h1_eval(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
        """First pass at paired points (vectorized over the pair batch)."""
        fvals = np.stack([el.eval_many(z2.reshape(-1, 1)) for el in f1])  # (n_cap+1, k)
        w = w01 / z1

        def fvec(s: np.ndarray) -> np.ndarray:
            t = s * w01
            tp = np.vander(t, n_cap + 1, increasing=True) * inv_fact1  # (m, n_cap+1)
            phi = tp @ fvals  # (m, k)
            kern = w[None, :] * np.exp(-np.multiply.outer(s, w))
            return phi * kern

        val, _ = adaptive_panel_quad(fvec, 0.0, 1.0, spec.tol, spec.max_depth)
        return val

    # corrected axis-1 coefficients c_m(z1) = f_{2m}(z1) - h2m(z1), cached per z1
    coeff_cache: dict[complex, np.ndarray] = {}

    def corrected_coeffs(z1s: np.ndarray) -> np.ndarray:
        missing = [z for z in z1s.tolist() if z not in coeff_cache]
        if missing:
            batch = np.asarray(missing, dtype=complex)

            def evalfn(w: np.ndarray) -> np.ndarray:
                z1g = np.repeat(batch[None, :], w.size, axis=0).ravel()
                z2g = np.repeat(w, batch.size)
                return h1_eval(z1g, z2g).reshape(w.size, batch.size)

            vals, errs, conv, _ = axis_coefficient_ladder(
                evalfn, s2, list(range(m_cap + 1)), probe
            )
            if not np.all(conv[: min(2, m_cap + 1)]):
                worst = float(np.max(errs[: min(2, m_cap + 1)]))
                raise ProbeError(
                    f"low-order corrected coefficients unconverged (error {worst:.3e})"
                )
            f2vals = np.stack([el.eval_many(batch.reshape(-1, 1)) for el in f2[: m_cap + 1]])
            corrected = f2vals - vals
            for i, z in enumerate(missing):
                coeff_cache[z] = corrected[:, i].copy()
        return np.stack([coeff_cache[z] for z in z1s.tolist()], axis=1)  # (m_cap+1, k)

    def h2_eval(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
        cm = corrected_coeffs(z1)  # (m_cap+1, k)
        w = w02 / z2

        def fvec(s: np.ndarray) -> np.ndarray:
            t = s * w02
            tp = np.vander(t, m_cap + 1, increasing=True) * inv_fact2
            phi = tp @ cm
            kern = w[None, :] * np.exp(-np.multiply.outer(s, w))
            return phi * kern

        val, _ = adaptive_panel_quad(fvec, 0.0, 1.0, spec.tol, spec.max_depth)
        return val

    def fn(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        return h1_eval(pts[:, 0], pts[:, 1]) + h2_eval(pts[:, 0], pts[:, 1])

    return SampledFunction(host, fn, vectorized=True)
