"""Exponential-flatness fits, Gevrey envelopes, explicit wedge bounds, and a
numerical maximum-principle checker.

The flat <-> null-Gevrey conversions are type-exact: only the prefactors
move, and those are existential, so the conversion functions return the types
unchanged and the bookkeeping lives in documentation and reports.
"""

from __future__ import annotations

import cmath
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, GeometryError, SeriesError
from .geometry import Multidirection, Polysector, distinguished_boundary_points, ray_points
from .series import rate_fit
from .transforms import SampledFunction


@dataclass(frozen=True)
class FlatFit:
    """Per-axis exponential decay rates fitted along a ray grid.

    A zero rate means "merely bounded along this axis": the axis contributes
    no decaying exponential and its term drops from the envelope.
    """

    rates: tuple[float, ...]
    log_prefactor: float
    residual: float
    bounded_only: tuple[bool, ...]
    zero_samples: int = 0

    def __post_init__(self):
        if any(r < 0 for r in self.rates):
            raise SeriesError("flat rates must be nonnegative")
        if self.residual < 0:
            raise SeriesError("negative residual")


def fit_flat_type(samples: Sequence[tuple[Sequence[float], float]]) -> FlatFit:
    """Regress -log|f| against (1/r_1, ..., 1/r_n): slopes are the flat rates.

    ``samples`` holds (per-axis radii, |f|) pairs gathered along a ray grid.
    The radii must vary independently per axis (a cartesian grid does) or the
    regression is singular; spanning at least a decade keeps the slopes well
    conditioned.  Exact zeros carry no slope information: they are excluded
    and counted.
    """
    kept = []
    zeros = 0
    dim = None
    for radii, mag in samples:
        radii = tuple(float(r) for r in radii)
        if dim is None:
            dim = len(radii)
        elif len(radii) != dim:
            raise DomainError("inconsistent sample dimensions")
        if any(r <= 0 for r in radii):
            raise DomainError("radii must be positive")
        if mag == 0:
            zeros += 1
            continue
        kept.append((radii, float(mag)))
    if dim is None or len(kept) < dim + 1:
        raise DomainError("need at least n+1 samples with |f| > 0")
    preds = [[1.0 / r for r in radii] for radii, _ in kept]
    logs = [math.log(mag) for _, mag in kept]
    slopes, intercept, rms = rate_fit(preds, [-v for v in logs])
    # model: -log|f| = R . (1/r) - log M; slopes at roundoff scale mean
    # "merely bounded", same as genuinely negative ones
    rates = []
    bounded = []
    for s in slopes:
        if s < 1e-12:
            rates.append(0.0)
            bounded.append(True)
        else:
            rates.append(float(s))
            bounded.append(False)
    return FlatFit(tuple(rates), -intercept, rms, tuple(bounded), zeros)


def gevrey_envelope_log(c: float, a: float, r: float, n_cap: int | None = None) -> float:
    """log of min over N <= N_cap of C A^N N! r^N.

    The continuous minimizer sits near 1/(A e r); the default cap
    ceil(2/(A r)) + 10 brackets it with margin.  The log is the primitive:
    the envelope itself underflows doubles once 1/(A r) passes ~700.
    """
    if c <= 0 or a <= 0 or r <= 0:
        raise DomainError("c, a, r must be positive")
    if n_cap is None:
        n_cap = math.ceil(2.0 / (a * r)) + 10
    ns = np.arange(0, n_cap + 1, dtype=float)
    logs = math.log(c) + ns * (math.log(a) + math.log(r)) + np.vectorize(math.lgamma)(ns + 1.0)
    return float(np.min(logs))


def gevrey_envelope(c: float, a: float, r: float, n_cap: int | None = None) -> float:
    """min over N <= N_cap of C A^N N! r^N (exp of :func:`gevrey_envelope_log`)."""
    return math.exp(gevrey_envelope_log(c, a, r, n_cap))


def flat_to_gevrey(rates: Sequence[float]) -> tuple[float, ...]:
    """Types are preserved by the flat -> null-Gevrey direction; only prefactors move."""
    out = tuple(float(r) for r in rates)
    if any(r < 0 for r in out):
        raise DomainError("rates must be nonnegative")
    return out


def gevrey_to_flat(rates: Sequence[float]) -> tuple[float, ...]:
    """Mirror of :func:`flat_to_gevrey`; composition both ways is the identity."""
    return flat_to_gevrey(rates)


def h_aux(z: complex, alpha: float, beta: float, lam: float, c: float) -> complex:
    """Auxiliary exponent with |e^{h(z)}| = (C/|z|^lambda)^{(beta-theta)/(beta-alpha)}.

    The log branch is pinned so arg z lies nearest the wedge [alpha, beta].
    """
    if z == 0:
        raise DomainError("h is undefined at the vertex")
    if not (alpha < beta and lam > 0 and c > 0):
        raise DomainError("need alpha < beta, lambda > 0, C > 0")
    theta = cmath.phase(z)
    mid = 0.5 * (alpha + beta)
    theta += 2.0 * math.pi * round((mid - theta) / (2.0 * math.pi))
    logz = complex(math.log(abs(z)), theta)
    width = beta - alpha
    return (
        (-1j * lam / (2.0 * width)) * logz * logz
        + ((-lam * beta + 1j * math.log(c)) / width) * logz
        + beta * math.log(c) / width
    )


def wedge_bound(
    z: Sequence[complex],
    alphas: Sequence[float],
    betas: Sequence[float],
    lams: Sequence[float],
    c: float,
    eps: float,
) -> float:
    """Bound kernel (C |z|^lambda)^{(1-eps)^n prod mu_j}, mu_j = (beta_j - arg z_j)/(beta_j - alpha_j).

    The multiplicative constant in front is existential and not computed; the
    returned kernel is what empirical fits calibrate against.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    if c <= 0:
        raise DomainError("C must be positive")
    n = len(z)
    if not (len(alphas) == len(betas) == len(lams) == n):
        raise DomainError("per-axis argument lengths disagree")
    mu = 1.0
    base = c
    for zj, aj, bj, lj in zip(z, alphas, betas, lams):
        if zj == 0:
            raise DomainError("wedge bound undefined at the vertex")
        theta = cmath.phase(zj)
        mid = 0.5 * (aj + bj)
        theta += 2.0 * math.pi * round((mid - theta) / (2.0 * math.pi))
        if not aj - 1e-12 <= theta <= bj + 1e-12:
            raise DomainError(f"arg z = {theta} outside the wedge [{aj}, {bj}]")
        mu *= (bj - min(max(theta, aj), bj)) / (bj - aj)
        base *= abs(zj) ** lj
    return base ** ((1.0 - eps) ** n * mu)


def fit_wedge_constant(
    samples: Sequence[tuple[Sequence[complex], float]],
    alphas: Sequence[float],
    betas: Sequence[float],
    lams: Sequence[float],
    c: float,
    eps: float,
) -> float:
    """Empirical prefactor: sup over samples of |f| / wedge_bound.

    The constant in the wedge estimate is existential; this is the smallest
    multiplier that makes the bound kernel cover the supplied samples.
    """
    best = 0.0
    for z, mag in samples:
        kernel = wedge_bound(z, alphas, betas, lams, c, eps)
        if kernel > 0:
            best = max(best, mag / kernel)
    return best


def wedge_shift_search(
    eps: float,
    c: float,
    lam: float,
    alpha: float,
    t_samples: int = 48,
    phi_samples: int = 17,
    max_doublings: int = 60,
    bisections: int = 60,
) -> float:
    """Smallest shift a for the half-plane comparison argument, as a diagnostic.

    Searches the least a > 1 with c / a^lam < 1 such that, over the shifted
    region a e^{i alpha} + closure(S(-alpha, alpha; inf)), the sampled ratio
    (arg(z - e^{i alpha}) + alpha) / (arg z + alpha) stays >= 1 - eps.  The
    ratio improves monotonically with a, so bisection applies.  No closed
    form is claimed; the output is a sampled diagnostic only.
    """
    if not (0.0 < eps < 1.0 and c > 0 and lam > 0 and 0 < alpha < 0.25 * math.pi):
        raise DomainError("need eps in (0,1), c > 0, lam > 0, alpha in (0, pi/4)")
    z0 = cmath.exp(1j * alpha)

    def ratio_ok(a: float) -> bool:
        base = a * z0
        for i in range(phi_samples):
            phi = -alpha + 2 * alpha * i / (phi_samples - 1)
            direction = cmath.exp(1j * phi)
            for k in range(t_samples):
                t = 1e-3 * a * (1e7) ** (k / (t_samples - 1))
                z = base + t * direction
                theta = cmath.phase(z)
                theta0 = cmath.phase(z - z0)
                denom = theta + alpha
                if denom <= 0:
                    continue
                if (theta0 + alpha) / denom < 1.0 - eps:
                    return False
        return True

    lo = max(1.0 + 1e-9, c ** (1.0 / lam) * (1.0 + 1e-9))
    hi = lo
    for _ in range(max_doublings):
        if ratio_ok(hi):
            break
        hi *= 2.0
    else:
        raise DomainError("no admissible shift found within the search range")
    if ratio_ok(lo):
        return lo
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        if ratio_ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class BoundReport:
    """Boundary sup versus interior sup, with the offending points if any."""

    boundary_max: float
    interior_max: float
    violations: tuple
    tolerance: float
    eval_failures: int = 0
    growth_attestation: str | None = None

    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "boundary_max": self.boundary_max,
            "interior_max": self.interior_max,
            "tolerance": self.tolerance,
            "eval_failures": self.eval_failures,
            "growth_attestation": self.growth_attestation,
            "violations": [
                {"z": [[w.real, w.imag] for w in pt], "abs": v} for pt, v in self.violations
            ],
        }


def _interior_grid(s: Polysector, per_axis: int) -> list[tuple[complex, ...]]:
    axes = []
    for sec in s.sectors:
        if not sec.bounded:
            raise GeometryError("interior sampling needs bounded sectors")
        pts = []
        n_ang = max(2, per_axis // 2)
        n_rad = max(2, per_axis - n_ang)
        for i in range(n_ang):
            theta = sec.alpha + sec.opening * (i + 1) / (n_ang + 1)
            for k in range(n_rad):
                r = sec.rho * 0.9 * (0.55**k)
                pts.append(r * cmath.exp(1j * theta))
        axes.append(pts)
    return [tuple(p) for p in itertools.product(*axes)]


def pl_check(
    f: SampledFunction,
    s: Polysector,
    boundary_density: int = 6,
    interior_samples: int = 6,
    tol: float = 1e-9,
    growth_attestation: str | None = None,
    threads: int = 1,
) -> BoundReport:
    """Compare |f| on the distinguished boundary against interior samples.

    The subexponential-growth hypothesis that makes the principle valid is
    the caller's responsibility; pass ``growth_attestation`` to record it.
    Evaluation failures are collected, not fatal.
    """
    boundary = distinguished_boundary_points(s, boundary_density)
    interior = _interior_grid(s, interior_samples)

    failures = 0

    def probe(points):
        nonlocal failures
        vals = []
        for pt in points:
            try:
                vals.append((pt, abs(f(pt))))
            except Exception:
                failures += 1
        return vals

    if threads > 1:
        chunks = [boundary[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            bvals = [v for part in pool.map(probe, chunks) for v in part]
        chunks = [interior[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ivals = [v for part in pool.map(probe, chunks) for v in part]
    else:
        bvals = probe(boundary)
        ivals = probe(interior)
    if not bvals:
        raise DomainError("no boundary samples could be evaluated")
    boundary_max = max(v for _, v in bvals)
    interior_max = max((v for _, v in ivals), default=0.0)
    violations = tuple(
        sorted(
            ((pt, v) for pt, v in ivals if v > boundary_max + tol),
            key=lambda t: -t[1],
        )
    )
    return BoundReport(boundary_max, interior_max, violations, tol, failures, growth_attestation)


@dataclass(frozen=True)
class NullFitEntry:
    """Sup- and regression-based constants for |f| <= c |z|^N along a ray grid."""

    n_index: tuple[int, ...]
    c_sup: float
    c_lsq: float
    log_residual: float
    decaying: bool


def null_expansion_check(
    f: SampledFunction,
    d: Multidirection,
    n_list: Sequence[Sequence[int]],
    radii: Sequence[Sequence[float]],
) -> list[NullFitEntry]:
    """Per-N constants c(N) with |f(z)| <= c(N) |z|^N along the ray grid.

    ``c_sup`` is the grid supremum of |f|/|z|^N (the bound the definition
    asks for); ``c_lsq`` the least-squares constant on logs.  ``decaying``
    is False when the ratio grows toward the vertex, i.e. the claimed power
    is not actually attained (log-residual large and tilted).
    """
    pts_list = ray_points(f.domain, d, radii)
    pts = np.asarray(pts_list, dtype=complex)
    vals = np.abs(f.eval_many(pts))
    rad = np.abs(pts)
    out = []
    for n_index in n_list:
        n_index = tuple(int(k) for k in n_index)
        weight = np.prod(rad ** np.asarray(n_index, dtype=float), axis=1)
        nonzero = vals > 0
        ratio = np.where(nonzero, vals / weight, 0.0)
        c_sup = float(np.max(ratio))
        logs = np.log(ratio[nonzero]) if np.any(nonzero) else np.asarray([-math.inf])
        c_lsq = float(math.exp(np.mean(logs))) if np.all(np.isfinite(logs)) else 0.0
        spread = float(np.std(logs)) if logs.size else 0.0
        # growing toward the vertex: correlate log-ratio against -log min radius
        min_rad = np.min(rad, axis=1)[nonzero]
        decaying = True
        if logs.size >= 2 and np.ptp(np.log(min_rad)) > 0:
            slope = np.polyfit(np.log(min_rad), logs, 1)[0]
            decaying = slope >= -1e-6
        out.append(NullFitEntry(n_index, c_sup, c_lsq, spread, decaying))
    return out
