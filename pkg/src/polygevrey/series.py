"""Sparse multivariate formal power series and Gevrey-norm machinery.

All factorial and power arithmetic runs in log space: coefficients of
1-Gevrey series grow like N!, which overflows doubles past N ~ 170, while the
ratios |f_N| A^N / N! that the norms and fits consume stay tame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatchError, SeriesError

#: fitted rates above this are reported as an unbounded (convergent) type
TYPE_INFINITY_THRESHOLD = 1e6

#: lower-half vs upper-half slope gap (in log units) that flags a diverging slope
TAIL_STEEPENING_THRESHOLD = 0.5


def _lgamma_sum(index: Sequence[int]) -> float:
    return sum(math.lgamma(n + 1) for n in index)


@dataclass(frozen=True)
class MultiIndexSeries:
    """Finite map multi-index -> complex coefficient.

    Absent indices are zero up to ``degree_bound`` componentwise; beyond the
    bound the coefficients are unknown, not zero.
    """

    dim: int
    coeffs: Mapping[tuple[int, ...], complex]
    degree_bound: tuple[int, ...]

    def __init__(self, dim, coeffs, degree_bound=None):
        dim = int(dim)
        if dim < 1:
            raise SeriesError("series dimension must be >= 1")
        clean: dict[tuple[int, ...], complex] = {}
        for index, value in dict(coeffs).items():
            index = tuple(int(k) for k in index)
            if len(index) != dim:
                raise DimensionMismatchError(f"index {index} has wrong length for dim {dim}")
            if any(k < 0 for k in index):
                raise SeriesError(f"negative multi-index {index}")
            value = complex(value)
            if value != 0:
                clean[index] = value
        if degree_bound is None:
            if clean:
                degree_bound = tuple(max(ix[j] for ix in clean) for j in range(dim))
            else:
                degree_bound = (0,) * dim
        degree_bound = tuple(int(b) for b in degree_bound)
        if len(degree_bound) != dim:
            raise DimensionMismatchError("degree_bound length must equal dim")
        for index in clean:
            if any(k > b for k, b in zip(index, degree_bound)):
                raise SeriesError(f"index {index} exceeds degree bound {degree_bound}")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "degree_bound", degree_bound)

    def __getitem__(self, index: Sequence[int]) -> complex:
        return self.coeffs.get(tuple(index), 0j)

    def items(self):
        return sorted(self.coeffs.items())

    @property
    def n_nonzero(self) -> int:
        return len(self.coeffs)

    def map_coeffs(self, fn) -> "MultiIndexSeries":
        return MultiIndexSeries(
            self.dim,
            {ix: fn(ix, c) for ix, c in self.coeffs.items()},
            self.degree_bound,
        )

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "degree_bound": list(self.degree_bound),
            "coeffs": [
                {"index": list(ix), "re": c.real, "im": c.imag} for ix, c in self.items()
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MultiIndexSeries":
        try:
            dim = obj["dim"]
            coeffs = {
                tuple(entry["index"]): complex(entry["re"], entry.get("im", 0.0))
                for entry in obj["coeffs"]
            }
            bound = obj.get("degree_bound")
        except (KeyError, TypeError) as exc:
            raise SeriesError(f"bad series descriptor: {obj!r}") from exc
        return cls(dim, coeffs, tuple(bound) if bound is not None else None)

    def csv_rows(self) -> list[tuple[str, float, float]]:
        """Rows (N, |f_N|, |f_N|/N!) for external plotting."""
        rows = []
        for ix, c in self.items():
            mag = abs(c)
            ratio = math.exp(math.log(mag) - _lgamma_sum(ix)) if mag > 0 else 0.0
            rows.append((" ".join(str(k) for k in ix), mag, ratio))
        return rows


def gamma1_norm(a: MultiIndexSeries, weights: Sequence[float]) -> float:
    """sup over stored indices of |a_N| * A^N / N!, computed in log space."""
    if len(weights) != a.dim:
        raise DimensionMismatchError("one weight per axis required")
    if any(w <= 0 for w in weights):
        raise SeriesError("Gamma^1 weights must be positive")
    best = -math.inf
    for ix, c in a.coeffs.items():
        mag = abs(c)
        if mag == 0:
            continue
        log_term = (
            math.log(mag)
            + sum(k * math.log(w) for k, w in zip(ix, weights))
            - _lgamma_sum(ix)
        )
        best = max(best, log_term)
    return 0.0 if best == -math.inf else math.exp(best)


def borel_transform(f: MultiIndexSeries) -> MultiIndexSeries:
    """Coefficientwise division by N!, scaled through log space."""

    def divide(ix, c):
        mag = abs(c)
        if mag == 0:
            return 0j
        scale = math.exp(math.log(mag) - _lgamma_sum(ix))
        return (c / mag) * scale

    return f.map_coeffs(divide)


def inverse_borel_transform(f: MultiIndexSeries) -> MultiIndexSeries:
    """Coefficientwise multiplication by N!; exact inverse of borel_transform."""

    def multiply(ix, c):
        mag = abs(c)
        if mag == 0:
            return 0j
        scale = math.exp(math.log(mag) + _lgamma_sum(ix))
        return (c / mag) * scale

    return f.map_coeffs(multiply)


def evaluate_partial(f: MultiIndexSeries, z: Sequence[complex]) -> complex:
    """Sum over stored indices f_N z^N, Horner-style per axis."""
    if len(z) != f.dim:
        raise DimensionMismatchError(f"point has {len(z)} coordinates, series dim {f.dim}")
    return _horner(dict(f.coeffs), tuple(complex(w) for w in z), 0)


def _horner(coeffs: dict, z: tuple[complex, ...], axis: int) -> complex:
    if not coeffs:
        return 0j
    if axis == len(z) - 1:
        table = {ix[axis]: c for ix, c in coeffs.items()}
        acc = 0j
        for k in range(max(table), -1, -1):
            acc = acc * z[axis] + table.get(k, 0j)
        return acc
    groups: dict[int, dict] = {}
    for ix, c in coeffs.items():
        groups.setdefault(ix[axis], {})[ix] = c
    acc = 0j
    for k in range(max(groups), -1, -1):
        sub = groups.get(k)
        acc = acc * z[axis] + (_horner(sub, z, axis + 1) if sub else 0j)
    return acc


def evaluate_many(f: MultiIndexSeries, pts: np.ndarray) -> np.ndarray:
    """Vectorized f(z) over an array of points with shape (..., dim)."""
    pts = np.asarray(pts, dtype=complex)
    if pts.shape[-1] != f.dim:
        raise DimensionMismatchError("last axis of pts must equal series dim")
    out = np.zeros(pts.shape[:-1], dtype=complex)
    if not f.coeffs:
        return out
    # per-axis power tables up to the stored degree
    tops = [max(ix[j] for ix in f.coeffs) for j in range(f.dim)]
    powers = []
    for j, top in enumerate(tops):
        tab = np.ones((top + 1,) + pts.shape[:-1], dtype=complex)
        for k in range(1, top + 1):
            tab[k] = tab[k - 1] * pts[..., j]
        powers.append(tab)
    for ix, c in f.coeffs.items():
        term = np.full(pts.shape[:-1], c, dtype=complex)
        for j, k in enumerate(ix):
            if k:
                term = term * powers[j][k]
        out += term
    return out


@dataclass(frozen=True)
class GevreyFit:
    """Per-axis type estimate from a log-linear coefficient fit."""

    type_estimate: tuple[float, ...]
    log_prefactor: float
    residual: float
    n_points: int = 0

    def __post_init__(self):
        if self.residual < 0:
            raise SeriesError("negative residual")
        if any(not (t > 0) for t in self.type_estimate):
            raise SeriesError("type estimates must be positive (possibly inf)")


def rate_fit(indices: Sequence[Sequence[int]], logvals: Sequence[float]) -> tuple[np.ndarray, float, float]:
    """OLS of logvals against multi-indices: returns (slopes, intercept, rms residual)."""
    idx = np.asarray(indices, dtype=float)
    y = np.asarray(logvals, dtype=float)
    if idx.ndim != 2 or idx.shape[0] != y.shape[0]:
        raise SeriesError("indices and log values must align")
    design = np.hstack([idx, np.ones((idx.shape[0], 1))])
    sol, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ sol
    rms = float(np.sqrt(np.mean((fitted - y) ** 2))) if y.size else 0.0
    return sol[:-1], float(sol[-1]), rms


def _half_window_slopes(idx: np.ndarray, y: np.ndarray, axis: int) -> tuple[float, float] | None:
    """Per-axis slopes on the lower and upper halves of the index range."""
    vals = idx[:, axis]
    lo, hi = vals.min(), vals.max()
    if hi - lo < 3:
        return None
    mid = 0.5 * (lo + hi)
    lower = vals <= mid
    upper = vals >= mid
    if lower.sum() < 3 or upper.sum() < 3:
        return None
    try:
        s_lo, *_ = rate_fit(idx[lower], y[lower])
        s_hi, *_ = rate_fit(idx[upper], y[upper])
    except np.linalg.LinAlgError:  # pragma: no cover - defensive
        return None
    return float(s_lo[axis]), float(s_hi[axis])


def fit_gevrey_type(
    f: MultiIndexSeries,
    window: tuple[int, int] | None = None,
) -> GevreyFit:
    """Least-squares fit of log(|f_N|/N!) ~ log C - sum_j N_j log R_j.

    ``window`` restricts the fit to indices with every component inside
    [N_min, N_max]; the bound being fitted is asymptotic and early
    coefficients can pollute the slope.  An axis is reported as unbounded
    (math.inf) when the fitted rate exceeds TYPE_INFINITY_THRESHOLD, when the
    slope is steep enough to underflow the machine range within the stored
    degree, or when the upper-half slope keeps steepening past the lower-half
    slope (the signature of a convergent series, whose log ratio is concave).
    """
    entries = []
    for ix, c in f.items():
        if window is not None and not all(window[0] <= k <= window[1] for k in ix):
            continue
        mag = abs(c)
        if mag == 0:
            continue
        entries.append((ix, math.log(mag) - _lgamma_sum(ix)))
    if not entries:
        raise SeriesError("all-zero series cannot be fitted")
    if len(entries) < f.dim + 1:
        raise SeriesError(f"need at least {f.dim + 1} nonzero coefficients, have {len(entries)}")
    indices = [ix for ix, _ in entries]
    logvals = [v for _, v in entries]
    slopes, intercept, rms = rate_fit(indices, logvals)

    idx_arr = np.asarray(indices, dtype=float)
    y_arr = np.asarray(logvals, dtype=float)
    types = []
    for j, slope in enumerate(slopes):
        bound = max(1, f.degree_bound[j])
        if slope <= -math.log(np.finfo(float).max) / bound:
            types.append(math.inf)
            continue
        rate = math.exp(-slope)
        if rate > TYPE_INFINITY_THRESHOLD:
            types.append(math.inf)
            continue
        halves = _half_window_slopes(idx_arr, y_arr, j)
        if halves is not None and halves[1] <= halves[0] - TAIL_STEEPENING_THRESHOLD:
            types.append(math.inf)
            continue
        types.append(rate)
    return GevreyFit(tuple(types), intercept, rms, len(entries))
