"""Total families of expansion coefficients and the limits that extract them.

A total family stores one coefficient function per (variable subset J,
multi-index over J); the subset-indexed inclusion-exclusion sum App_N built
from it approximates the underlying function.  Coefficients are recovered
from a function by Cauchy-integral derivatives taken along a radius ladder
shrinking to the vertex, with windowed polynomial extrapolation to radius
zero: finite differences are unstable near the vertex, circles are not.
"""

from __future__ import annotations

import cmath
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DomainError,
    FamilyError,
    ProbeError,
)
from .geometry import EMPTY_POLYSECTOR, Polysector, Sector
from .series import MultiIndexSeries, rate_fit
from .transforms import (
    LaplaceSpec,
    SampledFunction,
    half_plane_polysector,
    truncated_laplace_nd,
    truncated_laplace_with_error,
)
from . import series as _series


# ---------------------------------------------------------------------------
# elements and families


@dataclass(frozen=True)
class FunctionElement:
    """One coefficient function, defined on a (possibly 0-dimensional) polysector."""

    domain: Polysector
    fn: Callable | None = None
    const: complex | None = None
    vectorized: bool = True
    provenance: str = "closed-form"

    def __post_init__(self):
        if self.domain.dim == 0:
            if self.const is None:
                raise FamilyError("0-dimensional elements must carry a constant value")
        elif self.fn is None:
            raise FamilyError("positive-dimensional elements need an eval callback")

    @classmethod
    def constant(cls, value: complex, provenance: str = "closed-form") -> "FunctionElement":
        return cls(EMPTY_POLYSECTOR, None, complex(value), provenance=provenance)

    def __call__(self, zs: Sequence[complex] = ()) -> complex:
        if self.domain.dim == 0:
            return self.const
        if self.vectorized:
            return complex(self.fn(np.asarray([tuple(zs)], dtype=complex))[0])
        return complex(self.fn(tuple(zs)))

    def eval_many(self, pts: np.ndarray) -> np.ndarray:
        if self.domain.dim == 0:
            return np.full(len(pts), self.const, dtype=complex)
        pts = np.asarray(pts, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        if self.vectorized:
            return np.asarray(self.fn(pts), dtype=complex)
        return np.asarray([self.fn(tuple(p)) for p in pts], dtype=complex)


def _subset_key(axes: Iterable[int]) -> tuple[int, ...]:
    key = tuple(sorted(int(a) for a in axes))
    if not key:
        raise FamilyError("subset J must be nonempty")
    if len(set(key)) != len(key):
        raise FamilyError(f"repeated axes in subset {key}")
    return key


def nonempty_subsets(n: int) -> list[tuple[int, ...]]:
    """All nonempty subsets of range(n), by cardinality then lexicographic."""
    out: list[tuple[int, ...]] = []
    for size in range(1, n + 1):
        out.extend(itertools.combinations(range(n), size))
    return out


@dataclass(frozen=True)
class TotalFamily:
    """Map (J, N_J) -> coefficient function on the complementary axes."""

    dim: int
    host: Polysector
    elements: dict
    index_bound: tuple[int, ...]

    def __init__(self, dim, host, elements, index_bound):
        dim = int(dim)
        if host.dim != dim:
            raise DimensionMismatchError("host polysector dimension mismatch")
        index_bound = tuple(int(b) for b in index_bound)
        if len(index_bound) != dim:
            raise DimensionMismatchError("index_bound length must equal dim")
        clean = {}
        for (axes, idx), elem in elements.items():
            key = _subset_key(axes)
            idx = tuple(int(i) for i in idx)
            if len(idx) != len(key):
                raise FamilyError(f"index {idx} does not match subset {key}")
            rest = len([a for a in range(dim) if a not in key])
            if elem.domain.dim != rest:
                raise FamilyError(
                    f"element for J={key} must live on {rest} axes, has {elem.domain.dim}"
                )
            clean[(key, idx)] = elem
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "host", host)
        object.__setattr__(self, "elements", clean)
        object.__setattr__(self, "index_bound", index_bound)

    def element(self, axes: Iterable[int], idx: Sequence[int]) -> FunctionElement:
        key = (_subset_key(axes), tuple(int(i) for i in idx))
        try:
            return self.elements[key]
        except KeyError:
            raise FamilyError(f"missing family element J={key[0]}, N_J={key[1]}") from None

    def has_element(self, axes, idx) -> bool:
        return (_subset_key(axes), tuple(int(i) for i in idx)) in self.elements

    def stored_indices(self, axes: Iterable[int]) -> list[tuple[int, ...]]:
        key = _subset_key(axes)
        return sorted(idx for (j, idx) in self.elements if j == key)

    def rest_axes(self, axes: Iterable[int]) -> tuple[int, ...]:
        key = set(_subset_key(axes))
        return tuple(a for a in range(self.dim) if a not in key)

    def constants_series(self) -> MultiIndexSeries:
        """The J = all-axes constants as a formal series."""
        full = tuple(range(self.dim))
        coeffs = {
            idx: elem.const
            for (j, idx), elem in self.elements.items()
            if j == full
        }
        return MultiIndexSeries(self.dim, coeffs, self.index_bound)

    def to_manifest(self) -> dict:
        items = []
        for (axes, idx) in sorted(self.elements):
            elem = self.elements[(axes, idx)]
            entry = {"J": list(axes), "N_J": list(idx), "provenance": elem.provenance}
            if elem.domain.dim == 0:
                entry["value"] = [elem.const.real, elem.const.imag]
            items.append(entry)
        return {
            "dim": self.dim,
            "index_bound": list(self.index_bound),
            "host": self.host.to_json(),
            "elements": items,
        }


@dataclass(frozen=True)
class FirstOrderFamily:
    """The subfamily depending on all-but-one variable: n coefficient sequences."""

    dim: int
    host: Polysector
    sequences: tuple[tuple[FunctionElement, ...], ...]

    def __init__(self, dim, host, sequences):
        dim = int(dim)
        if host.dim != dim:
            raise DimensionMismatchError("host polysector dimension mismatch")
        sequences = tuple(tuple(seq) for seq in sequences)
        if len(sequences) != dim:
            raise DimensionMismatchError("one sequence per axis required")
        for j, seq in enumerate(sequences):
            for elem in seq:
                if elem.domain.dim != dim - 1:
                    raise FamilyError(f"axis-{j} elements must live on {dim - 1} axes")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "host", host)
        object.__setattr__(self, "sequences", sequences)

    def caps(self) -> tuple[int, ...]:
        return tuple(len(seq) - 1 for seq in self.sequences)


def first_order_of(fam: TotalFamily) -> FirstOrderFamily:
    """Select the #J = 1 elements, per axis in index order."""
    sequences = []
    for j in range(fam.dim):
        seq = []
        m = 0
        while fam.has_element((j,), (m,)):
            seq.append(fam.element((j,), (m,)))
            m += 1
        sequences.append(tuple(seq))
    return FirstOrderFamily(fam.dim, fam.host, tuple(sequences))


# ---------------------------------------------------------------------------
# App_N


def _powers(z: complex, top: int) -> list[complex]:
    out = [1.0 + 0j]
    for _ in range(top):
        out.append(out[-1] * z)
    return out


def app_n(fam: TotalFamily, n_index: Sequence[int], z: Sequence[complex], validate: bool = True) -> complex:
    """Inclusion-exclusion approximant: sum over nonempty J of
    (-1)^(#J+1) sum_{H_J < N_J} f_{H_J}(z_{J'}) z_J^{H_J}."""
    return complex(app_n_many(fam, n_index, np.asarray([tuple(z)], dtype=complex), validate=validate)[0])


def app_n_many(
    fam: TotalFamily,
    n_index: Sequence[int],
    pts: np.ndarray,
    validate: bool = True,
) -> np.ndarray:
    n_index = tuple(int(k) for k in n_index)
    if len(n_index) != fam.dim:
        raise DimensionMismatchError("truncation index length must equal dim")
    if any(k < 0 for k in n_index):
        raise FamilyError("truncation index must be nonnegative")
    if any(k > b + 1 for k, b in zip(n_index, fam.index_bound)):
        raise FamilyError(f"truncation {n_index} exceeds index bound {fam.index_bound} + 1")
    pts = np.asarray(pts, dtype=complex)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != fam.dim:
        raise DimensionMismatchError("points must have one column per axis")
    if validate:
        for p in pts:
            if not fam.host.contains(tuple(p)):
                raise DomainError(f"point {tuple(p)} outside the host polysector")
    total = np.zeros(len(pts), dtype=complex)
    for axes in nonempty_subsets(fam.dim):
        if any(n_index[a] == 0 for a in axes):
            continue
        sign = -1.0 if len(axes) % 2 == 0 else 1.0
        rest = fam.rest_axes(axes)
        rest_pts = pts[:, rest] if rest else np.zeros((len(pts), 0), dtype=complex)
        ptabs = [
            np.stack(_powers_vec(pts[:, a], n_index[a] - 1)) for a in axes
        ]
        for idx in itertools.product(*(range(n_index[a]) for a in axes)):
            elem = fam.element(axes, idx)
            vals = elem.eval_many(rest_pts)
            mono = np.ones(len(pts), dtype=complex)
            for pos, h in enumerate(idx):
                mono = mono * ptabs[pos][h]
            total = total + sign * vals * mono
    return total


def _powers_vec(col: np.ndarray, top: int) -> list[np.ndarray]:
    out = [np.ones_like(col)]
    for _ in range(top):
        out.append(out[-1] * col)
    return out


# ---------------------------------------------------------------------------
# radius ladders


@dataclass(frozen=True)
class ProbeSpec:
    """Radius ladder and Cauchy-circle controls for coefficient extraction.

    The ladder walks r_k = r0 * ratio**k toward the vertex; at each rung the
    derivative is read off a trapezoid-sampled circle of radius
    circle_frac * (distance to the sector boundary).  Extrapolants come from
    Neville interpolation to radius zero over the trailing ``window`` rungs
    and are declared converged when ``agree`` successive extrapolants match
    within tol (mixed absolute/relative).  The reported value is the
    extrapolant with the smallest error estimate seen along the ladder.
    """

    r0: float = 0.3
    ratio: float = 0.7
    steps: int = 14
    window: int = 5
    agree: int = 3
    tol: float = 1e-8
    circle_frac: float = 0.5
    circle_nodes: int = 64
    direction: tuple[float, ...] | None = None

    def radii(self) -> list[float]:
        return [self.r0 * self.ratio**k for k in range(self.steps)]

    def light(self) -> "ProbeSpec":
        return replace(self, steps=min(self.steps, 10), tol=max(self.tol, 1e-7))


@dataclass(frozen=True)
class ExtractResult:
    value: complex
    error: float
    converged: bool
    radius: float


def _neville_zero(xs: Sequence[float], ys: list[np.ndarray]) -> np.ndarray:
    p = [np.asarray(y, dtype=complex) for y in ys]
    for j in range(1, len(xs)):
        for i in range(len(xs) - j):
            p[i] = (p[i] * xs[i + j] - p[i + 1] * xs[i]) / (xs[i + j] - xs[i])
    return p[0]


class _LadderTracker:
    """Windowed Richardson state for a (n_orders, batch) grid of limits."""

    def __init__(self, shape: tuple[int, ...], probe: ProbeSpec):
        self.probe = probe
        self.radii: list[float] = []
        self.samples: list[np.ndarray] = []
        self.extrap: list[np.ndarray] = []
        self.best = np.zeros(shape, dtype=complex)
        self.best_err = np.full(shape, np.inf)
        self.best_radius = np.zeros(shape)
        self.converged = np.zeros(shape, dtype=bool)
        self._agree_count = np.zeros(shape, dtype=int)

    def push(self, r: float, values: np.ndarray):
        self.radii.append(r)
        self.samples.append(values)
        w = self.probe.window
        if len(self.radii) < w:
            return
        est = _neville_zero(self.radii[-w:], self.samples[-w:])
        self.extrap.append(est)
        if len(self.extrap) < 2:
            return
        diff = np.abs(est - self.extrap[-2])
        scale = np.maximum(1.0, np.abs(est))
        ok = diff <= self.probe.tol * scale
        self._agree_count = np.where(ok, self._agree_count + 1, 0)
        newly = (self._agree_count >= self.probe.agree - 1) & ~self.converged
        self.converged |= newly
        if len(self.extrap) >= 3:
            err = np.maximum(diff, np.abs(self.extrap[-2] - self.extrap[-3]))
        else:
            err = diff
        better = err < self.best_err
        self.best = np.where(better, est, self.best)
        self.best_err = np.where(better, err, self.best_err)
        self.best_radius = np.where(better, r, self.best_radius)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


def _circle_orders(evalfn, center: complex, rho: float, orders: Sequence[int], nodes: int):
    """Coefficients D^m g(center)/m! for all requested m from one circle."""
    angles = 2.0 * math.pi * np.arange(nodes) / nodes
    w = center + rho * np.exp(1j * angles)
    vals = np.asarray(evalfn(w), dtype=complex)  # (nodes, B)
    if vals.ndim == 1:
        vals = vals[:, None]
    spec = np.fft.fft(vals, axis=0) / nodes
    return np.stack([spec[m] * rho ** (-m) for m in orders])  # (n_orders, B)


def axis_coefficient_ladder(
    evalfn: Callable[[np.ndarray], np.ndarray],
    sector: Sector,
    orders: Sequence[int],
    probe: ProbeSpec,
    theta: float | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Limits of D^m g / m! as one variable tends to 0 along a ray.

    ``evalfn`` maps an (mm,) array of points in ``sector`` to an (mm, B)
    array; all orders and batch columns share the circles.  Returns arrays of
    shape (n_orders, B): values, error estimates, convergence flags, and the
    radius of the winning window.
    """
    orders = [int(m) for m in orders]
    if max(orders) > probe.circle_nodes // 2:
        raise DomainError("requested order exceeds the circle-node anti-aliasing bound")
    theta = sector.bisector if theta is None else float(theta)
    if not sector.alpha < theta < sector.beta:
        raise DomainError("probe direction outside the sector")
    tracker = None
    pure_value = orders == [0]
    for r in probe.radii():
        center = r * cmath.exp(1j * theta)
        if not sector.contains(center):
            continue
        if pure_value:
            row = np.asarray(evalfn(np.asarray([center])), dtype=complex)
            if row.ndim == 1:
                row = row[:, None]
            sample = row
        else:
            rho = probe.circle_frac * sector.boundary_distance(center)
            sample = _circle_orders(evalfn, center, rho, orders, probe.circle_nodes)
        if tracker is None:
            tracker = _LadderTracker(sample.shape, probe)
        tracker.push(r, sample)
        if tracker.all_converged:
            break
    if tracker is None or not tracker.extrap:
        raise ProbeError("radius ladder produced no extrapolants (probe outside sector?)")
    return tracker.best, tracker.best_err, tracker.converged, tracker.best_radius


def _product_circle_orders(evalfn_nd, centers, rhos, order: Sequence[int], nodes: int) -> complex:
    """Mixed derivative via a product of circles (one ifft per axis)."""
    p = len(centers)
    angles = 2.0 * math.pi * np.arange(nodes) / nodes
    rings = [c + rho * np.exp(1j * angles) for c, rho in zip(centers, rhos)]
    grids = np.meshgrid(*rings, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    vals = np.asarray(evalfn_nd(pts), dtype=complex).reshape((nodes,) * p)
    spec = np.fft.fftn(vals) / nodes**p
    coeff = spec[tuple(order)]
    for m, rho in zip(order, rhos):
        coeff *= rho ** (-m)
    return complex(coeff)


def _multi_axis_ladder(
    evalfn_nd: Callable[[np.ndarray], np.ndarray],
    sectors: Sequence[Sector],
    order: Sequence[int],
    probe: ProbeSpec,
    thetas: Sequence[float] | None = None,
) -> ExtractResult:
    """Joint limit z_J -> 0 of a mixed derivative along per-axis rays."""
    p = len(sectors)
    order = tuple(int(m) for m in order)
    if max(order) > probe.circle_nodes // 2:
        raise DomainError("requested order exceeds the circle-node anti-aliasing bound")
    if thetas is None:
        thetas = [s.bisector for s in sectors]
    tracker = _LadderTracker((1, 1), probe)
    for r in probe.radii():
        centers = [r * cmath.exp(1j * t) for t in thetas]
        if not all(s.contains(c) for s, c in zip(sectors, centers)):
            continue
        if all(m == 0 for m in order):
            val = complex(np.asarray(evalfn_nd(np.asarray([centers])), dtype=complex).ravel()[0])
        else:
            rhos = [probe.circle_frac * s.boundary_distance(c) for s, c in zip(sectors, centers)]
            val = _product_circle_orders(evalfn_nd, centers, rhos, order, probe.circle_nodes)
        tracker.push(r, np.asarray([[val]]))
        if tracker.all_converged:
            break
    if not tracker.extrap:
        raise ProbeError("radius ladder produced no extrapolants (probe outside sector?)")
    return ExtractResult(
        complex(tracker.best[0, 0]),
        float(tracker.best_err[0, 0]),
        bool(tracker.converged[0, 0]),
        float(tracker.best_radius[0, 0]),
    )


def extract_element(
    f: SampledFunction,
    axes: Iterable[int],
    n_index: Sequence[int],
    z_rest: Sequence[complex],
    probe: ProbeSpec | None = None,
    strict: bool = True,
) -> ExtractResult:
    """Coefficient f_{N_J}(z_rest): limit of D^{(N_J, 0)} f / N_J! as z_J -> 0.

    ``z_rest`` lists the fixed coordinates for the complementary axes in
    increasing axis order.  Raises ProbeError (carrying the best estimate)
    when the extrapolants never settle and ``strict`` is set.
    """
    probe = probe or ProbeSpec()
    key = _subset_key(axes)
    n_index = tuple(int(m) for m in n_index)
    if len(n_index) != len(key):
        raise DimensionMismatchError("index length must match subset size")
    dim = f.domain.dim
    rest = tuple(a for a in range(dim) if a not in key)
    if len(z_rest) != len(rest):
        raise DimensionMismatchError("z_rest must fix every complementary axis")
    for a, z in zip(rest, z_rest):
        if not f.domain.sectors[a].contains(z):
            raise DomainError(f"z_rest component {z} outside sector of axis {a}")
    thetas = probe.direction

    if len(key) == 1:
        axis = key[0]
        sector = f.domain.sectors[axis]

        def evalfn(w: np.ndarray) -> np.ndarray:
            pts = np.empty((w.size, dim), dtype=complex)
            pts[:, axis] = w
            for a, z in zip(rest, z_rest):
                pts[:, a] = z
            return f.eval_many(pts)[:, None]

        vals, errs, conv, radii = axis_coefficient_ladder(
            evalfn,
            sector,
            [n_index[0]],
            probe,
            theta=None if thetas is None else thetas[0],
        )
        result = ExtractResult(
            complex(vals[0, 0]), float(errs[0, 0]), bool(conv[0, 0]), float(radii[0, 0])
        )
    else:

        def evalfn_nd(sub: np.ndarray) -> np.ndarray:
            pts = np.empty((len(sub), dim), dtype=complex)
            for pos, a in enumerate(key):
                pts[:, a] = sub[:, pos]
            for a, z in zip(rest, z_rest):
                pts[:, a] = z
            return f.eval_many(pts)

        result = _multi_axis_ladder(
            evalfn_nd,
            [f.domain.sectors[a] for a in key],
            n_index,
            probe,
            thetas=thetas,
        )
    if strict and not result.converged:
        raise ProbeError(
            f"probe did not converge for J={key}, N_J={n_index}: "
            f"best error {result.error:.3e}",
            best=result,
        )
    return result


# ---------------------------------------------------------------------------
# coherence


@dataclass(frozen=True)
class CoherenceReport:
    """Aggregate of derivative-limit consistency checks over a family."""

    checked_pairs: int
    max_residual: float
    failures: tuple
    probe_failures: tuple
    tolerance: float
    missing: int = 0

    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "checked_pairs": self.checked_pairs,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "missing": self.missing,
            "failures": [
                {
                    "J": list(j),
                    "L": list(l),
                    "N_J": list(nj),
                    "N_L": list(nl),
                    "residual": res,
                }
                for (j, l, nj, nl, res) in self.failures
            ],
            "probe_failures": [
                {"J": list(j), "L": list(l), "N_J": list(nj), "N_L": list(nl), "note": note}
                for (j, l, nj, nl, note) in self.probe_failures
            ],
        }


def _rest_samples(host: Polysector, axes: Sequence[int], per_axis: int, radius: float):
    if not axes:
        return [()]
    grids = []
    for a in axes:
        sec = host.sectors[a]
        theta = sec.bisector
        cap = radius if not sec.bounded else min(radius, 0.5 * sec.rho)
        grids.append([cap * (0.55**i) * cmath.exp(1j * theta) for i in range(per_axis)])
    return [tuple(p) for p in itertools.product(*grids)]


def _coherence_tasks(fam: TotalFamily, max_order: int, samples_per_axis: int, sample_radius: float):
    tasks = []
    missing = 0
    subsets = nonempty_subsets(fam.dim)
    for j_axes in subsets:
        stored = fam.stored_indices(j_axes)
        if not stored:
            continue
        j_set = set(j_axes)
        for l_axes in subsets:
            if j_set & set(l_axes):
                continue
            union = _subset_key(set(j_axes) | set(l_axes))
            rest = tuple(a for a in range(fam.dim) if a not in union)
            l_ranges = [range(min(max_order, fam.index_bound[a]) + 1) for a in l_axes]
            for n_j in stored:
                for n_l in itertools.product(*l_ranges):
                    union_idx = _merge_index(j_axes, n_j, l_axes, n_l)
                    if not fam.has_element(union, union_idx):
                        missing += 1
                        continue
                    for z_rest in _rest_samples(fam.host, rest, samples_per_axis, sample_radius):
                        tasks.append((j_axes, l_axes, n_j, n_l, union, union_idx, rest, z_rest))
    return tasks, missing


def _merge_index(j_axes, n_j, l_axes, n_l) -> tuple[int, ...]:
    mapping = dict(zip(j_axes, n_j))
    mapping.update(zip(l_axes, n_l))
    return tuple(mapping[a] for a in sorted(mapping))


def _element_derivative_limit(fam: TotalFamily, task, probe: ProbeSpec) -> ExtractResult:
    j_axes, l_axes, _n_j, n_l, _union, _union_idx, rest, z_rest = task
    elem = fam.element(j_axes, task[2])
    dom_axes = fam.rest_axes(j_axes)  # axes of the element's domain, sorted
    pos_of = {a: i for i, a in enumerate(dom_axes)}
    l_pos = [pos_of[a] for a in l_axes]
    rest_pos = [pos_of[a] for a in rest]

    if len(l_axes) == 1:
        sector = elem.domain.sectors[l_pos[0]]

        def evalfn(w: np.ndarray) -> np.ndarray:
            pts = np.empty((w.size, elem.domain.dim), dtype=complex)
            pts[:, l_pos[0]] = w
            for p, z in zip(rest_pos, z_rest):
                pts[:, p] = z
            return elem.eval_many(pts)[:, None]

        vals, errs, conv, radii = axis_coefficient_ladder(evalfn, sector, [n_l[0]], probe)
        return ExtractResult(
            complex(vals[0, 0]), float(errs[0, 0]), bool(conv[0, 0]), float(radii[0, 0])
        )

    def evalfn_nd(sub: np.ndarray) -> np.ndarray:
        pts = np.empty((len(sub), elem.domain.dim), dtype=complex)
        for i, p in enumerate(l_pos):
            pts[:, p] = sub[:, i]
        for p, z in zip(rest_pos, z_rest):
            pts[:, p] = z
        return elem.eval_many(pts)

    return _multi_axis_ladder(evalfn_nd, [elem.domain.sectors[p] for p in l_pos], n_l, probe)


def check_coherence(
    fam: TotalFamily,
    tol: float,
    probe: ProbeSpec | None = None,
    max_order: int = 3,
    samples_per_axis: int = 2,
    sample_radius: float = 0.35,
    threads: int = 1,
) -> CoherenceReport:
    """Compare derivative limits of stored elements against deeper elements.

    For each disjoint pair of nonempty subsets (J, L), each stored N_J and
    each N_L up to ``max_order``, the L-derivative limit of f_{N_J} is checked
    against the stored f_{(N_J, N_L)} at sampled complementary points.
    Residuals are relative to max(1, |target|).  Probe non-convergence is
    recorded per pair, not fatal.

    The default probe ties its agreement tolerance to ``tol`` (both are
    relative): demanding extrapolant agreement far below the asserted
    residual only wastes ladder rungs on double-precision noise.
    """
    probe = probe or ProbeSpec(steps=20, tol=tol)
    tasks, missing = _coherence_tasks(fam, max_order, samples_per_axis, sample_radius)

    def run(task):
        j_axes, l_axes, n_j, n_l, union, union_idx, _rest, z_rest = task
        target_elem = fam.element(union, union_idx)
        target = target_elem(z_rest) if target_elem.domain.dim else target_elem()
        try:
            res = _element_derivative_limit(fam, task, probe)
        except ProbeError as exc:
            return (task, None, str(exc), target)
        return (task, res, None, target)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, tasks))
    else:
        outcomes = [run(t) for t in tasks]

    failures = []
    probe_failures = []
    max_residual = 0.0
    checked = 0
    for (task, res, note, target) in outcomes:
        j_axes, l_axes, n_j, n_l = task[0], task[1], task[2], task[3]
        if res is None or not res.converged:
            best = res.error if res is not None else math.inf
            probe_failures.append((j_axes, l_axes, n_j, n_l, note or f"unconverged ({best:.3e})"))
            continue
        checked += 1
        residual = abs(res.value - target) / max(1.0, abs(target))
        max_residual = max(max_residual, residual)
        if residual > tol:
            failures.append((j_axes, l_axes, n_j, n_l, residual))
    failures.sort()
    probe_failures.sort(key=lambda t: t[:4])
    return CoherenceReport(
        checked, max_residual, tuple(failures), tuple(probe_failures), tol, missing
    )


def check_first_order_coherence(
    fam1: FirstOrderFamily,
    tol: float,
    probe: ProbeSpec | None = None,
    max_order: int = 2,
) -> CoherenceReport:
    """Cross-consistency of a two-variable first-order family.

    The m-th coefficient of f_{1n} and the n-th coefficient of f_{2m} must
    agree (both equal the (n, m) constant of the underlying total family).
    """
    if fam1.dim != 2:
        raise DimensionMismatchError("first-order coherence check implemented for dim 2")
    probe = probe or ProbeSpec(steps=20, tol=tol)
    n_cap = min(len(fam1.sequences[0]) - 1, max_order)
    m_cap = min(len(fam1.sequences[1]) - 1, max_order)
    failures = []
    probe_failures = []
    max_residual = 0.0
    checked = 0

    def coeffs_of(elem: FunctionElement, orders: Sequence[int]):
        def evalfn(w: np.ndarray) -> np.ndarray:
            return elem.eval_many(w.reshape(-1, 1))[:, None]

        return axis_coefficient_ladder(evalfn, elem.domain.sectors[0], list(orders), probe)

    for n in range(n_cap + 1):
        vals1, errs1, conv1, _ = coeffs_of(fam1.sequences[0][n], range(m_cap + 1))
        for m in range(m_cap + 1):
            vals2, errs2, conv2, _ = coeffs_of(fam1.sequences[1][m], [n])
            if not (conv1[m, 0] and conv2[0, 0]):
                probe_failures.append(
                    ((0,), (1,), (n,), (m,), f"unconverged ({float(errs1[m, 0]):.3e}/{float(errs2[0, 0]):.3e})")
                )
                continue
            checked += 1
            a = complex(vals1[m, 0])
            b = complex(vals2[0, 0])
            residual = abs(a - b) / max(1.0, abs(a))
            max_residual = max(max_residual, residual)
            if residual > tol:
                failures.append(((0,), (1,), (n,), (m,), residual))
    return CoherenceReport(
        checked, max_residual, tuple(sorted(failures)), tuple(probe_failures), tol
    )


# ---------------------------------------------------------------------------
# families from series


def family_from_series(
    fhat: MultiIndexSeries,
    z0: Sequence[complex],
    tol: float = 1e-12,
    max_depth: int = 40,
) -> TotalFamily:
    """Quadrature-backed total family of the truncated-Laplace interpolant.

    For each subset J and index a_J, the element is the iterated truncated
    Laplace transform (over the complementary axes) of the partial Borel sum
    with the J-indices frozen at a_J; the all-axes elements are the series
    coefficients themselves.
    """
    z0 = tuple(complex(w) for w in z0)
    if len(z0) != fhat.dim:
        raise DimensionMismatchError("one endpoint per axis required")
    from .series import fit_gevrey_type as _fit

    try:
        types = _fit(fhat).type_estimate
    except Exception:
        types = (math.inf,) * fhat.dim
    for j, w in enumerate(z0):
        if not abs(w) < types[j]:
            raise DomainError(
                f"z0 outside the Borel disc on axis {j}: |z0|={abs(w):.6g}, type={types[j]:.6g}"
            )
    host = half_plane_polysector(z0)
    bound = fhat.degree_bound
    full = tuple(range(fhat.dim))
    elements: dict = {}
    for axes in nonempty_subsets(fhat.dim):
        rest = tuple(a for a in range(fhat.dim) if a not in axes)
        for idx in itertools.product(*(range(bound[a] + 1) for a in axes)):
            if axes == full:
                elements[(axes, idx)] = FunctionElement.constant(
                    fhat[idx], provenance="series"
                )
                continue
            coeffs = {}
            for rest_idx in itertools.product(*(range(bound[a] + 1) for a in rest)):
                fullidx = _merge_index(axes, idx, rest, rest_idx)
                c = fhat[fullidx]
                if c != 0:
                    coeffs[rest_idx] = c / math.prod(
                        math.factorial(k) for k in rest_idx
                    )
            phi = MultiIndexSeries(len(rest), coeffs, tuple(bound[a] for a in rest))
            subspec = LaplaceSpec(tuple(z0[a] for a in rest), tol=tol, max_depth=max_depth)
            domain = host.axes_subset(rest)
            elements[(axes, idx)] = _laplace_element(phi, subspec, domain)
    return TotalFamily(fhat.dim, host, elements, bound)


def _laplace_element(phi: MultiIndexSeries, subspec: LaplaceSpec, domain: Polysector) -> FunctionElement:
    if phi.dim == 1:

        def fn(pts: np.ndarray, _phi=phi, _spec=subspec) -> np.ndarray:
            vals, _ = truncated_laplace_with_error(
                lambda t: _series.evaluate_many(_phi, t[:, None]), _spec, pts[:, 0]
            )
            return np.atleast_1d(vals)

    else:

        def fn(pts: np.ndarray, _phi=phi, _spec=subspec) -> np.ndarray:
            return np.asarray(
                [
                    truncated_laplace_nd(
                        lambda q: _series.evaluate_many(_phi, q), _spec, p
                    )
                    for p in pts
                ],
                dtype=complex,
            )

    return FunctionElement(domain, fn, provenance="quadrature")


# ---------------------------------------------------------------------------
# empirical type fitting from remainders


def remainder_constants(
    f: SampledFunction,
    fam: TotalFamily,
    direction: Sequence[float],
    radii: Sequence[Sequence[float]],
    n_indices: Sequence[Sequence[int]],
    noise_floor: float = 0.0,
) -> dict[tuple[int, ...], float]:
    """sup over a ray grid of |f - App_N| / |z|^N, per truncation index.

    Grid points where |f - App_N| falls below ``noise_floor`` are excluded:
    there the computed difference is evaluation noise, and dividing it by a
    tiny |z|^N would fabricate spurious constants.  Indices whose every grid
    point is noise-dominated are omitted from the result.
    """
    from .geometry import Multidirection, ray_points

    d = Multidirection(direction)
    pts_list = ray_points(f.domain, d, radii)
    pts = np.asarray(pts_list, dtype=complex)
    fvals = f.eval_many(pts)
    rad = np.abs(pts)
    out = {}
    for n_index in n_indices:
        n_index = tuple(int(k) for k in n_index)
        app = app_n_many(fam, n_index, pts, validate=False)
        diff = np.abs(fvals - app)
        keep = diff > noise_floor
        if not np.any(keep):
            continue
        weight = np.prod(rad ** np.asarray(n_index, dtype=float), axis=1)
        out[n_index] = float(np.max(diff[keep] / weight[keep]))
    return out


def fit_type_from_remainders(
    constants: dict[tuple[int, ...], float],
    window: tuple[int, int] | None = None,
) -> tuple[tuple[float, ...], float, float]:
    """Per-axis rate from log(c(N)/N!) ~ log C - sum N_j log R_j."""
    indices = []
    logvals = []
    for n_index, c in sorted(constants.items()):
        if window is not None and not all(window[0] <= k <= window[1] for k in n_index):
            continue
        if c <= 0:
            continue
        indices.append(n_index)
        logvals.append(math.log(c) - sum(math.lgamma(k + 1) for k in n_index))
    if len(indices) < len(indices[0]) + 1:
        raise DomainError("too few remainder constants for a rate fit")
    slopes, intercept, rms = rate_fit(indices, logvals)
    return tuple(math.exp(-s) for s in slopes), intercept, rms
