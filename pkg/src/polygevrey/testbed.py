"""Registry of closed-form functions with analytically known asymptotics.

These entries back the verification suites: each ``known`` field carries a
provenance note saying whether it is exact by construction or derived and
cross-checked against an independent route (quadrature, Taylor expansion).
The registry is code, not data files: closed forms need exact evaluation.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnknownEntryError
from .families import FirstOrderFamily, FunctionElement, TotalFamily, nonempty_subsets
from .geometry import Polysector, Sector
from .series import MultiIndexSeries
from .transforms import LaplaceSpec, SampledFunction, truncated_laplace_with_error
from .typecalc import TypeProfile


@dataclass(frozen=True)
class RegistryEntry:
    id: str
    dim: int
    fn: SampledFunction
    known: dict
    notes: dict

    def __post_init__(self):
        missing = [k for k in self.known if k not in self.notes]
        if missing:
            raise ValueError(f"known fields without provenance notes: {missing}")


def polynomial_family(series: MultiIndexSeries, host: Polysector) -> TotalFamily:
    """Exact total family of a polynomial: elements are its partial coefficient slices."""
    n = series.dim
    bound = series.degree_bound
    elements = {}
    full = tuple(range(n))
    for axes in nonempty_subsets(n):
        rest = tuple(a for a in range(n) if a not in axes)
        for idx in itertools.product(*(range(bound[a] + 1) for a in axes)):
            if axes == full:
                elements[(axes, idx)] = FunctionElement.constant(
                    series[idx], provenance="closed-form"
                )
                continue
            slice_coeffs = {}
            for rest_idx in itertools.product(*(range(bound[a] + 1) for a in rest)):
                merged = {a: v for a, v in zip(axes, idx)}
                merged.update(zip(rest, rest_idx))
                c = series[tuple(merged[a] for a in sorted(merged))]
                if c != 0:
                    slice_coeffs[rest_idx] = c
            sub = MultiIndexSeries(len(rest), slice_coeffs, tuple(bound[a] for a in rest))
            dom = host.axes_subset(rest)

            def fn(pts: np.ndarray, _sub=sub) -> np.ndarray:
                from .series import evaluate_many

                return evaluate_many(_sub, pts)

            elements[(axes, idx)] = FunctionElement(dom, fn, provenance="closed-form")
    return TotalFamily(n, host, elements, bound)


# ---------------------------------------------------------------------------
# entry builders


def flat1_entry(rate: float = 2.0) -> RegistryEntry:
    domain = Polysector([Sector(-0.25 * math.pi, 0.25 * math.pi, math.inf)])

    def fn(pts: np.ndarray) -> np.ndarray:
        return np.exp(-rate / pts[:, 0])

    return RegistryEntry(
        id="flat1",
        dim=1,
        fn=SampledFunction(domain, fn),
        known={
            "flat_rates": (rate,),
            "gevrey_null_types": (rate,),
            "direction": (0.0,),
        },
        notes={
            "flat_rates": "exact: |e^{-R/z}| = e^{-R cos(theta)/r}, rate R on theta=0",
            "gevrey_null_types": "same rate via the flat/null-Gevrey equivalence",
            "direction": "bisector",
        },
    )


def euler_entry(z0: complex = 0.5, degree: int = 40, tol: float = 1e-12) -> RegistryEntry:
    theta0 = cmath.phase(complex(z0))
    domain = Polysector([Sector(theta0 - 0.5 * math.pi, theta0 + 0.5 * math.pi, math.inf)])
    spec = LaplaceSpec((z0,), tol=tol, max_depth=40)

    def fn(pts: np.ndarray) -> np.ndarray:
        vals, _ = truncated_laplace_with_error(lambda t: 1.0 / (1.0 + t), spec, pts[:, 0])
        return np.atleast_1d(vals)

    series = MultiIndexSeries(
        1, {(n,): (-1.0) ** n * math.factorial(n) for n in range(degree + 1)}, (degree,)
    )
    profile = TypeProfile(
        domain.sectors[0].alpha,
        domain.sectors[0].beta,
        lambda th: abs(z0) * math.cos(th - theta0),
    )
    return RegistryEntry(
        id="euler",
        dim=1,
        fn=SampledFunction(domain, fn),
        known={
            "series": series,
            "type_profile": (profile,),
            "z0": (complex(z0),),
            "borel_sum": "1/(1+t)",
        },
        notes={
            "series": "alternating factorial coefficients, exact",
            "type_profile": "cosine law of the truncated-Laplace expansion; "
            "cross-checked against remainder fits",
            "z0": "integration endpoint",
            "borel_sum": "geometric Borel transform of the series, exact",
        },
    )


def rat2_sector(opening: float = 1.2) -> Sector:
    return Sector(-opening, opening, math.inf)


def rat2_entry(opening: float = 1.2, cap: int = 8) -> RegistryEntry:
    domain = Polysector([rat2_sector(opening)] * 2)

    def fn(pts: np.ndarray) -> np.ndarray:
        return 1.0 / ((1.0 + pts[:, 0]) * (1.0 + pts[:, 1]))

    return RegistryEntry(
        id="rat2",
        dim=2,
        fn=SampledFunction(domain, fn),
        known={
            "total_family": rat2_total_family(opening, cap),
            "first_order": rat2_first_order_family(opening, cap),
            "series": rat2_series(cap),
            "gevrey_types": (math.inf, math.inf),
            "flat_rates": (0.0, 0.0),
        },
        notes={
            "total_family": "Taylor slices of 1/((1+z1)(1+z2)): f_{1n}(z2) = (-1)^n/(1+z2), exact",
            "first_order": "same slices restricted to single-axis indices",
            "series": "coefficients (-1)^{n+m}, exact",
            "gevrey_types": "the double series converges; no finite type",
            "flat_rates": "nonzero limit at the vertex: merely bounded",
        },
    )


def rat2_series(cap: int = 8) -> MultiIndexSeries:
    return MultiIndexSeries(
        2,
        {(h, k): (-1.0) ** (h + k) for h in range(cap + 1) for k in range(cap + 1)},
        (cap, cap),
    )


def _rat2_slice(domain: Polysector, sign: float) -> FunctionElement:
    def fn(pts: np.ndarray, _s=sign) -> np.ndarray:
        return _s / (1.0 + pts[:, 0])

    return FunctionElement(domain, fn, provenance="closed-form")


def rat2_total_family(opening: float = 1.2, cap: int = 8) -> TotalFamily:
    host = Polysector([rat2_sector(opening)] * 2)
    elements = {}
    ax0 = host.axes_subset((1,))
    ax1 = host.axes_subset((0,))
    for h in range(cap + 1):
        elements[((0,), (h,))] = _rat2_slice(ax0, (-1.0) ** h)
        elements[((1,), (h,))] = _rat2_slice(ax1, (-1.0) ** h)
        for k in range(cap + 1):
            elements[((0, 1), (h, k))] = FunctionElement.constant(
                (-1.0) ** (h + k), provenance="closed-form"
            )
    return TotalFamily(2, host, elements, (cap, cap))


def rat2_first_order_family(opening: float = 1.2, cap: int = 8) -> FirstOrderFamily:
    host = Polysector([rat2_sector(opening)] * 2)
    seq0 = tuple(_rat2_slice(host.axes_subset((1,)), (-1.0) ** n) for n in range(cap + 1))
    seq1 = tuple(_rat2_slice(host.axes_subset((0,)), (-1.0) ** m) for m in range(cap + 1))
    return FirstOrderFamily(2, host, (seq0, seq1))


def poly_series() -> MultiIndexSeries:
    return MultiIndexSeries(
        2,
        {(0, 0): 2.0, (1, 1): 1.0, (2, 1): -0.5, (0, 3): 0.25},
        (2, 3),
    )


def poly_entry() -> RegistryEntry:
    host = Polysector([Sector(-math.pi / 3, math.pi / 3, 1.0)] * 2)
    series = poly_series()

    def fn(pts: np.ndarray) -> np.ndarray:
        z1, z2 = pts[:, 0], pts[:, 1]
        return 2.0 + z1 * z2 - 0.5 * z1**2 * z2 + 0.25 * z2**3

    return RegistryEntry(
        id="poly",
        dim=2,
        fn=SampledFunction(host, fn),
        known={
            "series": series,
            "total_family": polynomial_family(series, host),
            "gevrey_types": (math.inf, math.inf),
            "flat_rates": (0.0, 0.0),
        },
        notes={
            "series": "the polynomial's own coefficients, exact",
            "total_family": "coefficient slices of a polynomial, exact",
            "gevrey_types": "polynomials converge everywhere",
            "flat_rates": "nonzero limit at the vertex: merely bounded",
        },
    )


def brg_const_entry(z0: complex = 0.5) -> RegistryEntry:
    theta0 = cmath.phase(complex(z0))
    domain = Polysector([Sector(theta0 - 0.5 * math.pi, theta0 + 0.5 * math.pi, math.inf)])

    def fn(pts: np.ndarray) -> np.ndarray:
        return 1.0 - np.exp(-z0 / pts[:, 0])

    profile = TypeProfile(
        domain.sectors[0].alpha,
        domain.sectors[0].beta,
        lambda th: abs(z0) * math.cos(th - theta0),
    )
    return RegistryEntry(
        id="brg_const",
        dim=1,
        fn=SampledFunction(domain, fn),
        known={
            "series": MultiIndexSeries(1, {(0,): 1.0}, (0,)),
            "type_profile": (profile,),
            "z0": (complex(z0),),
        },
        notes={
            "series": "constant series, exact",
            "type_profile": "cosine law; the flat part is e^{-z0/z} exactly",
            "z0": "integration endpoint",
        },
    )


def brg_const2_entry(z0=(0.5, 0.5)) -> RegistryEntry:
    z0 = tuple(complex(w) for w in z0)
    sectors = [
        Sector(cmath.phase(w) - 0.5 * math.pi, cmath.phase(w) + 0.5 * math.pi, math.inf)
        for w in z0
    ]
    domain = Polysector(sectors)

    def fn(pts: np.ndarray) -> np.ndarray:
        return (1.0 - np.exp(-z0[0] / pts[:, 0])) * (1.0 - np.exp(-z0[1] / pts[:, 1]))

    return RegistryEntry(
        id="brg_const2",
        dim=2,
        fn=SampledFunction(domain, fn),
        known={
            "series": MultiIndexSeries(2, {(0, 0): 1.0}, (0, 0)),
            "z0": z0,
            "first_order_closed": "f_{j,0}(z_other) = 1 - e^{-z0_other/z_other}, higher indices 0",
        },
        notes={
            "series": "constant series, exact",
            "z0": "integration endpoints",
            "first_order_closed": "separable product; each factor integrates in closed form",
        },
    )


_BUILDERS: dict[str, Callable[[], RegistryEntry]] = {
    "flat1": flat1_entry,
    "euler": euler_entry,
    "rat2": rat2_entry,
    "poly": poly_entry,
    "brg_const": brg_const_entry,
    "brg_const2": brg_const2_entry,
}


def ids() -> list[str]:
    return sorted(_BUILDERS)


def get(entry_id: str) -> RegistryEntry:
    try:
        builder = _BUILDERS[entry_id]
    except KeyError:
        raise UnknownEntryError(f"no testbed entry named {entry_id!r}; have {ids()}") from None
    return builder()
