import cmath
import math

import numpy as np
import pytest

from polygevrey import (
    DomainError,
    FamilyError,
    FirstOrderFamily,
    FunctionElement,
    MultiIndexSeries,
    Multidirection,
    Polysector,
    ProbeError,
    ProbeSpec,
    SampledFunction,
    Sector,
    TotalFamily,
    app_n,
    check_coherence,
    check_first_order_coherence,
    extract_element,
    family_from_series,
    first_order_of,
    fit_type_from_remainders,
    remainder_constants,
)
from polygevrey import testbed
from polygevrey.families import nonempty_subsets

PI = math.pi


def xy_family(host=None):
    ser = MultiIndexSeries(2, {(1, 1): 1.0}, (1, 1))
    host = host or Polysector([Sector(-PI / 3, PI / 3, 1.0)] * 2)
    return testbed.polynomial_family(ser, host)


class TestAppN:
    def test_cross_product_exact(self):
        fam = xy_family()
        assert app_n(fam, (2, 2), (0.3, 0.4)) == pytest.approx(0.12, abs=1e-15)

    def test_zero_truncation(self):
        fam = xy_family()
        assert app_n(fam, (0, 0), (0.3, 0.4)) == 0

    def test_one_variable_partial_sum(self):
        ser = MultiIndexSeries(1, {(n,): 1.0 for n in range(4)}, (3,))
        host = Polysector([Sector(-0.5, 0.5, 1.0)])
        fam = testbed.polynomial_family(ser, host)
        assert app_n(fam, (4,), (0.5,)) == pytest.approx(1.875)

    def test_polynomial_identity_at_random_points(self):
        entry = testbed.get("poly")
        fam = entry.known["total_family"]
        rng = np.random.default_rng(7)
        for _ in range(50):
            r = 0.05 + 0.85 * rng.random(2)
            th = (-PI / 3 + 2 * PI / 3 * rng.random(2)) * 0.999
            z = tuple(r * np.exp(1j * th))
            want = entry.fn(z)
            got = app_n(fam, (3, 4), z)
            assert abs(got - want) < 1e-13

    def test_missing_element(self):
        fam = xy_family()
        with pytest.raises(FamilyError):
            fam.element((0,), (5,))
        with pytest.raises(FamilyError):
            app_n(fam, (3, 3), (0.1, 0.1))

    def test_truncation_bound_validation(self):
        fam = xy_family()
        with pytest.raises(FamilyError):
            app_n(fam, (4, 0), (0.1, 0.1))

    def test_outside_host(self):
        fam = xy_family()
        with pytest.raises(DomainError):
            app_n(fam, (1, 1), (2.0, 0.1))

    def test_subset_order(self):
        assert nonempty_subsets(2) == [(0,), (1,), (0, 1)]


class TestExtract:
    def test_cross_term_coefficient(self):
        host = Polysector([Sector(-PI / 3, PI / 3, 1.0)] * 2)
        f = SampledFunction(host, lambda p: p[:, 0] * p[:, 1])
        res = extract_element(f, (0,), (1,), (0.5,))
        assert res.value == pytest.approx(0.5, abs=1e-9)
        assert res.converged

    def test_flat_function_vanishes(self):
        entry = testbed.get("flat1")
        for order in (0, 1, 3):
            res = extract_element(entry.fn, (0,), (order,), ())
            assert abs(res.value) < 1e-9

    def test_rational_coefficient(self):
        entry = testbed.get("rat2")
        res = extract_element(entry.fn, (0,), (2,), (0.25,))
        assert res.value == pytest.approx(0.8, abs=1e-7)

    def test_multi_axis(self):
        host = Polysector([Sector(-PI / 3, PI / 3, 1.0)] * 2)
        f = SampledFunction(host, lambda p: p[:, 0] * p[:, 1] + 2.0)
        res = extract_element(f, (0, 1), (1, 1), ())
        assert res.value == pytest.approx(1.0, abs=1e-8)
        res0 = extract_element(f, (0, 1), (0, 0), ())
        assert res0.value == pytest.approx(2.0, abs=1e-9)

    def test_strict_raises_with_best(self):
        host = Polysector([Sector(-0.5, 0.5, 1.0)])
        noisy = SampledFunction(
            host, lambda p: 1.0 / (1 + p[:, 0]) + 1e-5 * np.sin(1e4 * np.abs(p[:, 0]))
        )
        probe = ProbeSpec(tol=1e-12, steps=10)
        with pytest.raises(ProbeError) as info:
            extract_element(noisy, (0,), (1,), (), probe=probe)
        assert info.value.best is not None

    def test_z_rest_validation(self):
        entry = testbed.get("rat2")
        with pytest.raises(DomainError):
            extract_element(entry.fn, (0,), (1,), (5.0 * cmath.exp(2j),))


class TestCoherence:
    def test_series_family_passes(self):
        fam = family_from_series(testbed.rat2_series(cap=4), (0.5, 0.5))
        rep = check_coherence(fam, 1e-6, max_order=2)
        assert rep.checked_pairs > 0
        assert rep.max_residual < 1e-6
        assert rep.ok()
        assert not rep.probe_failures

    def test_injected_inconsistency_flagged(self):
        fam = family_from_series(testbed.rat2_series(cap=3), (0.5, 0.5))
        els = dict(fam.elements)
        els[((0, 1), (1, 1))] = FunctionElement.constant(els[((0, 1), (1, 1))].const + 1.0)
        bad = TotalFamily(2, fam.host, els, fam.index_bound)
        rep = check_coherence(bad, 1e-6, max_order=1)
        assert not rep.ok()
        assert any(nj == (1,) and nl == (1,) for (_, _, nj, nl, _) in rep.failures)

    def test_one_variable_vacuous(self):
        ser = MultiIndexSeries(1, {(n,): 1.0 for n in range(3)}, (2,))
        fam = family_from_series(ser, (0.5,))
        rep = check_coherence(fam, 1e-8)
        assert rep.checked_pairs == 0
        assert rep.max_residual == 0.0
        assert rep.ok()

    def test_threads_deterministic(self):
        fam = family_from_series(testbed.rat2_series(cap=3), (0.5, 0.5))
        rep1 = check_coherence(fam, 1e-6, max_order=1, threads=1)
        rep2 = check_coherence(fam, 1e-6, max_order=1, threads=4)
        assert rep1.max_residual == rep2.max_residual
        assert rep1.checked_pairs == rep2.checked_pairs

    def test_report_json(self):
        fam = family_from_series(testbed.rat2_series(cap=2), (0.5, 0.5))
        rep = check_coherence(fam, 1e-6, max_order=1)
        obj = rep.to_json()
        assert obj["checked_pairs"] == rep.checked_pairs
        assert obj["failures"] == []


class TestFirstOrder:
    def test_two_variable_selection(self):
        fam = family_from_series(testbed.rat2_series(cap=3), (0.5, 0.5))
        fam1 = first_order_of(fam)
        assert fam1.dim == 2
        assert len(fam1.sequences) == 2
        assert all(len(seq) == 4 for seq in fam1.sequences)
        # matches the worked two-variable shape: one sequence per axis, each
        # element a function of the other variable
        assert fam1.sequences[0][0].domain.dim == 1

    def test_one_variable(self):
        ser = MultiIndexSeries(1, {(n,): float(n + 1) for n in range(3)}, (2,))
        fam = family_from_series(ser, (0.5,))
        fam1 = first_order_of(fam)
        assert [el() for el in fam1.sequences[0]] == [1.0, 2.0, 3.0]

    def test_empty_cap(self):
        host = Polysector([Sector(-0.5, 0.5, 1.0)] * 2)
        fam = TotalFamily(2, host, {}, (0, 0))
        fam1 = first_order_of(fam)
        assert fam1.caps() == (-1, -1)

    def test_first_order_coherence_rat2(self):
        fam1 = testbed.rat2_first_order_family(cap=4)
        rep = check_first_order_coherence(fam1, 1e-6, max_order=2)
        assert rep.ok()
        assert rep.checked_pairs == 9


class TestFamilyFromSeries:
    def test_one_variable_constants(self):
        ser = MultiIndexSeries(1, {(0,): 2.0, (1,): -1.0}, (1,))
        fam = family_from_series(ser, (0.5,))
        assert fam.element((0,), (0,))() == 2.0
        assert fam.element((0,), (1,))() == -1.0

    def test_constant_series_closed_forms(self):
        # fhat = 1 on two axes: each first-order zero-index element is the
        # one-variable truncated Laplace of 1 in its own variable
        ser = MultiIndexSeries(2, {(0, 0): 1.0}, (0, 0))
        z0 = (0.5, 0.4)
        fam = family_from_series(ser, z0)
        for z in (0.1, 0.2 * cmath.exp(0.5j)):
            want2 = 1 - cmath.exp(-z0[1] / z)
            assert fam.element((0,), (0,))((z,)) == pytest.approx(want2, rel=1e-9)
            want1 = 1 - cmath.exp(-z0[0] / z)
            assert fam.element((1,), (0,))((z,)) == pytest.approx(want1, rel=1e-9)

    def test_constants_equal_coefficients(self):
        ser = testbed.rat2_series(cap=3)
        fam = family_from_series(ser, (0.5, 0.5))
        for h in range(4):
            for k in range(4):
                assert fam.element((0, 1), (h, k))() == ser[(h, k)]

    def test_borel_disc_guard(self):
        with pytest.raises(DomainError):
            family_from_series(testbed.euler_entry().known["series"], (1.2,))

    def test_extraction_recovers_elements(self):
        # coefficients of the assembled transform match the family elements
        from polygevrey import LaplaceSpec, brg_function

        ser = testbed.rat2_series(cap=6)
        z0 = (0.5, 0.5)
        fam = family_from_series(ser, z0)
        func = brg_function(ser, LaplaceSpec(z0, tol=1e-12))
        probe = ProbeSpec(steps=18, tol=1e-6)
        for idx in ((0,), (1,)):
            res = extract_element(func, (0,), idx, (0.12,), probe=probe, strict=False)
            want = fam.element((0,), idx)((0.12,))
            assert abs(res.value - want) <= max(5 * res.error, 1e-6)

    def test_manifest(self):
        fam = family_from_series(testbed.rat2_series(cap=1), (0.5, 0.5))
        man = fam.to_manifest()
        assert man["dim"] == 2
        provs = {tuple(e["J"]): e["provenance"] for e in man["elements"]}
        assert provs[(0,)] == "quadrature"
        assert provs[(0, 1)] == "series"


class TestRemainderFits:
    def test_exact_rate_recovery(self):
        cons = {(n,): math.factorial(n) * 2.0**n for n in range(3, 15)}
        rates, logc, rms = fit_type_from_remainders(cons)
        assert rates[0] == pytest.approx(0.5, rel=1e-10)
        assert rms < 1e-10

    def test_window_and_floor(self):
        entry = testbed.get("brg_const")
        # constant series padded with explicit zeros up to degree 9
        ser = MultiIndexSeries(1, {(0,): 1.0}, (9,))
        fam = family_from_series(ser, entry.known["z0"])
        radii = [0.4 * 0.8**k for k in range(14)]
        cons = remainder_constants(
            entry.fn, fam, (0.0,), [radii], [(n,) for n in range(10)], noise_floor=1e-10
        )
        # the function minus its constant term is exactly -e^{-z0/z}: every
        # c(N) is the flat sup, consistent with rate |z0| = 0.5
        rates, _, _ = fit_type_from_remainders(cons, window=(2, 9))
        assert rates[0] == pytest.approx(0.5, rel=0.15)
