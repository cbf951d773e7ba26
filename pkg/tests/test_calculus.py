"""Sum rules, inf-convolution, and the primal-dual solver."""

import numpy as np
import pytest

import fenchelkit as fk


def brute_infconv(a, b, xs):
    za, zb = a.grid.nodes(), b.grid.nodes()
    out = []
    for x in xs:
        best = np.inf
        for i, z in enumerate(za):
            for j, w in enumerate(zb):
                if abs(z + w - x) < 1e-9:
                    best = min(best, a.values[i] + b.values[j])
        out.append(best)
    return np.array(out)


class TestInfConvolution:
    def test_matches_exhaustive_split(self):
        rng = np.random.RandomState(3)
        for _ in range(20):
            n = rng.randint(3, 25)
            g = fk.Grid1D(-1.0, 1.0, n)
            a = fk.GridFunction(g, rng.uniform(-1.0, 1.0, size=n))
            b = fk.GridFunction(g, rng.uniform(-1.0, 1.0, size=n))
            ic = fk.inf_convolution(a, b)
            want = brute_infconv(a, b, ic.grid.nodes())
            assert np.max(np.abs(ic.values - want)) < 1e-12

    def test_split_indices_attain(self):
        g = fk.Grid1D(-1.0, 1.0, 9)
        a = fk.GridFunction(g, g.nodes() ** 2)
        b = fk.GridFunction(g, np.abs(g.nodes()))
        ic, split = fk.inf_convolution(a, b, return_split=True)
        xs = ic.grid.nodes()
        za = g.nodes()
        for k, x in enumerate(xs):
            i = int(split[k])
            if i < 0:
                assert np.isinf(ic.values[k])
                continue
            # the reported index must attain the minimum
            j = int(round((x - za[i] - g.lo) / g.h))
            assert 0 <= j < g.n
            assert a.values[i] + b.values[j] == pytest.approx(ic.values[k])

    def test_identity_element(self):
        # convolving with the indicator-of-zero sampled as one finite node
        g = fk.Grid1D(-1.0, 1.0, 9)
        a = fk.GridFunction(g, g.nodes() ** 2)
        z = fk.Grid1D(-0.25, 0.25, 3)
        e = fk.GridFunction(z, np.array([np.inf, 0.0, np.inf]))
        ic = fk.inf_convolution(a, e)
        inner = slice(1, -1)
        assert np.allclose(ic.values[inner][np.isfinite(ic.values[inner])],
                           a.values[np.isfinite(a.values)])

    def test_spacing_mismatch_rejected(self):
        a = fk.GridFunction(fk.Grid1D(-1.0, 1.0, 5), np.zeros(5))
        b = fk.GridFunction(fk.Grid1D(-1.0, 1.0, 7), np.zeros(7))
        with pytest.raises(fk.GridMismatchError):
            fk.inf_convolution(a, b)


class TestConjugateOfSum:
    def test_sum_rule_against_direct_conjugation(self):
        # (f+g)* computed by the rule equals the direct sampled transform
        g = fk.Grid1D(-2.0, 2.0, 81)
        f1 = fk.Sampled(fk.GridFunction(g, g.nodes() ** 2))
        f2 = fk.Sampled(fk.GridFunction(g, np.abs(g.nodes())))
        out = fk.conjugate_of_sum(f1, f2)
        direct = fk.conjugate(
            fk.Sampled(fk.GridFunction(g, f1.values + f2.values)),
            dual_grid=out.grid)
        assert np.max(np.abs(out.values - direct.values)) < 1e-10

    def test_disjoint_domains_rejected(self):
        g = fk.Grid1D(-1.0, 1.0, 21)
        left = np.where(g.nodes() < -0.5, 0.0, np.inf)
        right = np.where(g.nodes() > 0.5, 0.0, np.inf)
        f1 = fk.Sampled(fk.GridFunction(g, left))
        f2 = fk.Sampled(fk.GridFunction(g, right))
        with pytest.raises(fk.QualificationError):
            fk.conjugate_of_sum(f1, f2)


class TestFenchelRockafellar:
    def test_quadratic_pair_exact(self):
        # both sides PD quadratics: closed-form optimum
        phi = fk.Quadratic(np.array([[2.0]]), np.array([0.0]))
        psi = fk.Quadratic(np.array([[1.0]]), np.array([-1.0]))
        A = fk.LinearMap(np.array([[1.0]]))
        # minimize x^2 + (x^2/2 - x): at x = 1/3
        pd = fk.fenchel_rockafellar(phi, psi, A)
        assert pd.certified
        assert pd.primal_value == pytest.approx(-1.0 / 6.0, abs=1e-10)
        assert abs(pd.gap) < 1e-10

    def test_rectangular_map(self):
        phi = fk.Quadratic(np.eye(2), np.zeros(2))
        psi = fk.Quadratic(np.array([[1.0]]), np.array([-2.0]))
        A = fk.LinearMap(np.array([[1.0, 1.0]]))
        # min |u|^2/2 + (u1+u2)^2/2 - 2(u1+u2); u1=u2=t: t at 2/3
        pd = fk.fenchel_rockafellar(phi, psi, A)
        t = 2.0 / 3.0
        want = t * t + 0.5 * (2 * t) ** 2 - 2.0 * (2 * t)
        assert pd.primal_value == pytest.approx(want, abs=1e-9)
        assert abs(pd.gap) < 1e-8

    def test_interval_constraint_side(self):
        # psi an interval indicator: projected-gradient branch
        phi = fk.Quadratic(np.array([[1.0]]), np.array([-3.0]))
        psi = fk.IndicatorInterval(-1.0, 1.0)
        A = fk.LinearMap(np.array([[1.0]]))
        pd = fk.fenchel_rockafellar(phi, psi, A)
        # unconstrained min at x=3, clipped to 1: value 1/2 - 3
        assert pd.primal_value == pytest.approx(-2.5, abs=1e-7)
        assert pd.certified

    def test_extremality_of_reported_points(self):
        phi = fk.Quadratic(np.array([[2.0]]), np.array([0.0]))
        psi = fk.Quadratic(np.array([[1.0]]), np.array([-1.0]))
        A = fk.LinearMap(np.array([[1.0]]))
        pd = fk.fenchel_rockafellar(phi, psi, A)
        rep = fk.extremality_check(phi, psi, A, pd.primal_point, pd.dual_point)
        assert rep.passed
        assert abs(rep.gap_primal) < 1e-8 and abs(rep.gap_dual) < 1e-8


class TestExtremality:
    def test_fails_off_optimum(self):
        phi = fk.Quadratic(np.array([[2.0]]), np.array([0.0]))
        psi = fk.Quadratic(np.array([[1.0]]), np.array([-1.0]))
        A = fk.LinearMap(np.array([[1.0]]))
        rep = fk.extremality_check(phi, psi, A, np.array([1.0]), np.array([0.5]))
        assert not rep.passed

    def test_gaps_are_fenchel_young_gaps(self):
        phi = fk.NormPower(2.0)
        psi = fk.NormPower(2.0)
        A = fk.LinearMap(np.array([[1.0]]))
        u = np.array([0.7])
        s = np.array([0.7])
        rep = fk.extremality_check(phi, psi, A, u, s)
        # psi side at equality: s = grad psi(Au)
        assert rep.gap_dual == pytest.approx(0.0, abs=1e-12)
        # phi side needs -A's in subdiff: -0.7 vs gradient 0.7
        assert rep.gap_primal == pytest.approx(fk.fenchel_gap(phi, 0.7, -0.7), abs=1e-12)
