import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shaken.exact import (
    ExactDistribution,
    ExactKernel,
    SizeCapError,
    brute_force_min,
    brute_force_pair_min,
    configuration_index,
    diagonal_minimum_check,
    detailed_balance_check,
    enumerate_configurations,
    exact_kernel,
    gibbs_distribution,
    marginal_identity_check,
    pair_gibbs,
    shaken_stationary,
    stationary_by_power_iteration,
    stationary_check,
    tv_distance,
    unpacked_log_weight,
    unpacked_weight_check,
)
from shaken.graph import InteractionGraph, Orientation, build_doubling, orient
from shaken.hamiltonian import log_stationary_weight
from shaken.lattice import z2_doubling
from shaken.optimize import q_threshold
from shaken.verify import k22_doubling, k22_witness

from conftest import small_doublings

# TV(pi, pi^G) on the 3x3 torus, J=1, q=2, lambda=-0.1; computed once by enumeration
TV_3X3_Q2 = 0.0027100009984154993


def cyclic_triangle(q=1.0, J=1.0):
    g = InteractionGraph(3, [(0, 1, J), (1, 2, J), (0, 2, J)])
    return build_doubling(g, Orientation(((0, 1), (1, 2), (2, 0))), q)


class TestEnumeration:
    def test_little_endian_order(self):
        g = InteractionGraph(3)
        c = enumerate_configurations(g)
        np.testing.assert_array_equal(c[0], [-1, -1, -1])
        np.testing.assert_array_equal(c[1], [1, -1, -1])
        np.testing.assert_array_equal(c[6], [-1, 1, 1])
        for i, s in enumerate(c):
            assert configuration_index(g, s) == i

    def test_frozen_sites_skipped(self):
        g = InteractionGraph(3, frozen={1: -1})
        c = enumerate_configurations(g)
        assert c.shape == (4, 3)
        assert np.all(c[:, 1] == -1)
        np.testing.assert_array_equal(c[2], [-1, -1, 1])

    def test_cap(self):
        with pytest.raises(SizeCapError):
            enumerate_configurations(InteractionGraph(30))
        with pytest.raises(SizeCapError):
            exact_kernel(build_doubling(InteractionGraph(15), Orientation(()), 1.0), "sh")


class TestContainers:
    def test_distribution_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ExactDistribution(np.array([0.5, 0.4]))
        with pytest.raises(ValueError):
            ExactDistribution(np.array([1.5, -0.5]))

    def test_kernel_rows(self):
        with pytest.raises(ValueError):
            ExactKernel(np.array([[0.5, 0.6], [0.5, 0.5]]), "x")


class TestKernels:
    def test_single_site_half_step(self):
        d = build_doubling(InteractionGraph(1), Orientation(()), 1.0)
        P = np.asarray(exact_kernel(d, "12"))
        stay = 1 / (1 + math.exp(-2))
        np.testing.assert_allclose(P, [[stay, 1 - stay], [1 - stay, stay]], rtol=1e-15)

    def test_shaken_is_product(self):
        d = cyclic_triangle(q=0.7)
        P = np.asarray(exact_kernel(d, "sh"))
        np.testing.assert_allclose(P, np.asarray(exact_kernel(d, "12")) @ np.asarray(exact_kernel(d, "21")),
                                   atol=1e-14)

    def test_cyclic_triangle_rows(self):
        d = cyclic_triangle()
        for which in ("12", "21", "sh", "sh-reversed", "alt", "heatbath"):
            assert exact_kernel(d, which).row_sum_error() <= 1e-12

    @given(small_doublings())
    def test_row_stochastic_and_positive(self, d):
        for which in ("sh", "sh-reversed", "alt"):
            K = exact_kernel(d, which)
            assert K.row_sum_error() <= 1e-12
        assert np.all(np.asarray(exact_kernel(d, "sh")) > 0)

    def test_unknown_kernel(self):
        with pytest.raises(ValueError):
            exact_kernel(cyclic_triangle(), "metropolis")


class TestStationarity:
    @given(small_doublings())
    def test_shaken(self, d):
        P = exact_kernel(d, "sh")
        pi = shaken_stationary(d)
        assert stationary_check(P, pi) <= 1e-12
        assert detailed_balance_check(P, pi)[0] <= 1e-13

    @given(small_doublings())
    def test_reversed_uses_left_sums(self, d):
        assert stationary_check(exact_kernel(d, "sh-reversed"), shaken_stationary(d, reverse=True)) <= 1e-12

    @given(small_doublings())
    def test_alternate_and_marginal(self, d):
        assert stationary_check(exact_kernel(d, "alt"), pair_gibbs(d)) <= 1e-12
        assert marginal_identity_check(d) <= 1e-13

    @given(small_doublings())
    def test_heat_bath_gibbs(self, d):
        P = exact_kernel(d.parent, "heatbath")
        pi = gibbs_distribution(d.parent)
        assert stationary_check(P, pi) <= 1e-13
        assert detailed_balance_check(P, pi)[0] <= 1e-15

    def test_uniform_when_decoupled(self):
        g = InteractionGraph(3, [(0, 1, 0.0), (1, 2, 0.0)])
        d = build_doubling(g, orient(g), 0.0)
        pi = np.full(8, 1 / 8)
        assert stationary_check(exact_kernel(d, "sh"), pi) <= 1e-15

    def test_reversed_stationary_is_left_sum(self):
        d = cyclic_triangle(q=0.4, J=0.9)
        pi = stationary_by_power_iteration(np.asarray(exact_kernel(d, "sh-reversed")))
        configs = enumerate_configurations(d.parent)
        w = np.exp([log_stationary_weight(d, s, reverse=True) for s in configs])
        np.testing.assert_allclose(pi, w / w.sum(), atol=1e-12)

    def test_power_iteration_agrees(self):
        d = z2_doubling(3, 0.6, 0.5, -0.1)
        pi = stationary_by_power_iteration(np.asarray(exact_kernel(d, "sh")))
        assert tv_distance(pi, shaken_stationary(d)) <= 1e-10

    def test_marginal_identity_small_cases(self):
        g = InteractionGraph(3, [(0, 1, 0.0), (1, 2, 0.0)], [0.3, -0.2, 0.1])
        assert marginal_identity_check(build_doubling(g, orient(g), 0.9)) <= 1e-13
        assert marginal_identity_check(z2_doubling(2, 0.4, 0.6, -0.1)) <= 1e-13

    def test_alternate_not_reversible(self):
        assert k22_witness() > 1e-6
        d = k22_doubling()
        gap, _ = detailed_balance_check(exact_kernel(d, "alt"), pair_gibbs(d))
        assert gap >= k22_witness()


class TestTV:
    def test_identity_and_disjoint(self):
        mu = np.array([0.2, 0.3, 0.5])
        assert tv_distance(mu, mu) == 0.0
        assert tv_distance([1, 0, 0], [0, 0, 1]) == 1.0

    @given(st.lists(st.floats(0.01, 1), min_size=4, max_size=4),
           st.lists(st.floats(0.01, 1), min_size=4, max_size=4),
           st.lists(st.floats(0.01, 1), min_size=4, max_size=4))
    def test_metric(self, a, b, c):
        a, b, c = (np.array(v) / sum(v) for v in (a, b, c))
        assert tv_distance(a, b) == pytest.approx(tv_distance(b, a), abs=1e-15)
        assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-15
        assert 0 <= tv_distance(a, b) <= 1

    def test_pinned_3x3(self):
        d = z2_doubling(3, 1.0, 2.0, -0.1)
        tv = tv_distance(shaken_stationary(d), gibbs_distribution(d.parent))
        assert tv == pytest.approx(TV_3X3_Q2, abs=1e-10)

    def test_pinned_3x3_via_product_formula(self):
        # independent route to pi through the torus product formula
        configs = enumerate_configurations(z2_doubling(3, 1.0, 2.0, -0.1).parent)
        logw = unpacked_log_weight(3, 1.0, 2.0, -0.1, configs)
        pi = np.exp(logw - logw.max())
        pi /= pi.sum()
        h = -np.sum(configs * (np.roll(configs.reshape(-1, 3, 3), -1, 1).reshape(-1, 9)
                               + np.roll(configs.reshape(-1, 3, 3), -1, 2).reshape(-1, 9)), axis=1) \
            + 0.2 * configs.sum(axis=1)
        gibbs = np.exp(-(h - h.min()))
        gibbs /= gibbs.sum()
        assert tv_distance(pi, gibbs) == pytest.approx(TV_3X3_Q2, abs=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            tv_distance([1.0], [0.5, 0.5])


class TestUnpacked:
    def test_all_plus_any_L(self):
        for L in (2, 3, 5, 8):
            assert unpacked_weight_check(L, 0.7, 1.1, -0.2, samples=0) <= 1e-12

    def test_exhaustive_3x3(self):
        assert unpacked_weight_check(3, 0.7, 1.1, -0.2) <= 1e-12

    @pytest.mark.parametrize("J, q", [(0.5, 0.3), (1.2, 2.0)])
    def test_zero_field(self, J, q):
        assert unpacked_weight_check(3, J, q, 0.0) <= 1e-12

    def test_spot_checks_large(self):
        # log-domain rounding grows with the 256 summed site terms
        assert unpacked_weight_check(16, 0.9, 1.4, -0.3, samples=200) <= 256 * 1e-13


class TestMinimization:
    def test_ferromagnetic_triangle(self):
        g = InteractionGraph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
        e, arg = brute_force_min(g)
        assert e == -3.0
        assert sorted(map(tuple, arg)) == [(-1, -1, -1), (1, 1, 1)]

    def test_diagonal_minimum_above_threshold(self, rng):
        for k in range(20):
            n = int(rng.integers(2, 9))
            edges = [(i, j, float(rng.integers(-3, 4))) for i in range(n) for j in range(i + 1, n)
                     if rng.random() < 0.5]
            g = InteractionGraph(n, edges, rng.integers(-1, 2, size=n).astype(float))
            o = orient(g, seed=k)
            rep = diagonal_minimum_check(build_doubling(g, o, q_threshold(g, o) + 0.01))
            assert rep.hypothesis and rep.diagonal_only
            assert rep.gap == pytest.approx(0.0, abs=1e-9)

    def test_below_threshold_counterexample(self):
        # antiferromagnetic cyclic triangle: pairs escape the frustration
        d = cyclic_triangle(q=0.1, J=-1.0)
        rep = diagonal_minimum_check(d)
        assert not rep.hypothesis
        assert rep.gap < -1.0
        assert not rep.diagonal_only and rep.non_diagonal

    def test_threshold_equality_is_not_enough(self):
        d = cyclic_triangle(q=1.0)
        assert not diagonal_minimum_check(d).hypothesis

    def test_pair_min_cap(self):
        with pytest.raises(SizeCapError):
            brute_force_pair_min(build_doubling(InteractionGraph(13), Orientation(()), 1.0))
