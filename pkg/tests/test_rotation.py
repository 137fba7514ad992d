import math

import numpy as np
import pytest

from mklab import (
    InvariantError,
    OrbitState,
    ap_cost,
    ap_coupling_space,
    birkhoff_level,
    birkhoff_levels,
    ex33_cost,
    first_passage,
    golden_shift,
    graph_mixture_plan,
    level_matrix,
    make_instance,
    mixture_weights,
    shift_graph_plan,
    skew_step,
    solve_primal,
    step_sign,
    step_signs,
    transport_cost,
    uniform_marginal,
    zero_cost_plan,
)
from mklab.rotation import RotationInstance, _max_matching


class TestInstance:
    def test_coprimality_required(self):
        with pytest.raises(InvariantError):
            RotationInstance(n=8, shift=4)
        RotationInstance(n=8, shift=3)

    def test_minimum_size(self):
        with pytest.raises(InvariantError):
            RotationInstance(n=3, shift=1)

    def test_golden_shift_values(self):
        assert golden_shift(8) == 5
        assert golden_shift(144) == 89   # consecutive Fibonacci numbers
        assert math.gcd(golden_shift(24), 24) == 1
        assert math.gcd(golden_shift(192), 192) == 1

    def test_half_split_sizes(self):
        even = make_instance(8, 3)
        assert int((step_signs(even) == 1).sum()) == 4
        odd = make_instance(9, 2)
        signs = step_signs(odd)
        assert abs(int((signs == 1).sum()) - int((signs == -1).sum())) == 1


class TestStepSign:
    def test_endpoints(self):
        inst = make_instance(8, 3)
        assert step_sign(inst, 0) == 1
        assert step_sign(inst, 3) == 1
        assert step_sign(inst, 4) == -1
        assert step_sign(inst, 7) == -1

    def test_even_split_sums_to_zero(self):
        inst = make_instance(8, 3)
        assert int(step_signs(inst).sum()) == 0


class TestBirkhoffLevel:
    def test_zero_steps(self):
        inst = make_instance(10, 3)
        assert all(birkhoff_level(inst, i, 0) == 1 for i in range(10))

    def test_one_step(self):
        inst = make_instance(8, 3)
        assert birkhoff_level(inst, 0, 1) == 2   # lower half
        assert birkhoff_level(inst, 4, 1) == 0   # upper half

    def test_orbit_enumeration_value(self):
        # orbit of 0 under +3 mod 8: 0, 3, 6, 1 with signs +, +, -, +
        inst = make_instance(8, 3)
        assert birkhoff_level(inst, 0, 4) == 3

    def test_recursion_exhaustive(self):
        for n in (8, 9, 12, 25):
            inst = make_instance(n)
            levels = birkhoff_levels(inst, n)
            g = step_signs(inst)
            idx = np.arange(n)
            for k in range(n):
                assert np.array_equal(
                    levels[k + 1], levels[k] + g[(idx + k * inst.shift) % n])

    def test_period_sum_even(self):
        for n in (8, 24, 48):
            inst = make_instance(n)
            levels = birkhoff_levels(inst, n)
            assert np.all(levels[n] == 1)

    def test_table_matches_scalar(self):
        inst = make_instance(12, 5)
        levels = birkhoff_levels(inst, 11)
        for i in range(12):
            for k in range(12):
                assert levels[k, i] == birkhoff_level(inst, i, k)


class TestApCost:
    def test_entry_count(self):
        c = ap_cost(make_instance(8, 3))
        assert int(c.finite_mask.sum()) == 16

    def test_values(self):
        inst = make_instance(8, 3)
        c = ap_cost(inst)
        assert c.entries[0, 0] == 1.0
        assert c.entries[0, 3] == 2.0     # lower-half source
        assert c.entries[4, 7] == 0.0     # upper-half source
        assert math.isinf(c.entries[0, 1])

    def test_odd_rejected(self):
        with pytest.raises(InvariantError):
            ap_cost(make_instance(9, 2))

    def test_primal_value_one(self):
        inst = make_instance(8, 3)
        mu = uniform_marginal(inst)
        assert solve_primal(ap_cost(inst), mu, mu).primal_value == pytest.approx(
            1.0, abs=1e-9)

    def test_coupling_space_is_segment(self):
        for n in (8, 24):
            rank, dim = ap_coupling_space(make_instance(n))
            assert rank == 2 * n - 1
            assert dim == 1

    def test_every_graph_coupling_costs_one(self):
        from mklab import mixture_plan

        inst = make_instance(8, 3)
        c = ap_cost(inst)
        p0 = shift_graph_plan(inst, 0)
        p1 = shift_graph_plan(inst, 1)
        for rho in (0.0, 0.3, 0.5, 1.0):
            mix = mixture_plan([p0, p1], [rho, 1.0 - rho])
            assert transport_cost(c, mix) == pytest.approx(1.0, abs=1e-12)


class TestLevelMatrix:
    def test_diagonal_is_one(self):
        lm = level_matrix(make_instance(8, 3), 0)
        assert np.all(np.diag(lm) == 1.0)

    def test_one_step_matches_ap_graph(self):
        inst = make_instance(8, 3)
        lm = level_matrix(inst, 1)
        c = ap_cost(inst)
        idx = np.arange(8)
        step = (idx + 3) % 8
        assert np.array_equal(lm[idx, step], c.entries[idx, step])

    def test_recomputation_oracle(self):
        inst = make_instance(12, 5)
        lm = level_matrix(inst, 11)
        for i in range(12):
            for k in range(12):
                j = (i + k * 5) % 12
                expected = 1
                for t in range(k):
                    expected += 1 if 2 * ((i + t * 5) % 12) < 12 else -1
                assert lm[i, j] == expected

    def test_k_max_bounds(self):
        inst = make_instance(8, 3)
        with pytest.raises(InvariantError):
            level_matrix(inst, 8)
        with pytest.raises(InvariantError):
            level_matrix(inst, -1)


class TestEx33Cost:
    def test_clamps_to_zero(self):
        inst = make_instance(12, 5)
        lm = level_matrix(inst, 11)
        c = ex33_cost(inst, 11)
        fin = np.isfinite(lm)
        assert np.array_equal(c.entries[fin], np.maximum(lm[fin], 0.0))
        assert np.any(lm[fin] < 0)   # some cells really are clamped

    def test_zero_set_characterization(self):
        for n in (8, 12, 25, 48):
            inst = make_instance(n)
            k_max = n - 1
            c = ex33_cost(inst, k_max)
            levels = birkhoff_levels(inst, k_max)
            idx = np.arange(n)
            for k in range(k_max + 1):
                cols = (idx + k * inst.shift) % n
                zero = c.entries[idx, cols] == 0.0
                assert np.array_equal(zero, levels[k] <= 0)

    def test_primal_at_most_diagonal(self):
        inst = make_instance(12, 5)
        mu = uniform_marginal(inst)
        value = solve_primal(ex33_cost(inst, 11), mu, mu).primal_value
        assert value <= 1.0 + 1e-9


class TestSkewProduct:
    def test_single_step(self):
        inst = make_instance(8, 3)
        out = skew_step(inst, OrbitState(0, 0))
        assert out == OrbitState(3, 1)

    def test_telescoping(self):
        for n in (8, 9, 24):
            inst = make_instance(n)
            levels = birkhoff_levels(inst, n)
            for i in range(n):
                state = OrbitState(i, 0)
                for k in range(1, n + 1):
                    state = skew_step(inst, state)
                    assert state.level == levels[k, i] - 1

    def test_zero_cell_iff_negative_level(self):
        inst = make_instance(16)
        k_max = 15
        c = ex33_cost(inst, k_max)
        for i in range(16):
            state = OrbitState(i, 0)
            for k in range(1, k_max + 1):
                state = skew_step(inst, state)
                j = (i + k * inst.shift) % 16
                assert (c.entries[i, j] == 0.0) == (state.level <= -1)


class TestFirstPassage:
    def test_upper_half_hits_in_one_step(self):
        inst = make_instance(8, 3)
        for i in range(8):
            if step_sign(inst, i) == -1:
                assert first_passage(inst, i, 7) == 1

    def test_origin_rises_first(self):
        inst = make_instance(8, 3)
        fp = first_passage(inst, 0, 7)
        assert fp is None or fp > 1

    def test_matches_exhaustive_scan(self):
        inst = make_instance(144)
        k_max = 143
        levels = birkhoff_levels(inst, k_max)
        for i in range(144):
            expected = None
            for k in range(1, k_max + 1):
                if levels[k, i] <= 0:
                    expected = k
                    break
            assert first_passage(inst, i, k_max) == expected


class TestZeroCostPlan:
    def test_lp_cross_check(self):
        # construction is sufficient, not necessary: whenever it returns a
        # plan the LP value must be 0; absence proves nothing by itself.
        for n in (8, 12, 24, 31):
            inst = make_instance(n)
            k_max = n - 1
            plan = zero_cost_plan(inst, k_max)
            if plan is not None:
                c = ex33_cost(inst, k_max)
                assert transport_cost(c, plan) == 0.0
                mu = uniform_marginal(inst)
                assert solve_primal(c, mu, mu).primal_value <= 1e-9

    def test_matching_helper_finds_perfect_matching(self):
        adj = [[0, 1], [0], [2]]
        match = _max_matching(adj, 3)
        assert sorted(match) == [0, 1, 2]

    def test_matching_helper_reports_deficiency(self):
        adj = [[0], [0], [1]]
        match = _max_matching(adj, 2)
        assert match.count(-1) == 1


class TestMixtureWeights:
    def test_pure_geometric_for_flat_levels(self):
        inst = make_instance(8, 3)
        levels = np.ones((4, 8), dtype=np.int64)
        w = mixture_weights(inst, 3, levels)
        expected = np.array([1.0, 0.5, 0.25, 0.125])
        assert np.allclose(w, expected / expected.sum())

    def test_decay_condition_holds(self):
        # normalized weights satisfy w[k] * mean|level_k| <= C * 2^-k with
        # C the inverse of the pre-normalization total
        inst = make_instance(24)
        k_max = 10
        levels = birkhoff_levels(inst, k_max)
        w = mixture_weights(inst, k_max, levels)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        raw = np.array([2.0 ** (-k) / max(1.0, float(np.mean(np.abs(levels[k]))))
                        for k in range(k_max + 1)])
        big_c = 1.0 / raw.sum()
        for k in range(k_max + 1):
            level_norm = float(np.mean(np.abs(levels[k])))
            assert w[k] * level_norm <= big_c * 2.0 ** (-k) + 1e-12
        assert np.allclose(w, raw / raw.sum())

    def test_mixture_plan_has_union_support(self):
        inst = make_instance(12, 5)
        plan = graph_mixture_plan(inst, 3)
        expected = np.zeros((12, 12), dtype=bool)
        idx = np.arange(12)
        for k in range(4):
            expected[idx, (idx + k * 5) % 12] = True
        assert np.array_equal(plan.support(), expected)
        mu = uniform_marginal(inst)
        from mklab import verify_exact_coupling

        verify_exact_coupling(plan, mu, mu, 1e-12)
