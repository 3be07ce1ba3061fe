import numpy as np
import pytest
from conftest import (CONDS, PR_BOX, WORKED_EXAMPLE, WORKED_EXAMPLE_WITNESS,
                      chsh_feasible, random_consistent_tables, tables_to_joint)

from sftkit.lft import (JointTable, build_lft_system, discretize_responses,
                        enforce_marginal_equality, exhaustive_lft_oracle,
                        format_joint_tables, joint_tables_from_csv,
                        joint_tables_to_csv, marginal_selectivity_battery,
                        repair_joint_2x2, solve_lft, witness_residual)
from sftkit.trials import Channels, TrialRecord, TrialSet

# Frozen expected equality system for the 2x2 case: rows are conditions
# a1b1, a1b2, a2b1, a2b2, each with cells (a1,b1), (a1,b2), (a2,b1), (a2,b2);
# columns are quadruples in lexicographic order.
SYSTEM_2X2 = np.array([
    [1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1],
    [1, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 1],
    [1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1],
    [1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0],
    [0, 1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 1, 0],
    [0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 1],
], dtype=float)


def make_tables(cell_map):
    return {cond: JointTable(cond, ("a1", "a2"), ("b1", "b2"),
                             np.array(cells, dtype=float), 100)
            for cond, cells in cell_map.items()}


def worked_example_tables():
    return make_tables({c: [[float(v) for v in row] for row in t]
                        for c, t in WORKED_EXAMPLE.items()})


class TestJointTable:
    def test_validation(self):
        with pytest.raises(ValueError):
            JointTable("a1b1", ("a1", "a2"), ("b1", "b2"),
                       np.array([[0.5, 0.5], [0.5, 0.5]]), 10)  # sums to 2
        with pytest.raises(ValueError):
            JointTable("a1b1", ("a1", "a2"), ("b1", "b2"),
                       np.array([[1.2, -0.2], [0.0, 0.0]]), 10)

    def test_marginals(self):
        t = JointTable("a1b1", ("a1", "a2"), ("b1", "b2"),
                       np.array([[0.2, 0.2], [0.1, 0.5]]), 10)
        assert np.allclose(t.a_marginal, [0.4, 0.6])
        assert np.allclose(t.b_marginal, [0.3, 0.7])

    def test_csv_round_trip(self):
        tabs = worked_example_tables()
        back = joint_tables_from_csv(joint_tables_to_csv(tabs))
        for cond in CONDS:
            assert np.allclose(back[cond].probs, tabs[cond].probs)
            assert back[cond].count == tabs[cond].count

    def test_format_is_printable(self):
        text = format_joint_tables(worked_example_tables())
        assert "[a1b1]" in text and "B-marg" in text


def _trial(i, a_final, b_final):
    return TrialRecord("e", "s", i, 30.0, 30.0, a_final, b_final, 100.0, Channels.DOUBLE)


class TestDiscretize:
    def _conditions(self, a_vals, b_vals):
        ts = TrialSet(tuple(_trial(i, a, b) for i, (a, b) in
                            enumerate(zip(a_vals, b_vals))))
        return {c: ts for c in CONDS}

    def test_even_split(self):
        conds = self._conditions([40, 60, 45, 55], [40, 60, 45, 55])
        tabs = discretize_responses(conds, [50], [50])
        assert tabs["a1b1"].a_marginal[0] == pytest.approx(0.5)

    def test_boundary_value_goes_low(self):
        conds = self._conditions([50.0], [50.0])
        tabs = discretize_responses(conds, [50], [50])
        assert tabs["a1b1"].probs[0, 0] == 1.0

    def test_two_cuts_three_bins(self):
        conds = self._conditions([-5, 10, 30, 0, 20], [-5, 10, 30, 0, 20])
        tabs = discretize_responses(conds, [0, 20], [0, 20])
        t = tabs["a1b1"]
        assert len(t.a_bins) == 3
        assert t.probs.sum() == pytest.approx(1.0)
        # -5 and 0 in bin 1; 10 and 20 in bin 2; 30 in bin 3
        assert np.allclose(t.a_marginal, [2 / 5, 2 / 5, 1 / 5])

    def test_empty_condition_rejected(self):
        conds = self._conditions([40], [40])
        conds["a2b2"] = TrialSet(())
        with pytest.raises(ValueError):
            discretize_responses(conds, [50], [50])


class TestMarginalSelectivity:
    def test_identical_distributions_pass(self):
        rng = np.random.default_rng(0)
        samples = {c: (rng.normal(40, 8, 500), rng.normal(40, 8, 500)) for c in CONDS}
        report = marginal_selectivity_battery(samples)
        assert report.passed
        assert set(report.tests) == {"A|alpha1", "A|alpha2", "B|beta1", "B|beta2"}

    def test_shifted_b_fails_b_comparisons(self):
        rng = np.random.default_rng(1)
        sd = 8.0
        samples = {
            "a1b1": (rng.normal(40, sd, 500), rng.normal(40, sd, 500)),
            "a1b2": (rng.normal(40, sd, 500), rng.normal(40, sd, 500)),
            "a2b1": (rng.normal(40, sd, 500), rng.normal(40 + 2 * sd, sd, 500)),
            "a2b2": (rng.normal(40, sd, 500), rng.normal(40 + 2 * sd, sd, 500)),
        }
        report = marginal_selectivity_battery(samples)
        assert not report.passed
        assert report.tests["B|beta1"].p_value < 0.05 / 4
        assert report.tests["B|beta2"].p_value < 0.05 / 4
        assert report.tests["A|alpha1"].p_value > 0.05 / 4


class TestRepair:
    def test_worked_marginal_repair(self):
        cells = repair_joint_2x2(0.8811, 0.9151, 0.9638)
        assert abs(cells[0, 0] - 0.8811) <= 1e-12
        assert abs(cells[0, 1] - 0.0340) <= 1e-12
        assert abs(cells[1, 0] - 0.0827) <= 1e-12
        assert abs(cells[1, 1] - 0.0022) <= 1e-12

    def test_exactly_consistent_tables_are_fixed_point(self):
        tabs = worked_example_tables()
        out = enforce_marginal_equality(tabs)
        for cond in CONDS:
            assert np.allclose(out[cond].probs, tabs[cond].probs, atol=1e-15)

    def test_negative_cell_is_error(self):
        with pytest.raises(ValueError, match="negative probability"):
            repair_joint_2x2(0.99, 0.95, 0.5)

    def test_repair_enforces_exact_equality_and_keeps_corner(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            # jitter a consistent instance so that its marginals disagree
            base = tables_to_joint(random_consistent_tables(rng))
            jittered = {}
            ok = True
            for cond, tab in base.items():
                noise = rng.uniform(-0.01, 0.01, size=(2, 2))
                cells = tab.probs + noise - noise.mean()
                if cells.min() < 0.02:
                    ok = False
                    break
                cells = cells / cells.sum()
                jittered[cond] = JointTable(cond, tab.a_bins, tab.b_bins, cells, 100)
            if not ok:
                continue
            try:
                out = enforce_marginal_equality(jittered)
            except ValueError:
                continue
            assert np.allclose(out["a1b1"].a_marginal, out["a1b2"].a_marginal, atol=1e-15)
            assert np.allclose(out["a2b1"].a_marginal, out["a2b2"].a_marginal, atol=1e-15)
            assert np.allclose(out["a1b1"].b_marginal, out["a2b1"].b_marginal, atol=1e-15)
            assert np.allclose(out["a1b2"].b_marginal, out["a2b2"].b_marginal, atol=1e-15)
            for cond in CONDS:
                assert out[cond].probs[0, 0] == jittered[cond].probs[0, 0]

    def test_ipf_repair_for_3x3(self):
        rng = np.random.default_rng(7)
        tabs = {}
        for cond in CONDS:
            cells = rng.uniform(0.5, 1.5, size=(3, 3))
            cells /= cells.sum()
            tabs[cond] = JointTable(cond, ("a1", "a2", "a3"), ("b1", "b2", "b3"),
                                    cells, 100)
        out = enforce_marginal_equality(tabs)
        assert np.allclose(out["a1b1"].a_marginal, out["a1b2"].a_marginal, atol=1e-9)
        assert np.allclose(out["a1b1"].b_marginal, out["a2b1"].b_marginal, atol=1e-9)


class TestBuildSystem:
    def test_matches_frozen_2x2_system(self):
        system = build_lft_system(worked_example_tables())
        assert np.array_equal(system.matrix, SYSTEM_2X2)
        expected_rhs = [.2, .2, .1, .5, .3, .1, .4, .2, .1, .5, .2, .2, .4, .2, .3, .1]
        assert np.allclose(system.rhs, expected_rhs)

    def test_variable_order_lexicographic(self):
        system = build_lft_system(worked_example_tables())
        assert system.variable_labels[0] == ("a1", "a1", "b1", "b1")
        assert system.variable_labels[1] == ("a1", "a1", "b1", "b2")
        assert system.variable_labels[4] == ("a1", "a2", "b1", "b1")
        assert system.variable_labels[-1] == ("a2", "a2", "b2", "b2")

    def test_2x3_shape_and_row_sums(self):
        rng = np.random.default_rng(3)
        pa = np.array([0.4, 0.6])
        pb = np.array([0.2, 0.3, 0.5])
        tabs = {}
        for cond in CONDS:
            cells = np.outer(pa, pb)  # independent, marginally consistent
            tabs[cond] = JointTable(cond, ("a1", "a2"), ("b1", "b2", "b3"), cells, 60)
        system = build_lft_system(tabs)
        assert system.matrix.shape == (24, 36)
        assert np.all(system.matrix.sum(axis=1) == 6)
        assert np.allclose(system.rhs.reshape(4, 6).sum(axis=1), 1.0)

    def test_marginal_mismatch_rejected(self):
        tabs = worked_example_tables()
        bad = dict(tabs)
        # A-marginal [0.5, 0.5] disagrees with a1b1's [0.4, 0.6]
        bad["a1b2"] = JointTable("a1b2", ("a1", "a2"), ("b1", "b2"),
                                 np.array([[0.45, 0.05], [0.25, 0.25]]), 100)
        with pytest.raises(ValueError, match="marginal mismatch"):
            build_lft_system(bad)


class TestSolve:
    def test_worked_example_feasible_with_valid_witness(self):
        system = build_lft_system(worked_example_tables())
        verdict = solve_lft(system)
        assert verdict.feasible
        assert verdict.residual <= 1e-9
        assert verdict.solution.min() >= -1e-12
        assert verdict.solution.sum() == pytest.approx(1.0, abs=1e-9)
        assert witness_residual(system, WORKED_EXAMPLE_WITNESS) <= 1e-12

    def test_independent_product_feasible(self):
        tabs = make_tables({c: [[0.25, 0.25], [0.25, 0.25]] for c in CONDS})
        assert solve_lft(build_lft_system(tabs)).feasible
        assert exhaustive_lft_oracle(tabs)

    def test_pr_box_infeasible_both_ways(self):
        tabs = make_tables({c: [[float(v) for v in row] for row in t]
                            for c, t in PR_BOX.items()})
        verdict = solve_lft(build_lft_system(tabs))
        assert not verdict.feasible
        assert verdict.solution is None
        assert not exhaustive_lft_oracle(PR_BOX)

    def test_oracle_on_worked_example(self):
        assert exhaustive_lft_oracle(WORKED_EXAMPLE)
        assert exhaustive_lft_oracle(worked_example_tables())

    def test_witness_reproduces_tables(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            tabs = tables_to_joint(random_consistent_tables(rng))
            system = build_lft_system(tabs)
            verdict = solve_lft(system)
            if verdict.feasible:
                assert witness_residual(system, verdict.solution) <= 1e-9

    def test_bland_witness_deterministic(self):
        system = build_lft_system(worked_example_tables())
        w1 = solve_lft(system).solution
        w2 = solve_lft(system).solution
        assert np.array_equal(w1, w2)


class TestAgreementSweep:
    def test_solver_oracle_and_hull_criterion_agree(self):
        rng = np.random.default_rng(2024)
        n_feasible = 0
        for _ in range(300):
            tabs_fr = random_consistent_tables(rng)
            joint = tables_to_joint(tabs_fr)
            by_simplex = solve_lft(build_lft_system(joint)).feasible
            by_oracle = exhaustive_lft_oracle(tabs_fr)
            by_hull = chsh_feasible(tabs_fr)
            assert by_simplex == by_oracle == by_hull
            n_feasible += by_simplex
        # the generator must exercise both outcomes
        assert 0 < n_feasible < 300


class TestInvariance:
    def _permute(self, tabs, a_perm, b_perm):
        out = {}
        for cond, tab in tabs.items():
            cells = tab.probs[np.ix_(a_perm, b_perm)]
            out[cond] = JointTable(cond, tab.a_bins, tab.b_bins, cells, tab.count)
        return out

    def _transpose(self, tabs):
        out = {}
        for i in (1, 2):
            for j in (1, 2):
                src = tabs[f"a{i}b{j}"]
                out[f"a{j}b{i}"] = JointTable(f"a{j}b{i}", src.b_bins, src.a_bins,
                                              src.probs.T, src.count)
        return out

    def test_feasibility_invariant_under_relabeling_and_transpose(self):
        rng = np.random.default_rng(77)
        for _ in range(40):
            tabs = tables_to_joint(random_consistent_tables(rng))
            base = solve_lft(build_lft_system(tabs)).feasible
            flipped = self._permute(tabs, [1, 0], [1, 0])
            assert solve_lft(build_lft_system(flipped)).feasible == base
            swapped = self._transpose(tabs)
            assert solve_lft(build_lft_system(swapped)).feasible == base
