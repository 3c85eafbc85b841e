#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Tests for extreme period identification, selection loops and representation modification
"""

import json
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add the parent directory to path to fix imports
parent_dir = str(Path(__file__).resolve().parent)
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

from tsaextreme.exceptions import DuplicateAttributeSpec, MaxExtremesExceeded, MissingAttribute, TooManyExtremes
from tsaextreme.models.clustering import KMeansConfig, kmeans_multistart
from tsaextreme.models.extremes import (
    ExtremeDay,
    ExtremePeriodSelector,
    ExtremeSource,
    ExtremeSpec,
    ModificationMode,
    SelectionLimits,
    iterate_feasibility,
    iterate_slack,
    make_virtual_day,
    modify_append,
    modify_feasibility_steps,
    select_simple,
)
from tsaextreme.models.resys import GridLimit, TechnologyParams, build_design_problem, extract_operations
from tsaextreme.models.timeseries import DEFAULT_SCHEMA, Dataset, z_normalize
from tsaextreme.solvers import BoundedSimplexSolver
from tsaextreme.utils.synthgen import SynthConfig, duplicated_day_dataset, generate


def _cluster(data: Dataset, k: int, n_init: int = 5):
    normalized, norm = z_normalize(data)
    return kmeans_multistart(normalized.periods(), KMeansConfig(k=k, n_init=n_init)), norm


def _flat_dataset(n_days: int = 10) -> Dataset:
    shape = (n_days, 24)
    return Dataset.from_matrices({
        "el_demand": np.full(shape, 0.5),
        "heat_demand": np.full(shape, 1.0),
        "t_ambient": np.full(shape, 5.0),
        "solar_cf": np.full(shape, 0.2),
        "el_price": np.full(shape, 0.3),
    })


def _planted_dataset() -> Dataset:
    rng = np.random.default_rng(0)
    shape = (10, 24)
    m = {
        "el_demand": rng.uniform(0.2, 0.6, shape),
        "heat_demand": rng.uniform(0.5, 1.5, shape),
        "t_ambient": rng.uniform(0.0, 10.0, shape),
        "solar_cf": rng.uniform(0.1, 0.8, shape),
        "el_price": rng.uniform(0.2, 0.3, shape),
    }
    m["el_demand"][2, 18] = 3.0
    m["heat_demand"][5, 6] = 4.0
    m["solar_cf"][7] = 0.01
    return Dataset.from_matrices(m)


class TestStatisticalExtremes(unittest.TestCase):
    """Simple extremes and virtual days."""

    def test_planted_peaks(self):
        days = [e.day_index for e in select_simple(_planted_dataset())]
        self.assertEqual(days, [2, 5, 7])

    def test_coincident_peaks_deduplicated(self):
        data = _planted_dataset()
        m = {name: np.array(data.matrix(name)) for name in data.names}
        m["heat_demand"][2, 6] = 5.0
        days = [e.day_index for e in select_simple(Dataset.from_matrices(m))]
        self.assertEqual(days, [2, 7])

    def test_constant_dataset(self):
        extremes = select_simple(_flat_dataset())
        self.assertEqual([e.day_index for e in extremes], [0])
        self.assertEqual(extremes[0].source, ExtremeSource.STATISTICAL)

    def test_missing_attribute(self):
        data = Dataset.from_matrices({"el_demand": np.ones((3, 24)), "heat_demand": np.ones((3, 24))})
        with self.assertRaises(MissingAttribute):
            select_simple(data)

    def test_virtual_day_splices_rows(self):
        data = _planted_dataset()
        virtual = make_virtual_day(data)
        self.assertTrue(virtual.day_index < 0)
        np.testing.assert_array_equal(virtual.row("el_demand"), data.matrix("el_demand")[2])
        np.testing.assert_array_equal(virtual.row("heat_demand"), data.matrix("heat_demand")[5])
        np.testing.assert_array_equal(virtual.row("t_ambient"), data.matrix("t_ambient")[5])
        np.testing.assert_array_equal(virtual.row("solar_cf"), data.matrix("solar_cf")[7])

    def test_virtual_day_of_single_extreme_day(self):
        data = _flat_dataset(4)
        virtual = make_virtual_day(data)
        np.testing.assert_array_equal(virtual.matrix, data.day(0).matrix)

    def test_virtual_heat_integral_dominates(self):
        data = generate(SynthConfig(n_days=15, seed=3))
        virtual = make_virtual_day(data, [ExtremeSpec("heat_demand", "integral", "max")])
        sums = data.matrix("heat_demand").sum(axis=1)
        self.assertGreaterEqual(virtual.row("heat_demand").sum(), sums.max() - 1e-12)

    def test_duplicate_spec(self):
        with self.assertRaises(DuplicateAttributeSpec):
            make_virtual_day(_planted_dataset(), [ExtremeSpec("heat_demand"), ExtremeSpec("heat_demand", "integral")])


class TestModification(unittest.TestCase):
    """Feasibility steps and append."""

    def setUp(self):
        self.data = generate(SynthConfig(n_days=12, seed=1))
        self.clusters, self.norm = _cluster(self.data, k=3)
        self.extremes = [ExtremeDay(1, ExtremeSource.STATISTICAL), ExtremeDay(8, ExtremeSource.FEASIBILITY)]

    def test_feasibility_steps_bookkeeping(self):
        reps = modify_feasibility_steps(self.clusters, self.data, self.extremes, self.norm)
        self.assertEqual(len(reps), 5)
        np.testing.assert_array_equal(reps.weights[:3], self.clusters.counts)
        np.testing.assert_array_equal(reps.weights[3:], [0.0, 0.0])
        self.assertAlmostEqual(float(reps.weights.sum()), 12.0)
        np.testing.assert_array_equal(reps.periods[3].matrix, self.data.day(1).matrix)
        self.assertEqual(reps.labels, ["cluster"] * 3 + ["extreme"] * 2)

    def test_feasibility_steps_without_extremes(self):
        reps = modify_feasibility_steps(self.clusters, self.data, [], self.norm)
        self.assertEqual(len(reps), 3)
        for name in DEFAULT_SCHEMA:
            self.assertAlmostEqual(reps.weighted_mean(name), float(self.data.profile(name).values.mean()), places=9)

    def test_zero_weight_order_and_duplicates_do_not_matter(self):
        solver = BoundedSimplexSolver()
        params, grid = TechnologyParams(), GridLimit(c_lim=1.0)

        def objective(extremes):
            reps = modify_feasibility_steps(self.clusters, self.data, extremes, self.norm)
            return solver.solve(build_design_problem(reps, params, grid)).objective

        base = objective(self.extremes)
        swapped = objective(list(reversed(self.extremes)))
        doubled = objective(self.extremes + [ExtremeDay(8, ExtremeSource.FEASIBILITY)])
        self.assertAlmostEqual(swapped, base, delta=1e-7 * (1.0 + abs(base)))
        self.assertAlmostEqual(doubled, base, delta=1e-7 * (1.0 + abs(base)))

    def test_append_bookkeeping_and_mean(self):
        reps = modify_append(self.data, 3, KMeansConfig(k=3, n_init=5), self.extremes)
        self.assertEqual(len(reps), 5)
        np.testing.assert_array_equal(reps.weights[3:], [1.0, 1.0])
        self.assertAlmostEqual(float(reps.weights.sum()), 12.0)
        clusters = reps.metadata["clusters"]
        self.assertEqual(int(clusters.counts.sum()), 10)
        self.assertNotIn(1, clusters.day_indices)
        self.assertNotIn(8, clusters.day_indices)
        for name in DEFAULT_SCHEMA:
            self.assertAlmostEqual(reps.weighted_mean(name), float(self.data.profile(name).values.mean()), places=9)

    def test_append_without_extremes_is_plain_clustering(self):
        reps = modify_append(self.data, 3, KMeansConfig(k=3, n_init=5), [])
        direct = kmeans_multistart(z_normalize(self.data)[0].periods(), KMeansConfig(k=3, n_init=5))
        self.assertAlmostEqual(reps.metadata["clusters"].ssd, direct.ssd)
        self.assertEqual(sorted(reps.weights.tolist()), sorted(direct.counts.astype(float).tolist()))

    def test_append_virtual_day_has_zero_weight(self):
        virtual = ExtremeDay(-1, ExtremeSource.VIRTUAL, 0, make_virtual_day(self.data))
        reps = modify_append(self.data, 3, KMeansConfig(k=3, n_init=5), [virtual])
        self.assertEqual(reps.weights[-1], 0.0)
        self.assertEqual(reps.labels[-1], "virtual")

    def test_too_many_extremes(self):
        data = generate(SynthConfig(n_days=6, seed=1))
        extremes = [ExtremeDay(d, ExtremeSource.FEASIBILITY) for d in range(3)]
        with self.assertRaises(TooManyExtremes):
            modify_append(data, 3, KMeansConfig(k=3, n_init=2), extremes)


def _heat_step_dataset() -> Dataset:
    """Flat days; day 3 doubles and day 8 triples the heat demand."""
    data = _flat_dataset(12)
    m = {name: np.array(data.matrix(name)) for name in data.names}
    m["heat_demand"][3] = 2.0
    m["heat_demand"][8] = 3.0
    return Dataset.from_matrices(m)


class TestSelectionLoops(unittest.TestCase):
    """Feasibility- and slack-based iterative selection."""

    def setUp(self):
        self.params = TechnologyParams()
        # unlimited grid: only heat capacity can make a day infeasible
        self.steps = _heat_step_dataset()
        self.step_clusters, self.step_norm = _cluster(self.steps, k=1, n_init=2)
        # default synthetic year: killer day 1 with a morning heat spike and dull sky
        self.killer_data = generate(SynthConfig(n_days=12, seed=0))
        self.killer_day = SynthConfig(n_days=12).killer_day_index()

    def test_feasibility_adds_lowest_infeasible_day(self):
        limits = SelectionLimits(seed_simple=False)
        result = iterate_feasibility(self.steps, self.step_clusters, self.step_norm, self.params, GridLimit(),
                                     limits=limits)
        self.assertTrue(result.converged)
        self.assertEqual(result.day_indices, [3, 8])
        self.assertEqual([it.added_day for it in result.iterations], [3, 8, None])
        self.assertEqual(result.iterations[0].infeasible_days, [3, 8])
        self.assertEqual(result.iterations[1].infeasible_days, [8])
        self.assertTrue(all(e.source == ExtremeSource.FEASIBILITY for e in result.extreme_days))
        self.assertAlmostEqual(result.design.p_hp + result.design.p_eh, 3.0, places=6)

    def test_feasibility_seeded_with_simple_extremes(self):
        result = iterate_feasibility(self.steps, self.step_clusters, self.step_norm, self.params, GridLimit())
        self.assertTrue(result.converged)
        self.assertEqual(len(result.iterations), 1)
        self.assertEqual(result.day_indices, [0, 8])

    def test_slack_adds_largest_slack_day(self):
        result = iterate_slack(self.steps, self.step_clusters, self.step_norm, self.params, GridLimit())
        self.assertTrue(result.converged)
        self.assertEqual(result.day_indices, [8])
        self.assertEqual(result.extreme_days[0].source, ExtremeSource.SLACK_HEAT)
        self.assertAlmostEqual(result.iterations[0].max_slack, 3.0 - 1.25, places=6)
        self.assertLessEqual(result.iterations[-1].max_slack, 1e-6)

    def test_max_extremes(self):
        limits = SelectionLimits(max_extremes=1, seed_simple=False)
        with self.assertRaises(MaxExtremesExceeded):
            iterate_feasibility(self.steps, self.step_clusters, self.step_norm, self.params, GridLimit(),
                                limits=limits)

    def test_clusters_alone_feasible(self):
        data = duplicated_day_dataset(k=2, copies=4, seed=1)
        clusters, norm = _cluster(data, k=2, n_init=10)
        slack = iterate_slack(data, clusters, norm, self.params, GridLimit())
        self.assertTrue(slack.converged)
        self.assertEqual(slack.extreme_days, [])
        self.assertEqual(len(slack.iterations), 1)

        limits = SelectionLimits(seed_simple=False)
        feasibility = iterate_feasibility(data, clusters, norm, self.params, GridLimit(), limits=limits)
        self.assertTrue(feasibility.converged)
        self.assertEqual(feasibility.day_indices, [])

    def test_feasibility_loop_with_killer_day(self):
        clusters, norm = _cluster(self.killer_data, k=1)
        selector = ExtremePeriodSelector(self.killer_data, clusters, norm, self.params, GridLimit(c_lim=0.0))
        result = selector.iterate_feasibility()
        self.assertTrue(result.converged)
        self.assertIn(self.killer_day, result.day_indices)
        self.assertTrue(selector.solve_operations(result.design, slack=False).is_optimal)
        profile = extract_operations(selector.solve_operations(result.design, slack=True))
        self.assertLessEqual(profile.max_slack(), 1e-6)
        for entry in result.iterations:
            self.assertFalse(set(entry.infeasible_days) & set(entry.candidate_days))
        self.assertEqual(len(set(result.day_indices)), len(result.day_indices))

    def test_slack_loop_with_killer_day(self):
        clusters, norm = _cluster(self.killer_data, k=1)
        result = iterate_slack(self.killer_data, clusters, norm, self.params, GridLimit(c_lim=0.0))
        self.assertTrue(result.converged)
        self.assertIn(self.killer_day, result.day_indices)
        self.assertLessEqual(result.iterations[-1].max_slack, 1e-6)
        self.assertTrue(all(e.source in (ExtremeSource.SLACK_HEAT, ExtremeSource.SLACK_EL)
                            for e in result.extreme_days))

    def test_append_mode_converges(self):
        clusters, norm = _cluster(self.killer_data, k=1)
        result = iterate_feasibility(self.killer_data, clusters, norm, self.params, GridLimit(c_lim=0.0),
                                     mode=ModificationMode.APPEND)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(float(result.representatives.weights.sum()), 12.0)

    def test_virtual_seed(self):
        selector = ExtremePeriodSelector(self.steps, self.step_clusters, self.step_norm, self.params, GridLimit(),
                                         virtual_days=True)
        seed = selector.seed()
        self.assertEqual(len(seed), 1)
        self.assertTrue(seed[0].is_virtual)
        result = selector.iterate_feasibility()
        self.assertTrue(result.converged)
        self.assertEqual(len(result.iterations), 1)
        self.assertEqual(result.representatives.labels[-1], "virtual")

    def test_selection_log_is_json(self):
        limits = SelectionLimits(seed_simple=False)
        result = iterate_feasibility(self.steps, self.step_clusters, self.step_norm, self.params, GridLimit(),
                                     limits=limits)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "selection.json"
            result.save_to_file(path)
            loaded = json.loads(path.read_text(encoding="utf-8"))
        self.assertEqual(loaded["method"], "feasibility")
        self.assertTrue(loaded["converged"])
        self.assertEqual(len(loaded["iterations"]), 3)


if __name__ == "__main__":
    unittest.main()
