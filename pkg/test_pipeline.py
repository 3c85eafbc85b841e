#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Tests for the experiment pipeline and report writers
"""

import json
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

# Add the parent directory to path to fix imports
parent_dir = str(Path(__file__).resolve().parent)
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

from tsaextreme.config.config import RunConfig
from tsaextreme.exceptions import PipelineError
from tsaextreme.models.clustering import KMeansConfig
from tsaextreme.models.extremes import SelectionLimits, modify_append, modify_feasibility_steps, select_simple
from tsaextreme.models.resys import GridLimit, build_design_problem
from tsaextreme.models.timeseries import Dataset
from tsaextreme.pipeline import Pipeline, SweepPoint, run_aggregated, run_reference
from tsaextreme.solvers import HighsSolver
from tsaextreme.utils.reporting import SWEEP_COLUMNS, is_cost_monotone, write_report, write_sweep
from tsaextreme.utils.synthgen import SynthConfig, dominance_dataset, generate


def _heat_step_dataset(n_days: int = 12) -> Dataset:
    shape = (n_days, 24)
    heat = np.full(shape, 1.0)
    heat[3] = 2.0
    heat[8] = 3.0
    return Dataset.from_matrices({
        "el_demand": np.full(shape, 0.5),
        "heat_demand": heat,
        "t_ambient": np.full(shape, 5.0),
        "solar_cf": np.full(shape, 0.2),
        "el_price": np.full(shape, 0.3),
    })


def _relative_tol(value: float) -> float:
    return 1e-6 * (1.0 + abs(value))


def _relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b))


class TestDeterministicRuns(unittest.TestCase):
    """Method behaviour on a dataset whose infeasible days are known."""

    def setUp(self):
        self.data = _heat_step_dataset()
        self.config = RunConfig(k=1, n_init=2, grid_limit_kw=100.0,
                                selection=SelectionLimits(seed_simple=False))
        self.pipeline = Pipeline(self.data, self.config)

    def _run(self, **update):
        return self.pipeline.run_aggregated(self.config.model_copy(update=update))

    def test_without_extremes_is_infeasible(self):
        report = self._run(method="none")
        self.assertEqual(report.extreme_days, [])
        self.assertFalse(report.feasible_full_year)
        self.assertIsNone(report.f_operations)
        self.assertIsNone(report.accuracy_operations)
        self.assertAlmostEqual(report.max_slack_heat, 3.0 - 1.25, places=6)

    def test_simple_extremes(self):
        report = self._run(method="simple")
        self.assertEqual([e.day_index for e in report.extreme_days],
                         [e.day_index for e in select_simple(self.data)])
        self.assertTrue(report.feasible_full_year)
        self.assertIsNone(report.selection)

    def test_feasibility_method(self):
        report = self._run(method="feasibility")
        self.assertEqual([e.day_index for e in report.extreme_days], [3, 8])
        self.assertTrue(report.feasible_full_year)
        self.assertEqual(report.n_extremes, 2)
        self.assertTrue(report.selection.converged)
        self.assertLessEqual(report.max_slack_heat, 1e-6)

    def test_slack_method(self):
        report = self._run(method="slack")
        self.assertEqual([e.day_index for e in report.extreme_days], [8])
        self.assertTrue(report.feasible_full_year)

    def test_explicit_limit_has_no_fraction(self):
        report = self._run(method="none")
        self.assertIsNone(report.grid_fraction)
        self.assertEqual(report.grid_limit_kw, 100.0)

    def test_reference_infeasible_without_grid(self):
        m = {name: np.array(self.data.matrix(name)) for name in self.data.names}
        m["solar_cf"][2] = 0.0
        pipeline = Pipeline(Dataset.from_matrices(m), self.config)
        with self.assertRaises(PipelineError) as ctx:
            pipeline.run_reference(GridLimit(c_lim=0.0))
        self.assertEqual(ctx.exception.stage, "O_ref")


class TestSyntheticYear(unittest.TestCase):
    """End-to-end runs on a short synthetic year."""

    def setUp(self):
        self.data = generate(SynthConfig(n_days=12, seed=0))
        self.config = RunConfig(k=2, n_init=5, grid_fraction=0.5)
        self.pipeline = Pipeline(self.data, self.config)

    def test_reference_grid_limit_keeps_reference_cost(self):
        limit = self.pipeline.reference_grid_limit()
        self.assertGreaterEqual(limit, 0.0)
        unlimited = self.pipeline.run_reference(GridLimit())
        capped = self.pipeline.run_reference(GridLimit(c_lim=limit))
        self.assertAlmostEqual(capped.objective, unlimited.objective, delta=_relative_tol(unlimited.objective))

    def test_grid_limit_from_fraction(self):
        limit = self.pipeline.reference_grid_limit()
        self.assertAlmostEqual(self.pipeline.grid_limit().c_lim, 0.5 * limit)

    def test_cluster_is_cached(self):
        self.assertIs(self.pipeline.cluster(2), self.pipeline.cluster(2))

    def test_fixed_design_never_beats_reference(self):
        for method in ("feasibility", "slack"):
            report = self.pipeline.run_aggregated(self.config.model_copy(update={"method": method}))
            self.assertTrue(report.feasible_full_year, method)
            self.assertGreaterEqual(report.f_operations, report.f_ref - _relative_tol(report.f_ref))
            self.assertLessEqual(report.accuracy_operations, 1.0 + 1e-6)
            self.assertAlmostEqual(report.capex_share + report.opex_share, 1.0, places=9)
            self.assertIsNotNone(report.deviation_percent)

    def test_report_is_json_serializable(self):
        report = self.pipeline.run_aggregated()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "report.json"
            report.save_to_file(path)
            loaded = json.loads(path.read_text(encoding="utf-8"))
        self.assertEqual(loaded["method"], "feasibility")
        self.assertEqual(loaded["k"], 2)
        self.assertEqual(loaded["n_extremes"], report.n_extremes)
        self.assertEqual(set(loaded["dv_repr"]), {"p_hp", "p_eh", "p_pv", "p_bat", "e_bat"})

    def test_sweep(self):
        points = self.pipeline.sweep_grid_limits([1.0, 0.5, 0.0])
        self.assertEqual([p.fraction for p in points], [1.0, 0.5, 0.0])
        self.assertTrue(all(p.status == "ok" for p in points))
        self.assertTrue(is_cost_monotone(points))
        self.assertTrue(all(p.row()["feasible"] for p in points))
        capex, opex = points[-1].report.shares()
        self.assertAlmostEqual(opex, 0.0, places=9)
        self.assertAlmostEqual(capex, 1.0, places=9)

    def test_compare_cluster_counts(self):
        result = self.pipeline.compare_cluster_counts([1, 2], method="feasibility", grid_fraction=0.0)
        self.assertEqual([entry["k"] for entry in result["runs"]], [1, 2])
        self.assertIsNotNone(result["f_ref"])
        for entry in result["runs"]:
            self.assertTrue(entry["with_extremes"]["feasible_full_year"])
            self.assertEqual(entry["without_extremes"]["n_extremes"], 0)

    def test_compare_methods(self):
        pipeline = Pipeline(self.data, self.config.model_copy(update={"k": 1}))
        result = pipeline.compare_methods(grid_fraction=0.0)
        self.assertEqual(set(result["runs"]), {"feasibility/feasibility_steps", "feasibility/append",
                                               "slack/feasibility_steps", "slack/append"})
        self.assertEqual(set(result["gaps"]), {"operations_feasibility_steps", "operations_append",
                                               "init_feasibility", "init_slack"})
        for gap in result["gaps"].values():
            if gap is not None:
                self.assertGreaterEqual(gap, 0.0)
                self.assertLessEqual(gap, 1.0)

    def test_reference_uses_run_technology(self):
        technology = self.config.technology.model_copy(update={"interest_rate": 0.05})
        config = self.config.model_copy(update={"method": "none", "technology": technology})
        report = self.pipeline.run_aggregated(config)
        fresh = Pipeline(self.data, config).run_aggregated()
        base = self.pipeline.run_aggregated(self.config.model_copy(update={"method": "none"}))
        self.assertAlmostEqual(report.f_ref, fresh.f_ref, delta=_relative_tol(fresh.f_ref))
        self.assertAlmostEqual(report.grid_limit_kw, fresh.grid_limit_kw, delta=1e-9)
        self.assertGreater(report.f_ref, base.f_ref)

    def test_module_functions(self):
        design, objective = run_reference(self.data, self.config.technology, GridLimit())
        self.assertAlmostEqual(objective, self.pipeline.run_reference(GridLimit()).objective)
        self.assertGreaterEqual(design.p_hp + design.p_eh, float(self.data.matrix("heat_demand").max()) - 1e-6)
        report = run_aggregated(self.config.model_copy(update={"method": "none"}), self.data)
        self.assertEqual(report.method, "none")
        self.assertEqual(report.n_extremes, 0)


class TestDeskYear(unittest.TestCase):
    """Default 90-day synthetic year with its killer day."""

    @classmethod
    def setUpClass(cls):
        cls.data = generate()
        cls.killer = SynthConfig().killer_day_index()
        cls.config = RunConfig(k=5, n_init=100)
        cls.pipeline = Pipeline(cls.data, cls.config, HighsSolver())
        cls.reports = {}

    def _run(self, method: str, fraction: float):
        key = (method, fraction)
        if key not in self.reports:
            config = self.config.model_copy(update={"method": method, "grid_fraction": fraction})
            self.reports[key] = self.pipeline.run_aggregated(config)
        return self.reports[key]

    def test_clusters_alone_undersize_the_design(self):
        for fraction in (0.5, 0.0):
            report = self._run("none", fraction)
            self.assertFalse(report.feasible_full_year, fraction)
            self.assertIsNone(report.f_operations)
            self.assertGreater(report.max_slack_heat, 1e-6)

    def test_selection_restores_feasibility(self):
        for fraction in (1.0, 0.5, 0.0):
            for method in ("feasibility", "slack"):
                report = self._run(method, fraction)
                label = f"{method} at {fraction}"
                self.assertTrue(report.selection.converged, label)
                self.assertTrue(report.feasible_full_year, label)
                self.assertLessEqual(max(report.max_slack_heat, report.max_slack_el), 1e-6, label)
                self.assertIn(self.killer, [e.day_index for e in report.extreme_days], label)

    def test_methods_agree_with_each_other_and_reference(self):
        feasibility, slack = self._run("feasibility", 0.5), self._run("slack", 0.5)
        self.assertLessEqual(_relative_gap(feasibility.f_operations, slack.f_operations), 0.02)
        for report in (feasibility, slack):
            self.assertLessEqual(_relative_gap(report.f_operations, report.f_ref), 0.02)

    def test_modifications_agree_on_same_extremes(self):
        # zero grid: O_init is pure capex, fixed by the days that bind the design
        extremes = self._run("feasibility", 0.0).extreme_days
        grid = self.pipeline.grid_limit(self.config.model_copy(update={"grid_fraction": 0.0}))
        _, norm = self.pipeline.normalized()
        steps = modify_feasibility_steps(self.pipeline.cluster(5), self.data, extremes, norm)
        append = modify_append(self.data, 5, KMeansConfig(k=5, n_init=100), extremes)
        solver = HighsSolver()
        objectives = [solver.solve(build_design_problem(reps, self.config.technology, grid)).objective
                      for reps in (steps, append)]
        self.assertLess(_relative_gap(*objectives), 0.01)

    def test_sweep_trends(self):
        fractions = [1.2, 1.0, 0.8, 0.5, 0.2, 0.0]
        points = self.pipeline.sweep_grid_limits(fractions)
        self.assertTrue(all(p.status == "ok" for p in points))
        self.assertTrue(is_cost_monotone(points))
        rows = [p.row() for p in points]
        for generous, tight in zip(rows, rows[1:]):
            self.assertLessEqual(generous["X"], tight["X"], (generous["fraction"], tight["fraction"]))
            self.assertGreaterEqual(tight["capex_share"], generous["capex_share"] - 1e-9)
        self.assertAlmostEqual(rows[-1]["opex_share"], 0.0, places=9)


class TestDominance(unittest.TestCase):
    """Cluster count does not matter once the dominating day is included."""

    def test_design_independent_of_k(self):
        data = dominance_dataset(n_days=20)
        pipeline = Pipeline(data, RunConfig(n_init=5, grid_fraction=0.0))
        result = pipeline.compare_cluster_counts([5, 9], method="feasibility", grid_fraction=0.0)
        designs = [entry["with_extremes"]["design"] for entry in result["runs"]]
        for entry in result["runs"]:
            self.assertIn(10, entry["with_extremes"]["extreme_days"])
            self.assertGreater(entry["with_extremes"]["accuracy_clustered"], 0.98)
        for name in designs[0]:
            self.assertAlmostEqual(designs[0][name], designs[1][name], delta=1e-6, msg=name)

    def test_virtual_day_oversizes(self):
        data = dominance_dataset(n_days=12, split_extremes=True)
        pipeline = Pipeline(data, RunConfig(k=2, n_init=5, grid_fraction=0.0))
        actual = pipeline.run_aggregated()
        virtual = pipeline.run_aggregated(pipeline.config.model_copy(update={"virtual_days": True}))
        self.assertTrue(actual.feasible_full_year)
        self.assertTrue(virtual.feasible_full_year)
        self.assertEqual(virtual.extreme_days[0].source.value, "virtual")
        self.assertGreaterEqual(virtual.f_clustered, actual.f_clustered - _relative_tol(actual.f_clustered))

    def test_objective_independent_of_k(self):
        data = dominance_dataset(n_days=12)
        pipeline = Pipeline(data, RunConfig(n_init=5, grid_fraction=0.0))
        result = pipeline.compare_cluster_counts([2, 3], method="feasibility", grid_fraction=0.0)
        f_ref = result["f_ref"]
        for entry in result["runs"]:
            with_extremes = entry["with_extremes"]
            self.assertIn(6, with_extremes["extreme_days"])
            self.assertTrue(with_extremes["feasible_full_year"])
            self.assertAlmostEqual(with_extremes["f_clustered"], f_ref, delta=_relative_tol(f_ref))
            self.assertGreater(with_extremes["accuracy_clustered"], 0.98)


class TestReportWriters(unittest.TestCase):
    """CSV and JSON outputs."""

    def setUp(self):
        data = _heat_step_dataset()
        config = RunConfig(k=1, n_init=2, grid_limit_kw=100.0, method="none")
        self.report = Pipeline(data, config).run_aggregated()

    def test_write_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_report(self.report, tmp)
            self.assertEqual([p.name for p in paths], ["report.json", "report.csv"])
            loaded = json.loads(paths[0].read_text(encoding="utf-8"))
            frame = pd.read_csv(paths[1])
        # days 3 and 8 exceed the clustered heat capacity
        self.assertIsNone(loaded["f_operations"])
        self.assertEqual(len(frame), 1)
        self.assertIn("repr_p_hp", frame.columns)
        self.assertIn("ref_e_bat", frame.columns)

    def test_nan_slack_written_as_null(self):
        self.report.max_slack_heat = float("nan")

        def reject(token):
            raise ValueError(f"non-standard JSON token {token}")

        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "report.json"
            self.report.save_to_file(path)
            loaded = json.loads(path.read_text(encoding="utf-8"), parse_constant=reject)
        self.assertIsNone(loaded["max_slack_heat"])

    def test_sweep_table_keeps_failed_points(self):
        points = [SweepPoint(1.0, self.report), SweepPoint(0.5, None, "failed: O_ref")]
        with tempfile.TemporaryDirectory() as tmp:
            path = write_sweep(points, Path(tmp) / "sweep.csv")
            frame = pd.read_csv(path)
        self.assertEqual(list(frame.columns), SWEEP_COLUMNS)
        self.assertEqual(len(frame), 2)
        self.assertEqual(frame.loc[1, "status"], "failed: O_ref")
        self.assertTrue(is_cost_monotone(points))

    def test_monotonicity_violation_detected(self):
        cheap = self.report
        dear = RunConfig(k=1, n_init=2, grid_limit_kw=100.0, method="none")
        dear_report = Pipeline(_heat_step_dataset(), dear).run_aggregated()
        dear_report.f_ref = cheap.f_ref * 2.0
        points = [SweepPoint(0.0, cheap), SweepPoint(1.0, dear_report)]
        self.assertFalse(is_cost_monotone(points))


if __name__ == "__main__":
    unittest.main()
