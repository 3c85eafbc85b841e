#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Tests for the synthetic dataset generator
"""

import sys
import unittest
from pathlib import Path

import numpy as np
from hypothesis import given, settings, strategies as st

# Add the parent directory to path to fix imports
parent_dir = str(Path(__file__).resolve().parent)
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

from tsaextreme.exceptions import InvalidConfig
from tsaextreme.models.clustering import KMeansConfig, kmeans_multistart
from tsaextreme.models.timeseries import DEFAULT_SCHEMA, attribute_extremum, z_normalize
from tsaextreme.utils.synthgen import (
    PlantedExtreme,
    SynthConfig,
    dominance_dataset,
    duplicated_day_dataset,
    generate,
)


class TestGenerate(unittest.TestCase):
    """Synthetic year."""

    def test_default_shape_and_schema(self):
        data = generate()
        self.assertEqual(data.n_days, 90)
        self.assertEqual(data.hours_per_day, 24)
        self.assertEqual(data.names, DEFAULT_SCHEMA)

    def test_same_seed_is_bit_identical(self):
        a = generate(SynthConfig(n_days=20, seed=7))
        b = generate(SynthConfig(n_days=20, seed=7))
        np.testing.assert_array_equal(a.cube(), b.cube())
        c = generate(SynthConfig(n_days=20, seed=8))
        self.assertFalse(np.array_equal(a.cube(), c.cube()))

    def test_planted_heat_extreme(self):
        config = SynthConfig(planted_extremes=[PlantedExtreme(day=40, attribute="heat_demand", scale=3.0)])
        data = generate(config)
        self.assertEqual(attribute_extremum(data, "heat_demand", "absolute", "max"), 40)

    def test_default_killer_day(self):
        config = SynthConfig()
        data = generate(config)
        killer = config.killer_day_index()
        self.assertEqual(killer, 7)
        self.assertEqual(config.killer_hours(), [6, 7])
        self.assertEqual(attribute_extremum(data, "heat_demand", "absolute", "max"), killer)
        heat = data.matrix("heat_demand")
        self.assertIn(int(np.argmax(heat[killer])), [6, 7])
        unplanted = generate(SynthConfig(planted_extremes=[]))
        np.testing.assert_allclose(heat[killer, 6:8], 1.4 * unplanted.matrix("heat_demand")[killer, 6:8])
        np.testing.assert_array_equal(heat[killer, 8:], unplanted.matrix("heat_demand")[killer, 8:])
        np.testing.assert_allclose(data.matrix("solar_cf")[killer], 0.6 * unplanted.matrix("solar_cf")[killer])

    def test_killer_day_shares_a_cluster(self):
        config = SynthConfig()
        normalized, _ = z_normalize(generate(config))
        result = kmeans_multistart(normalized.periods(), KMeansConfig(k=5, n_init=50))
        killer = config.killer_day_index()
        cluster = int(result.assignments[killer])
        self.assertGreater(int(result.counts[cluster]), 1)

    def test_planted_hours_only(self):
        plant = PlantedExtreme(day=2, attribute="el_demand", scale=2.0, hours=[18])
        base = generate(SynthConfig(n_days=5, planted_extremes=[]))
        data = generate(SynthConfig(n_days=5, planted_extremes=[plant]))
        diff = np.flatnonzero(data.matrix("el_demand") != base.matrix("el_demand"))
        self.assertEqual(diff.tolist(), [2 * 24 + 18])

    def test_price_band(self):
        data = generate(SynthConfig(n_days=30, seed=4))
        price = data.profile("el_price").values
        self.assertAlmostEqual(float(price.min()), 0.190, delta=1e-6)
        self.assertAlmostEqual(float(price.max()), 0.370, delta=1e-6)
        self.assertAlmostEqual(float(price.mean()), 0.301, delta=1e-6)

    def test_invalid_configs(self):
        for config in (SynthConfig(price_min=0.4, price_max=0.3, price_mean=0.35),
                       SynthConfig(n_days=10, planted_extremes=[PlantedExtreme(day=10, attribute="heat_demand",
                                                                               scale=2.0)]),
                       SynthConfig(planted_extremes=[PlantedExtreme(day=1, attribute="wind", scale=2.0)]),
                       SynthConfig(noise=1.5),
                       SynthConfig(n_days=5, planted_extremes=[PlantedExtreme(day=1, attribute="heat_demand",
                                                                              scale=2.0, hours=[24])])):
            with self.assertRaises(InvalidConfig):
                generate(config)

    def test_unknown_key_rejected(self):
        with self.assertRaises(ValueError):
            SynthConfig(days=10)


class TestOracleDatasets(unittest.TestCase):
    """Small datasets with known clustering and dominance structure."""

    def test_duplicated_days(self):
        data = duplicated_day_dataset(k=3, copies=5)
        self.assertEqual(data.n_days, 15)
        result = kmeans_multistart(data.periods(), KMeansConfig(k=3, n_init=20))
        self.assertAlmostEqual(result.ssd, 0.0, places=9)
        np.testing.assert_allclose(result.weights, [1 / 3, 1 / 3, 1 / 3])

    def test_dominance_dataset(self):
        data = dominance_dataset(n_days=12)
        heat = data.matrix("heat_demand")
        others = np.delete(heat, 6, axis=0)
        self.assertTrue(np.all(heat[6] > others.max(axis=0)))
        self.assertTrue(np.all(data.matrix("t_ambient")[6] < np.delete(data.matrix("t_ambient"), 6, axis=0).min(axis=0)))

    def test_split_dominance_dataset(self):
        data = dominance_dataset(n_days=12, split_extremes=True)
        self.assertEqual(attribute_extremum(data, "heat_demand", "absolute", "max"), 4)
        self.assertEqual(attribute_extremum(data, "el_demand", "absolute", "max"), 8)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=2, max_value=40), st.integers(min_value=0, max_value=10_000),
       st.floats(min_value=0.0, max_value=0.5))
def test_ranges_hold_for_any_config(n_days, seed, noise):
    data = generate(SynthConfig(n_days=n_days, seed=seed, noise=noise, planted_extremes=[]))
    assert data.matrix("el_demand").min() >= 0.0
    assert data.matrix("heat_demand").min() >= 0.0
    solar = data.matrix("solar_cf")
    assert solar.min() >= 0.0 and solar.max() <= 1.0


if __name__ == "__main__":
    unittest.main()
