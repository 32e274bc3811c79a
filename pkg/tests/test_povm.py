"""
Tests for measurement schemes, POVM symbols and the phase-space Born rule.
"""
import unittest
from unittest.mock import patch
import math
import os
import sys

import numpy as np

# Add the parent directory to the path so we can import the src modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.errors import ConvergenceError, RepresentationError
from src.kernel import quadrature_1d
from src.povm import (DEFAULT_DISPLACEMENTS, PovmModel, Scheme, bhd_symbol, born_probability, click_char_delta,
                      click_symbol, default_ordering, default_phases, ephd_symbol, normal_exp_symbol, pnr_symbol,
                      symbol, uhd_symbol)
from src.states import QuantumState, click_distribution, quasiprob


class TestPovmModel(unittest.TestCase):
    """Test cases for PovmModel."""

    def test_threshold_orderings(self):
        """Test s_th of every scheme."""
        self.assertEqual(PovmModel.pnr().s_th, 1.0)
        self.assertEqual(PovmModel.click(4).s_th, 1.0)
        self.assertEqual(PovmModel.uhd().s_th, 1.0)
        self.assertEqual(PovmModel.bhd(count=3).s_th, 0.0)
        self.assertEqual(PovmModel.ephd().s_th, -1.0)

    def test_domains(self):
        """Test outcome and setting domains."""
        self.assertEqual(PovmModel.click(3).outcomes(), [0, 1, 2, 3])
        self.assertEqual(PovmModel.on_off().outcomes(), [0, 1])
        self.assertEqual(PovmModel.uhd().settings(), list(DEFAULT_DISPLACEMENTS))
        domain = PovmModel.bhd(count=2).domain()
        self.assertFalse(domain.is_finite)
        self.assertEqual(domain.continuous, "real-line")

    def test_default_phases(self):
        """Test equally spaced phases in [0, pi)."""
        phases = default_phases(4)
        np.testing.assert_allclose(phases, [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4])
        with self.assertRaises(ValueError):
            default_phases(0)

    def test_validation(self):
        """Test rejected phases and detector counts."""
        with self.assertRaises(ValueError):
            PovmModel.bhd(phases=[math.pi])
        with self.assertRaises(ValueError):
            PovmModel.click(0)
        with self.assertRaises(ValueError):
            PovmModel(Scheme.ON_OFF, detectors=2)

    def test_descriptor(self):
        """Test JSON descriptors, including the BHD phase count."""
        model = PovmModel.from_dict({"scheme": "bhd", "params": {"K": 7}, "s": 0.5})
        self.assertEqual(len(model.phases), 7)
        self.assertEqual(model.s, 0.5)
        self.assertEqual(PovmModel.from_dict(model.to_dict()), model)
        click = PovmModel.from_dict({"scheme": "click", "params": {"N": 10}})
        self.assertEqual(click.detectors, 10)
        with self.assertRaises(ValueError):
            PovmModel.from_dict({"scheme": "click", "params": {}})
        with self.assertRaises(ValueError):
            PovmModel.from_dict({"scheme": "pnr", "params": {"N": 3}})


class TestSymbols(unittest.TestCase):
    """Test cases for the symbol functions."""

    def setUp(self):
        """Set up test fixtures."""
        self.alpha = np.array([0.0, 0.3 + 0.4j, 1.2 - 0.7j, 2.5j])

    def test_single_click_equals_unbalanced_homodyne(self):
        """Test that a one-element click array is an undisplaced on/off detector."""
        for n in (0, 1):
            np.testing.assert_allclose(click_symbol(n, 1, self.alpha), uhd_symbol(n, 0j, self.alpha))

    def test_completeness(self):
        """Test that click and UHD symbols sum to 1 at several orderings."""
        model = PovmModel.click(5)
        for s in (1.0, 0.4, -0.5):
            total = sum(symbol(model, n, None, self.alpha, s) for n in range(6))
            np.testing.assert_allclose(total, np.ones(self.alpha.shape), atol=1e-12)
        uhd = PovmModel.uhd()
        total = symbol(uhd, 0, 0.1, self.alpha, 0.3) + symbol(uhd, 1, 0.1, self.alpha, 0.3)
        np.testing.assert_allclose(total, np.ones(self.alpha.shape), atol=1e-12)

    def test_pnr_symbol_is_poisson(self):
        """Test the photon-number symbol at s = 1."""
        self.assertAlmostEqual(pnr_symbol(2, 1.0), math.exp(-1.0) / 2.0)
        self.assertAlmostEqual(symbol(PovmModel.pnr(), 2, None, 1.0, 1.0), math.exp(-1.0) / 2.0)

    def test_normal_exp_symbol(self):
        """Test :exp(-mu n): at s = 1 and its divergence."""
        self.assertAlmostEqual(float(normal_exp_symbol(0.5, 1.0, 1.0)), math.exp(-0.5))
        with self.assertRaises(RepresentationError):
            normal_exp_symbol(3.0, 0j, 0.0)

    def test_homodyne_symbol(self):
        """Test that the homodyne symbol is a normalized density in x."""
        total = quadrature_1d(lambda x: bhd_symbol(x, 0.3, 0.5 + 0.2j, 0.4), -20.0, 20.0)
        self.assertAlmostEqual(total, 1.0, places=8)
        with self.assertRaises(RepresentationError):
            bhd_symbol(0.0, 0.0, 0j, 0.0)
        with self.assertRaises(RepresentationError):
            bhd_symbol(0.0, 0.0, 0j, -0.2)

    def test_heterodyne_symbol(self):
        """Test the heterodyne symbol peak and its delta limit."""
        self.assertAlmostEqual(float(ephd_symbol(0.2j, 0.2j, 0.0)), 2.0 / math.pi)
        with self.assertRaises(RepresentationError):
            ephd_symbol(0j, 0j, -1.0)

    def test_click_delta(self):
        """Test the delta weight of the characteristic click symbol."""
        self.assertEqual(click_char_delta(3, 3), 1.0)
        self.assertEqual(click_char_delta(2, 3), 0.0)


class TestBornRule(unittest.TestCase):
    """Test cases for born_probability."""

    def test_click_routes_agree(self):
        """Test closed, quadrature and characteristic routes for a squeezed state."""
        state = QuantumState.squeezed_vacuum(0.5, 0.8)
        model = PovmModel.click(3)
        table = click_distribution(state, 3)
        for n in range(4):
            with self.subTest(n=n):
                quad = born_probability(state, model, n, s=0.0, route="quadrature")
                char = born_probability(state, model, n, s=0.0, route="characteristic")
                self.assertAlmostEqual(quad, table[n], places=6)
                self.assertAlmostEqual(char, table[n], places=6)

    def test_unbalanced_homodyne_no_click(self):
        """Test the no-click probability pi Q(gamma) against quadrature at s = 0."""
        state = QuantumState.attenuated_fock(1, 0.75)
        model = PovmModel.uhd()
        closed = born_probability(state, model, 0, 0.1 + 0j, route="closed")
        self.assertAlmostEqual(closed, math.pi * quasiprob(state, 0.1 + 0j, -1.0))
        quad = born_probability(state, model, 0, 0.1 + 0j, s=0.0, route="quadrature")
        self.assertAlmostEqual(quad, closed, places=6)

    def test_homodyne_density(self):
        """Test the quadrature density of a single photon via the Gaussian symbol."""
        state = QuantumState.fock(1)
        model = PovmModel.bhd(count=2)
        value = born_probability(state, model, 0.7, math.pi / 2, s=0.5, cross_check=True)
        expected = 2.0 * 0.49 * math.exp(-0.49) / math.sqrt(math.pi)
        self.assertAlmostEqual(value, expected, places=6)

    def test_heterodyne_density(self):
        """Test that the heterodyne outcome density is the Q function."""
        state = QuantumState.coherent(0.5 + 0.5j)
        model = PovmModel.ephd()
        value = born_probability(state, model, 0.2 + 0.1j, s=0.0, route="quadrature")
        self.assertAlmostEqual(value, quasiprob(state, 0.2 + 0.1j, -1.0), places=6)

    def test_cross_check_failure(self):
        """Test that disagreeing routes raise."""
        state = QuantumState.fock(1)
        model = PovmModel.pnr()
        with patch("src.povm._born_quadrature", return_value=0.5):
            with self.assertRaises(ConvergenceError):
                born_probability(state, model, 1, route="closed", cross_check=True)

    def test_ordering_invariance(self):
        """Test that two regular orderings give the same probability for random pairs."""
        rng = np.random.default_rng(11)
        for trial in range(20):
            kind = trial % 3
            eta = float(rng.uniform(0.5, 1.0))
            if kind == 0:
                state = QuantumState.coherent(complex(*rng.uniform(-0.7, 0.7, 2)))
            elif kind == 1:
                state = QuantumState.attenuated_fock(int(rng.integers(1, 3)), eta)
            else:
                state = QuantumState.squeezed_vacuum(float(rng.uniform(0.1, 0.4)), eta)
            if trial % 2:
                model, outcome, setting = PovmModel.click(3), int(rng.integers(0, 4)), None
            else:
                model, outcome, setting = PovmModel.uhd(), int(rng.integers(0, 2)), 0.1
            with self.subTest(state=state.label, scheme=model.label, outcome=outcome):
                smooth = born_probability(state, model, outcome, setting, s=-0.3, route="quadrature")
                wigner = born_probability(state, model, outcome, setting, s=0.0, route="quadrature")
                self.assertAlmostEqual(smooth, wigner, places=6)

    def test_default_ordering(self):
        """Test that the default ordering stays regular for the state."""
        state = QuantumState.squeezed_vacuum(0.7, 0.6)
        s = default_ordering(state, PovmModel.click(2))
        self.assertLess(s, 1.0 - 0.6 * (1.0 - math.exp(-1.4)))
        self.assertEqual(default_ordering(state, PovmModel.bhd(count=1, s=0.3)), 0.3)


if __name__ == '__main__':
    unittest.main()
