"""
Tests for test functions, witness evaluation and the closed-form witness families.
"""
import unittest
import math
import os
import sys

import numpy as np

# Add the parent directory to the path so we can import the src modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.errors import DivergenceError, RepresentationError
from src.kernel import GridSpec, integrate_plane, quadrature_1d, supremum_over_plane
from src.povm import PovmModel
from src.states import QuantumState, fock_quadrature, quasiprob
from src.witness import (PhaseSpaceDensity, PhotocountExp, QuadratureDensity, Tabulated, WitnessReport,
                         bhd_expectation_kernel, bhd_lhs_closed, ephd_lhs_closed, ephd_rhs_closed,
                         ephd_witness_closed, evaluate_witness, expectation_symbol, fock_pair_integral,
                         lambda_from_dict, lambda_value, lhs_expectation, mc_lhs, onoff_no_violation_check,
                         relative_violation, rhs_bound, sample_outcomes, sweep, sweep_reports, zero_crossings)


class TestTestFunctions(unittest.TestCase):
    """Test cases for test-function descriptors and values."""

    def test_photocount_values(self):
        """Test lambda(n) = (-t)^n exp(-g n^2)."""
        lam = PhotocountExp(7.0, 0.2)
        self.assertAlmostEqual(lam.value(2), 49.0 * math.exp(-0.8))
        self.assertAlmostEqual(lam.value(1), -7.0 * math.exp(-0.2))
        with self.assertRaises(ValueError):
            PhotocountExp(-2.0)

    def test_tabulated_defaults_to_zero(self):
        """Test that missing table entries weigh 0."""
        lam = Tabulated.from_mapping({(0, 1): -2.0})
        self.assertEqual(lam.value(0, 1), -2.0)
        self.assertEqual(lam.value(1, 1), 0.0)
        self.assertEqual(lambda_value(lam, 0, 1), -2.0)

    def test_descriptors(self):
        """Test descriptors of every form."""
        forms = [PhotocountExp(2.5, 0.1), QuadratureDensity(QuantumState.fock(3)),
                 PhaseSpaceDensity(0.0, QuantumState.attenuated_fock(1, 0.8)),
                 Tabulated.from_mapping({(0, 0): 1.0, (0, 2): 1.0})]
        for lam in forms:
            with self.subTest(form=lam.to_dict()["form"]):
                self.assertEqual(lambda_from_dict(lam.to_dict()), lam)
        with self.assertRaises(ValueError):
            lambda_from_dict({"form": "polynomial", "params": {}})
        with self.assertRaises(ValueError):
            PhaseSpaceDensity(1.0, QuantumState.vacuum())


class TestReports(unittest.TestCase):
    """Test cases for WitnessReport and relative_violation."""

    def test_relative_violation(self):
        """Test the signed normalized gap and the zero right-hand side."""
        self.assertAlmostEqual(relative_violation(1.33, 1.0), 0.33)
        self.assertAlmostEqual(relative_violation(-0.5, -1.0), 0.5)
        self.assertEqual(relative_violation(0.1, 0.0), math.inf)
        self.assertEqual(relative_violation(0.0, 0.0), 0.0)

    def test_violation_tolerance(self):
        """Test that equality within tolerance is not a violation."""
        self.assertFalse(WitnessReport.build(1.0 + 1e-12, 1.0).violated)
        self.assertTrue(WitnessReport.build(1.0 + 1e-6, 1.0).violated)

    def test_to_dict(self):
        """Test that argmax points are encoded as re/im pairs."""
        report = WitnessReport.build(1.0, 0.5, [0.5 - 0.25j])
        self.assertEqual(report.to_dict()["argmax"], [{"re": 0.5, "im": -0.25}])


class TestPhotocountWitnesses(unittest.TestCase):
    """Test cases for photon-number and click witnesses."""

    def test_vacuum_not_violated(self):
        """Test that the vacuum saturates but does not violate."""
        report = evaluate_witness(QuantumState.vacuum(), PovmModel.pnr(), PhotocountExp(3.0), 1.0)
        self.assertAlmostEqual(report.lhs, 1.0)
        self.assertAlmostEqual(report.rhs, 1.0)
        self.assertFalse(report.violated)

    def test_squeezed_threshold(self):
        """Test violation just above t = (2 - eta)/eta and none just below."""
        state = QuantumState.squeezed_vacuum(0.7, 0.6)
        threshold = (2.0 - 0.6) / 0.6
        self.assertTrue(evaluate_witness(state, PovmModel.pnr(), PhotocountExp(threshold + 1e-3), 1.0).violated)
        self.assertFalse(evaluate_witness(state, PovmModel.pnr(), PhotocountExp(threshold - 1e-3), 1.0).violated)

    def test_cat_threshold(self):
        """Test the same threshold for the even cat state."""
        state = QuantumState.even_cat(1.0, 0.8)
        threshold = (2.0 - 0.8) / 0.8
        self.assertTrue(evaluate_witness(state, PovmModel.pnr(), PhotocountExp(threshold + 1e-3), 1.0).violated)
        self.assertFalse(evaluate_witness(state, PovmModel.pnr(), PhotocountExp(threshold - 1e-3), 1.0).violated)

    def test_divergence(self):
        """Test that the left-hand side reports its divergence."""
        state = QuantumState.squeezed_vacuum(0.7, 0.6)
        with self.assertRaises(DivergenceError):
            lhs_expectation(state, PovmModel.pnr(), PhotocountExp(4.0))

    def test_ordering_below_threshold(self):
        """Test that photocount bounds need s >= 1."""
        with self.assertRaises(RepresentationError):
            rhs_bound(PovmModel.pnr(), PhotocountExp(1.0), 0.5)

    def test_click_array(self):
        """Test the ten-detector witness values for squeezed and cat states."""
        model = PovmModel.click(10)
        lam = PhotocountExp(7.0, 0.2)
        svs = evaluate_witness(QuantumState.squeezed_vacuum(0.7, 0.6), model, lam, 1.0)
        cat = evaluate_witness(QuantumState.even_cat(1.0, 0.6), model, lam, 1.0)
        self.assertAlmostEqual(svs.lhs, 1.33, delta=0.01)
        self.assertAlmostEqual(cat.lhs, 1.98, delta=0.01)
        self.assertAlmostEqual(svs.rhs, 1.0, delta=0.01)
        self.assertTrue(svs.violated and cat.violated)

    def test_click_bound_at_origin(self):
        """Test that the classical expectation is 1 at alpha = 0."""
        value = expectation_symbol(PovmModel.click(10), PhotocountExp(7.0, 0.2), np.array([0j]), 1.0)
        self.assertAlmostEqual(float(value[0]), 1.0)

    def test_coherent_state_never_violates(self):
        """Test a classical state against a click witness."""
        report = evaluate_witness(QuantumState.coherent(0.8, 0.6), PovmModel.click(10),
                                  PhotocountExp(7.0, 0.2), 1.0)
        self.assertFalse(report.violated)

    def test_on_off_no_go(self):
        """Test that single on/off detectors admit no violation."""
        for lam0, lam1 in ((1.0, 0.0), (-2.0, 5.0), (0.5, 0.5)):
            record = onoff_no_violation_check(Tabulated.from_mapping({(0, 0): lam0, (1, 0): lam1}))
            self.assertTrue(record["certified"])
            self.assertEqual(record["rhs"], max(lam0, lam1))
            self.assertAlmostEqual(record["rhs_search"], record["rhs"], places=12)


class TestUnbalancedHomodyne(unittest.TestCase):
    """Test cases for the three-displacement witness."""

    def test_single_photon_witness(self):
        """Test the attenuated single photon with weights +1, -2, +1."""
        lam = Tabulated.from_mapping({(0, 0): 1.0, (0, 1): -2.0, (0, 2): 1.0})
        report = evaluate_witness(QuantumState.attenuated_fock(1, 0.75), PovmModel.uhd(), lam, 1.0)
        self.assertAlmostEqual(report.lhs, 0.0099, delta=0.0002)
        self.assertAlmostEqual(report.rhs, 0.0089, delta=0.0002)
        self.assertTrue(report.violated)
        self.assertAlmostEqual(abs(report.argmax[0]), 1.22, delta=0.05)


class TestBalancedHomodyne(unittest.TestCase):
    """Test cases for the quadrature-density witnesses."""

    def test_pair_integral(self):
        """Test the overlap integrals against direct quadrature."""
        for m1, m2 in ((0, 0), (1, 3), (3, 3), (2, 5)):
            with self.subTest(m1=m1, m2=m2):
                direct = quadrature_1d(lambda x: fock_quadrature(m1, x) * fock_quadrature(m2, x),
                                       gaussian_weight=True)
                self.assertAlmostEqual(fock_pair_integral(m1, m2), direct, places=10)

    def test_lhs_closed_form(self):
        """Test the closed form with its own quadrature check."""
        for eta in (1.0, 0.8, 0.5):
            value = bhd_lhs_closed(3, eta, 7, check=True)
            self.assertGreater(value, 0.0)
        self.assertAlmostEqual(bhd_lhs_closed(3, 1.0, 7), 7 * fock_pair_integral(3, 3))

    def test_kernel_closed_form(self):
        """Test the smoothed kernel against quadrature and its s = 0 limit."""
        for s in (0.2, 0.5, 1.0):
            bhd_expectation_kernel(3, 0.4, 0.6 - 0.3j, s, eta=0.8, check=True)
        x0 = math.sqrt(2.0) * 0.7
        self.assertAlmostEqual(bhd_expectation_kernel(2, 0.0, 0.7, 0.0), float(fock_quadrature(2, x0)))

    def test_phase_threshold(self):
        """Test that the number state |3> violates from seven phases on."""
        state = QuantumState.fock(3)
        lam = QuadratureDensity(state)
        six = evaluate_witness(state, PovmModel.bhd(count=6), lam, 0.0)
        seven = evaluate_witness(state, PovmModel.bhd(count=7), lam, 0.0)
        self.assertFalse(six.violated)
        self.assertTrue(seven.violated)

    def test_negative_ordering(self):
        """Test that homodyne bounds need s >= 0."""
        with self.assertRaises(RepresentationError):
            rhs_bound(PovmModel.bhd(count=2), QuadratureDensity(QuantumState.fock(1)), -0.1)

    def test_vacuum_kernel_at_origin(self):
        """Test E_0(phi = 0; alpha = 0; s = 0) = 1/sqrt(pi), the vacuum quadrature density at x = 0."""
        self.assertAlmostEqual(bhd_expectation_kernel(0, 0.0, 0j, 0.0), 1.0 / math.sqrt(math.pi), places=12)

    def test_attenuated_number_state_sign_change(self):
        """Test that the seven-phase witness of |3> at eta = 0.8 changes sign for 0 < s < 0.5."""
        state = QuantumState.attenuated_fock(3, 0.8)
        model = PovmModel.bhd(count=7)
        values = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
        rows = sweep_reports(values, lambda s: evaluate_witness(state, model, QuadratureDensity(state), s),
                             desc="test")
        self.assertFalse(rows[0]["violated"])
        self.assertTrue(rows[-1]["violated"])
        crossings = zero_crossings(rows)
        self.assertEqual(len(crossings), 1)
        self.assertTrue(0.0 < crossings[0] < 0.5)


class TestHeterodyne(unittest.TestCase):
    """Test cases for the eight-port homodyne closed forms."""

    def setUp(self):
        """Set up test fixtures."""
        self.eta = 0.8
        self.reference = QuantumState.attenuated_fock(1, self.eta)

    def test_known_values(self):
        """Test lhs and both branches of the supremum at eta = 0.8, s' = 0."""
        self.assertAlmostEqual(ephd_lhs_closed(self.eta, 0.0), 0.106574, places=5)
        self.assertAlmostEqual(ephd_rhs_closed(self.eta, 0.0, 0.0)[0], 0.12029, places=4)
        self.assertAlmostEqual(ephd_rhs_closed(self.eta, 1.0, 0.0)[0], 0.09988, places=4)

    def test_lhs_oracle(self):
        """Test the lhs closed form against plane quadrature."""
        for s_prime in (0.0, -0.5):
            oracle = integrate_plane(
                lambda a: quasiprob(self.reference, a, -1.0) * quasiprob(self.reference, a, s_prime),
                GridSpec(), radial=True)
            self.assertAlmostEqual(ephd_lhs_closed(self.eta, s_prime), oracle, places=6)

    def test_rhs_oracle(self):
        """Test both supremum branches against a radial search."""
        for s in (-1.0, 0.0, 0.6, 1.0):
            with self.subTest(s=s):
                value, _ = ephd_rhs_closed(self.eta, s, 0.0)
                found = supremum_over_plane(lambda a: quasiprob(self.reference, a, -s - 1.0), radial=True)
                self.assertAlmostEqual(value, found.value, places=6)
        self.assertEqual(ephd_rhs_closed(0.3, 0.0, 0.0)[1], 0.0)

    def test_closed_forms_on_ordering_grid(self):
        """Test both closed forms against quadrature and a radial search on a 20 x 20 grid of (s, s')."""
        grid = GridSpec()
        for s_prime in np.linspace(-1.0, 0.5, 20):
            oracle = integrate_plane(
                lambda a: quasiprob(self.reference, a, -1.0) * quasiprob(self.reference, a, s_prime),
                grid, radial=True)
            self.assertLess(abs(ephd_lhs_closed(self.eta, s_prime) - oracle), 1e-6)
            for s in np.linspace(-1.0, 1.0, 20):
                with self.subTest(s=s, s_prime=s_prime):
                    value, _ = ephd_rhs_closed(self.eta, s, s_prime)
                    found = supremum_over_plane(lambda a: quasiprob(self.reference, a, s_prime - s - 1.0),
                                                grid, radial=True)
                    self.assertLess(abs(value - found.value), 1e-6)

    def test_sign_change(self):
        """Test no violation at s = -1 and violation at s = 1."""
        self.assertFalse(ephd_witness_closed(self.eta, -1.0).violated)
        self.assertTrue(ephd_witness_closed(self.eta, 1.0).violated)

    def test_matches_generic_evaluation(self):
        """Test that evaluate_witness uses the same closed forms."""
        lam = PhaseSpaceDensity(0.0, self.reference)
        report = evaluate_witness(self.reference, PovmModel.ephd(), lam, 0.5)
        closed = ephd_witness_closed(self.eta, 0.5)
        self.assertAlmostEqual(report.lhs, closed.lhs)
        self.assertAlmostEqual(report.rhs, closed.rhs)

    def test_ordering_range(self):
        """Test that s outside [-1, 1] is rejected."""
        with self.assertRaises(RepresentationError):
            ephd_witness_closed(self.eta, 1.5)


class TestSampling(unittest.TestCase):
    """Test cases for Monte Carlo estimation."""

    def test_mc_lhs_statistics(self):
        """Test the estimator and its standard error on fixed samples."""
        lam = Tabulated.from_mapping({(0, 0): 1.0, (1, 0): 3.0, (0, 1): 2.0})
        samples = [(0, 0), (1, 0), (0, 1), (0, 1)]
        estimate, std_error = mc_lhs(samples, lam)
        self.assertAlmostEqual(estimate, 4.0)
        self.assertAlmostEqual(std_error, 1.0)

    def test_missing_setting(self):
        """Test that unsampled settings are reported."""
        with self.assertRaises(ValueError):
            mc_lhs([(0, 0)], Tabulated.from_mapping({(0, 0): 1.0}), PovmModel.uhd())

    def test_seeded_sampling(self):
        """Test reproducibility and per-setting counts."""
        state = QuantumState.attenuated_fock(1, 0.75)
        model = PovmModel.uhd()
        first = sample_outcomes(state, model, 50, np.random.default_rng(3))
        second = sample_outcomes(state, model, 50, np.random.default_rng(3))
        self.assertEqual(first, second)
        self.assertEqual(len(first), 150)
        self.assertEqual(sorted({a for _, a in first}), [0, 1, 2])

    def test_click_estimate(self):
        """Test the Monte Carlo estimate against the exact left-hand side."""
        state = QuantumState.even_cat(1.0, 0.6)
        model = PovmModel.click(10)
        lam = PhotocountExp(7.0, 0.2)
        exact = lhs_expectation(state, model, lam)
        estimate, std_error = mc_lhs(sample_outcomes(state, model, 20000, np.random.default_rng(11)), lam, model)
        self.assertLess(abs(estimate - exact), 5 * std_error)

    def test_homodyne_samples(self):
        """Test quadrature samples of the vacuum."""
        samples = sample_outcomes(QuantumState.vacuum(), PovmModel.bhd(count=2), 4000, np.random.default_rng(5))
        xs = np.array([x for x, _ in samples])
        self.assertAlmostEqual(float(np.var(xs)), 0.5, delta=0.05)


class TestSweeps(unittest.TestCase):
    """Test cases for parameter sweeps."""

    def test_rows_in_input_order(self):
        """Test that threaded sweeps keep the input order."""
        values = [1.0, 0.0, 0.5, -0.5]
        rows = sweep_reports(values, lambda s: ephd_witness_closed(0.8, s), threads=3, desc="test")
        self.assertEqual([r["parameter"] for r in rows], values)
        self.assertEqual(set(rows[0]), {"parameter", "lhs", "rhs", "relative_violation", "violated"})

    def test_zero_crossings(self):
        """Test linear interpolation of sign changes."""
        rows = [{"parameter": 0.0, "relative_violation": -1.0},
                {"parameter": 1.0, "relative_violation": 1.0},
                {"parameter": 2.0, "relative_violation": 3.0}]
        self.assertEqual(zero_crossings(rows), [0.5])
        self.assertEqual(zero_crossings(rows[1:]), [])

    def test_heterodyne_sweep_crossing(self):
        """Test that the heterodyne family crosses zero once in [-1, 1]."""
        values = [float(v) for v in np.linspace(-1.0, 1.0, 21)]
        rows = sweep_reports(values, lambda s: ephd_witness_closed(0.8, s), desc="test")
        crossings = zero_crossings(rows)
        self.assertEqual(len(crossings), 1)
        self.assertTrue(-1.0 < crossings[0] < 1.0)

    def test_photocount_sweep_threshold(self):
        """Test that a t sweep of the cat state crosses zero near (2 - eta) / eta."""
        values = [0.5 * k for k in range(13)]
        rows = sweep(values, lambda t: QuantumState.even_cat(1.0, 0.6), lambda t: PovmModel.pnr(),
                     lambda t: PhotocountExp(t), lambda t: 1.0)
        crossings = zero_crossings(rows)
        self.assertEqual(len(crossings), 1)
        self.assertTrue(2.0 < crossings[0] < 2.5)
        self.assertFalse(rows[4]["violated"])
        self.assertTrue(rows[5]["violated"])


if __name__ == '__main__':
    unittest.main()
