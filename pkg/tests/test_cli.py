"""
Tests for the command-line entry point.
"""
import unittest
from unittest.mock import patch, MagicMock
import io
import os
import sys

# Add the parent directory to the path so we can import the src modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import main
from src.errors import ConfigError, DivergenceError
from src.experiment import parse_config


def _config(**overrides):
    data = {
        "schema_version": 1,
        "state": {"kind": "attenuated-fock", "params": {"n": 1, "eta": 0.8}},
        "povm": {"scheme": "ephd"},
        "test_function": {"form": "phase-space-density",
                          "params": {"s_prime": 0.0,
                                     "reference": {"kind": "attenuated-fock", "params": {"n": 1, "eta": 0.8}}}},
        "s": 1.0,
        "output": "out/report.json",
    }
    data.update(overrides)
    return parse_config(data)


class TestReproduceCommand(unittest.TestCase):
    """Test cases for the reproduce subcommand."""

    def test_unknown_case(self):
        """Test that an unknown case is a configuration error."""
        self.assertEqual(main.main(["reproduce", "case-9"]), main.EXIT_CONFIG)

    @patch("main.run_case")
    def test_passing_case(self, mock_run):
        """Test exit status 0 when every target passes."""
        mock_run.return_value = MagicMock(passed=True)
        self.assertEqual(main.main(["reproduce", "uhd-fock1", "--out", "out"]), main.EXIT_OK)
        mock_run.assert_called_once_with("uhd-fock1", "out", None)

    @patch("main.run_case")
    def test_failing_case(self, mock_run):
        """Test exit status 1 when a target misses."""
        mock_run.return_value = MagicMock(passed=False)
        self.assertEqual(main.main(["--threads", "2", "reproduce", "click-n10"]), main.EXIT_FAILURE)
        mock_run.assert_called_once_with("click-n10", None, 2)

    @patch("main.run_case")
    def test_all_cases(self, mock_run):
        """Test that 'all' runs every registered case."""
        mock_run.return_value = MagicMock(passed=True)
        self.assertEqual(main.main(["reproduce", "all"]), main.EXIT_OK)
        self.assertEqual(mock_run.call_count, len(main.CASES))


class TestWitnessCommand(unittest.TestCase):
    """Test cases for the witness subcommand."""

    @patch("main.write_json")
    @patch("main.load_config")
    def test_report_written(self, mock_load, mock_write):
        """Test that the report embeds the resolved config."""
        mock_load.return_value = _config()
        with patch("sys.stdout", new_callable=io.StringIO) as out:
            self.assertEqual(main.main(["witness", "--config", "cfg.json"]), main.EXIT_OK)
        path, payload = mock_write.call_args[0]
        self.assertEqual(path, "out/report.json")
        self.assertEqual(payload["config"]["povm"]["scheme"], "ephd")
        self.assertTrue(payload["report"].violated)
        self.assertIn("violated=True", out.getvalue())

    @patch("main.load_config")
    def test_config_error(self, mock_load):
        """Test exit status 2 on schema violations."""
        mock_load.side_effect = ConfigError("state.params.r", "is required")
        self.assertEqual(main.main(["witness", "--config", "cfg.json"]), main.EXIT_CONFIG)

    @patch("main.evaluate_witness")
    @patch("main.load_config")
    def test_domain_error(self, mock_load, mock_evaluate):
        """Test exit status 1 on computation errors."""
        mock_load.return_value = _config()
        mock_evaluate.side_effect = DivergenceError("series diverges", critical_t=3.4)
        self.assertEqual(main.main(["witness", "--config", "cfg.json"]), main.EXIT_FAILURE)


class TestSweepCommand(unittest.TestCase):
    """Test cases for the sweep subcommand."""

    @patch("main.write_csv")
    @patch("main.load_config")
    def test_command_line_axis(self, mock_load, mock_write):
        """Test a sweep range given on the command line."""
        mock_load.return_value = _config(output="out/sweep.csv")
        status = main.main(["sweep", "--config", "cfg.json", "--axis", "s",
                            "--from", "0", "--to", "1", "--steps", "5"])
        self.assertEqual(status, main.EXIT_OK)
        path, rows = mock_write.call_args[0]
        self.assertEqual(path, "out/sweep.csv")
        self.assertEqual([r["parameter"] for r in rows], [0.0, 0.25, 0.5, 0.75, 1.0])
        self.assertFalse(rows[0]["violated"])
        self.assertTrue(rows[-1]["violated"])

    @patch("main.load_config")
    def test_incomplete_range(self, mock_load):
        """Test that --axis needs the full range."""
        mock_load.return_value = _config()
        self.assertEqual(main.main(["sweep", "--config", "cfg.json", "--axis", "s"]), main.EXIT_CONFIG)

    @patch("main.load_config")
    def test_no_axis(self, mock_load):
        """Test that a sweep needs an axis somewhere."""
        mock_load.return_value = _config()
        self.assertEqual(main.main(["sweep", "--config", "cfg.json"]), main.EXIT_CONFIG)


class TestLpCommand(unittest.TestCase):
    """Test cases for the lp subcommand."""

    @patch("main.write_json")
    @patch("main.load_config")
    def test_chsh_certificate(self, mock_load, mock_write):
        """Test that the CHSH problem yields a certificate."""
        mock_load.return_value = parse_config({"schema_version": 1, "problem": "chsh"})
        with patch("sys.stdout", new_callable=io.StringIO):
            self.assertEqual(main.main(["lp", "--config", "chsh.json"]), main.EXIT_OK)
        payload = mock_write.call_args[0][1]
        self.assertEqual(payload["feasibility"].status, "infeasible")
        self.assertTrue(payload["certificate"].valid)

    @patch("main.write_json")
    @patch("main.load_config")
    def test_local_correlations(self, mock_load, mock_write):
        """Test that feasible correlations carry no certificate."""
        mock_load.return_value = parse_config({"schema_version": 1, "problem": "chsh", "chsh": "local"})
        with patch("sys.stdout", new_callable=io.StringIO) as out:
            self.assertEqual(main.main(["lp", "--config", "chsh.json"]), main.EXIT_OK)
        self.assertIsNone(mock_write.call_args[0][1]["certificate"])
        self.assertIn("no certificate", out.getvalue())


class TestGlobalOptions(unittest.TestCase):
    """Test cases for global options."""

    def test_no_command(self):
        """Test that a bare invocation prints help."""
        with patch("sys.stdout", new_callable=io.StringIO) as out:
            self.assertEqual(main.main([]), main.EXIT_CONFIG)
        self.assertIn("qps-witness", out.getvalue())

    def test_threads_validation(self):
        """Test that the worker count must be positive."""
        self.assertEqual(main.main(["--threads", "0", "reproduce", "all"]), main.EXIT_CONFIG)


if __name__ == '__main__':
    unittest.main()
