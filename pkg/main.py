"""
Command-line front end for the phase-space witness library.

Example usage:
    - Run one reproduction case (or all of them):
      python main.py reproduce click-n10 --out data
      python main.py reproduce all

    - Evaluate a single witness from a configuration file:
      python main.py witness --config configs/svs_pnr.json

    - Sweep a parameter and write CSV rows:
      python main.py sweep --config configs/bhd_fock3.json --axis s --from 0 --to 1 --steps 11

    - Search an optimal test function by linear programming:
      python main.py lp --config configs/chsh.json
"""
import argparse
import logging
import os
import sys

import numpy as np

from src import config
from src.errors import ConfigError, WitnessError
from src.experiment import AXES, SweepSpec, load_config, with_axis
from src.lp import build_phase_space_lp, chsh_problem, dump_matrix_csv, find_optimal_lambda, primal_feasible
from src.reproduce import CASES, run_case
from src.utils import write_csv, write_json
from src.witness import evaluate_witness, mc_lhs, sample_outcomes, sweep_reports

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler("qps_witness.log"),
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _output_path(cfg, default_name):
    return cfg.output or os.path.join(config.DATA_DIR, default_name)


def cmd_reproduce(args):
    """Run named reproduction cases; fails when any target misses its tolerance."""
    case_ids = list(CASES) if args.case == "all" else [args.case]
    if args.case != "all" and args.case not in CASES:
        raise ConfigError("case", f"unknown case {args.case!r}; available: {', '.join(CASES)}, all")
    failed = []
    for case_id in case_ids:
        result = run_case(case_id, args.out, args.threads)
        if not result.passed:
            failed.append(case_id)
    if failed:
        logger.error(f"Failed cases: {', '.join(failed)}")
        return EXIT_FAILURE
    logger.info(f"All {len(case_ids)} case(s) passed")
    return EXIT_OK


def cmd_witness(args):
    """Evaluate one witness inequality and write its report."""
    cfg = load_config(args.config)
    if cfg.problem != "phase-space" or cfg.test_function is None:
        raise ConfigError("test_function", "the witness command needs a phase-space problem with a test function")
    report = evaluate_witness(cfg.state, cfg.povm, cfg.test_function, cfg.s, cfg.grid)
    payload = {"config": cfg.to_dict(), "report": report}
    if cfg.samples is not None:
        rng = np.random.default_rng(cfg.seed)
        estimate, std_error = mc_lhs(sample_outcomes(cfg.state, cfg.povm, cfg.samples, rng),
                                     cfg.test_function, cfg.povm)
        payload["monte_carlo"] = {"estimate": estimate, "std_error": std_error, "samples": cfg.samples}
        logger.info(f"Monte Carlo lhs {estimate:.6g} +- {std_error:.2g} from {cfg.samples} samples per setting")
    write_json(_output_path(cfg, "witness.json"), payload)
    print(f"lhs={report.lhs:.6g} rhs={report.rhs:.6g} violated={report.violated} "
          f"relative_violation={report.relative_violation:.6g}")
    return EXIT_OK


def cmd_sweep(args):
    """Evaluate the witness along one parameter axis and write CSV rows."""
    cfg = load_config(args.config)
    if cfg.test_function is None:
        raise ConfigError("test_function", "the sweep command needs a test function")
    axis_spec = cfg.sweep
    if args.axis is not None:
        if None in (args.start, args.stop, args.steps):
            raise ConfigError("sweep", "--axis needs --from, --to and --steps")
        axis_spec = SweepSpec(args.axis, args.start, args.stop, args.steps)
    if axis_spec is None:
        raise ConfigError("sweep", "no sweep axis in the configuration or on the command line")

    def evaluate(value):
        state, povm, lam, s = with_axis(cfg, axis_spec.axis, value)
        return evaluate_witness(state, povm, lam, s, cfg.grid)

    rows = sweep_reports(axis_spec.values(), evaluate, args.threads, desc=f"{axis_spec.axis} sweep")
    path = _output_path(cfg, "sweep.csv")
    write_csv(path, rows)
    print(f"Wrote {len(rows)} rows to {path}")
    return EXIT_OK


def cmd_lp(args):
    """Check primal feasibility and search a dual certificate."""
    cfg = load_config(args.config)
    if cfg.problem == "chsh":
        problem = chsh_problem(cfg.chsh)
    else:
        problem = build_phase_space_lp(cfg.state, cfg.povm, cfg.s, cfg.grid, cfg.bins)
    feasibility = primal_feasible(problem)
    certificate = None
    if not feasibility.feasible:
        certificate = find_optimal_lambda(problem)
    payload = {"config": cfg.to_dict(), "problem": problem, "feasibility": feasibility,
               "certificate": certificate}
    write_json(_output_path(cfg, "lp.json"), payload)
    if args.matrix:
        dump_matrix_csv(problem, args.matrix)
    if feasibility.status == "inconclusive":
        logger.warning("Feasibility is inconclusive at the configured tolerance")
        print(f"inconclusive (residual {feasibility.residual:.3e})")
    elif certificate is None:
        print("feasible: no certificate exists")
    else:
        print(f"{feasibility.status}: certificate lhs={certificate.lhs:.6g} rhs={certificate.rhs:.6g} "
              f"gap={certificate.gap:.3e} valid={certificate.valid}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="qps-witness",
                                     description="Phase-space classical-simulation witnesses")
    parser.add_argument("--debug", action="store_true",
                        help="Enable debug logging")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"Worker threads for sweeps (default: {config.THREADS})")
    subparsers = parser.add_subparsers(dest="command")

    reproduce = subparsers.add_parser("reproduce", help="Run a named reproduction case")
    reproduce.add_argument("case", help=f"Case id ({', '.join(CASES)}) or 'all'")
    reproduce.add_argument("--out", type=str, default=None,
                           help=f"Output directory (default: {config.DATA_DIR})")
    reproduce.set_defaults(handler=cmd_reproduce)

    witness = subparsers.add_parser("witness", help="Evaluate one witness inequality")
    witness.add_argument("--config", required=True, help="JSON configuration file")
    witness.set_defaults(handler=cmd_witness)

    sweep = subparsers.add_parser("sweep", help="Sweep a parameter and write CSV")
    sweep.add_argument("--config", required=True, help="JSON configuration file")
    sweep.add_argument("--axis", choices=AXES, default=None, help="Parameter to sweep")
    sweep.add_argument("--from", dest="start", type=float, default=None, help="First value")
    sweep.add_argument("--to", dest="stop", type=float, default=None, help="Last value")
    sweep.add_argument("--steps", type=int, default=None, help="Number of values")
    sweep.set_defaults(handler=cmd_sweep)

    lp = subparsers.add_parser("lp", help="Feasibility and dual certificate search")
    lp.add_argument("--config", required=True, help="JSON configuration file")
    lp.add_argument("--matrix", type=str, default=None, help="Also write the constraint matrix as CSV")
    lp.set_defaults(handler=cmd_lp)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    # Set debug logging if requested
    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("Debug logging enabled")

    if args.threads is not None and args.threads < 1:
        logger.error("--threads must be at least 1")
        return EXIT_CONFIG

    if not getattr(args, "handler", None):
        parser.print_help()
        return EXIT_CONFIG

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except WitnessError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILURE
    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"An unexpected error occurred: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
