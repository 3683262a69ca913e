import argparse
import logging
import sys

from src.config import SCENARIO_DEFAULTS, ConfigError, load_config
from src.experiments import run_scenario
from src.patch_net import CouplingError
from src.solvers import SolverError

logger = logging.getLogger("PATCHBEAM")

EXIT_CONFIG = 2
EXIT_SOLVER = 3

SCENARIO_HELP = {
    "periodic-dynamics": "heterogeneous periodic beam released from an initial deformation",
    "spectrum": "Jacobian eigenvalues of the damped periodic beam",
    "convergence-study": "polynomial against spectral coupling as the patch count grows",
    "undamped": "spectrum and dynamics without viscosity",
    "inclusions": "macroscale eigenvalues with a soft inclusion in every patch",
    "fixed-fixed-equilibrium": "loaded beam fixed at both ends, errors against the full domain",
    "fixed-free-equilibrium": "loaded cantilever, tip deflection",
    "full-domain-reference": "equilibrium of the whole beam simulated everywhere",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patchbeam", description="Patch scheme simulations of heterogeneous beams")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run the scenario described by a config file")
    run.add_argument("config", help="TOML scenario file")
    run.add_argument("--out", help="output directory (default: output.dir or results/<scenario>)")
    run.add_argument("--seed", type=int, help="seed of the random material realisation")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                     help="dotted config key, e.g. geometry.patches=9 (repeatable)")
    run.add_argument("--no-plots", action="store_true", help="skip figure files")

    commands.add_parser("list-scenarios", help="list the scenarios and their purpose")

    validate = commands.add_parser("validate", help="check a config file without running it")
    validate.add_argument("config")
    validate.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        format='%(asctime)s - [%(name)s] - %(message)s',
        level=logging.DEBUG if args.verbose else logging.INFO,
    )

    if args.command == "list-scenarios":
        for name in SCENARIO_DEFAULTS:
            print(f"{name:26s} {SCENARIO_HELP[name]}")
        return 0

    try:
        if args.command == "validate":
            cfg = load_config(args.config, overrides=args.override)
            print(f"{args.config}: valid {cfg.scenario} config")
            return 0

        cfg = load_config(args.config, seed=args.seed, overrides=args.override)
        bundle = run_scenario(cfg)
        out = bundle.write(args.out or cfg.out_dir, plots=cfg.output.plots and not args.no_plots)
        for key, value in bundle.summary.items():
            if isinstance(value, float):
                print(f"{key}: {value:.12g}")
            elif isinstance(value, complex):
                print(f"{key}: {value.real:.12g} {value.imag:+.12g}i")
        print(f"results: {out}")
        return 0
    except ConfigError as e:
        for message in e.messages:
            logger.error(f"Config error: {message}")
        return EXIT_CONFIG
    except CouplingError as e:
        logger.error(f"Coupling error: {e}")
        return EXIT_CONFIG
    except SolverError as e:
        logger.error(f"Solver failure: {e}")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
