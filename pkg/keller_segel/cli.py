"""
Command line entry point: ``keller-segel run | mesh | check``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING

from keller_segel.checks import SUITES, run_suite
from keller_segel.config import (
    build_coefficients,
    build_domain,
    build_mesh,
    build_network,
    build_step_config,
    dump_config,
    initial_state,
    parse_config,
)
from keller_segel.constants import ExitCode
from keller_segel.diagnostics import critical_mass, select_corner, total_mass
from keller_segel.exceptions import KellerSegelError
from keller_segel.geometry import DOMAIN_PRESETS, make_domain
from keller_segel.mesh import Grading, refine_uniform, save_mesh, triangulate
from keller_segel.output import TimeSeriesWriter, snapshot_path, write_snapshot
from keller_segel.stepper import TerminationReason, run

if TYPE_CHECKING:
    from typing import Sequence

    from keller_segel.config import RunConfig
    from keller_segel.diagnostics import DiagRecord
    from keller_segel.stepper import SimState

logger = logging.getLogger(__name__)

EXIT_CODES: dict[TerminationReason, ExitCode] = {
    TerminationReason.REACHED_T_END: ExitCode.SUCCESS,
    TerminationReason.BLOWUP_DETECTED: ExitCode.BLOWUP,
    TerminationReason.STEP_UNDERFLOW: ExitCode.UNDERFLOW,
    TerminationReason.SOLVER_FAILURE: ExitCode.SOLVER_FAILURE,
}


def run_command(config: RunConfig) -> ExitCode:
    """
    Build everything the configuration describes, run it, stream the outputs and print a one-line summary.
    """
    try:
        domain = build_domain(config)
        mesh = build_mesh(config, domain)
        coefficients = build_coefficients(config)
        network = build_network(config)
        step_config = build_step_config(config)
        initial = initial_state(config, mesh)
        corner = select_corner(domain, config["diagnostics"]["corner_vertex"])
    except KellerSegelError as e:
        logger.error("%s", e)
        return ExitCode.CONFIG_ERROR
    except OSError as e:
        logger.error("%s", e)
        return ExitCode.IO_ERROR

    if coefficients.name == "classical" and config["model"]["chi"] > 0:
        logger.info(
            "Initial mass of u %.6g, corner critical mass %.6g",
            total_mass(initial.u, mesh),
            critical_mass(domain, config["model"]["chi"]),
        )

    output = config["output"]
    directory = Path(output["directory"])
    every = output["snapshot_every"]
    written: list[int] = []

    def snapshot(state: SimState, step: int) -> None:
        write_snapshot(snapshot_path(directory, output["snapshot_prefix"], len(written)), mesh, state)
        written.append(step)

    try:
        with TimeSeriesWriter(directory / output["timeseries"]) as writer:

            def on_record(record: DiagRecord, state: SimState) -> None:
                writer.write(record)
                if every and record.step % every == 0:
                    snapshot(state, record.step)

            outcome = run(
                mesh,
                initial,
                step_config,
                coefficients,
                network,
                on_record=on_record,
                corner=corner,
                corner_radius=config["diagnostics"]["corner_radius"],
            )
        if every and (not written or written[-1] != outcome.steps):
            snapshot(outcome.final_state, outcome.steps)
    except OSError as e:
        logger.error("Unable to write output: %s", e)
        return ExitCode.IO_ERROR

    print(f"{outcome.reason.value} t={outcome.final_state.t:.6g} steps={outcome.steps}")
    if outcome.message:
        logger.info("%s", outcome.message)
    return EXIT_CODES[outcome.reason]


def _run(arguments: argparse.Namespace) -> ExitCode:
    try:
        config = parse_config(arguments.config)
    except KellerSegelError as e:
        logger.error("%s", e)
        return ExitCode.CONFIG_ERROR
    except OSError as e:
        logger.error("%s", e)
        return ExitCode.IO_ERROR
    if arguments.dump_config:
        sys.stdout.write(dump_config(config))
        return ExitCode.SUCCESS
    return run_command(config)


def _mesh(arguments: argparse.Namespace) -> ExitCode:
    try:
        domain = make_domain(arguments.domain)
        grading = None
        if arguments.grading_corners:
            grading = Grading(tuple(arguments.grading_corners), arguments.grading_ratio)
        mesh = triangulate(domain, arguments.h, grading, arguments.nonobtuse)
        for _ in range(arguments.refine):
            mesh = refine_uniform(mesh)
    except KellerSegelError as e:
        logger.error("%s", e)
        return ExitCode.CONFIG_ERROR
    if arguments.out:
        try:
            save_mesh(mesh, arguments.out)
        except OSError as e:
            logger.error("Unable to write mesh: %s", e)
            return ExitCode.IO_ERROR
    nonobtuse = "true" if mesh.is_nonobtuse else "false"
    print(
        f"nodes={mesh.num_nodes} triangles={mesh.num_triangles} "
        f"max_diameter={mesh.max_diameter:.6g} nonobtuse={nonobtuse}"
    )
    return ExitCode.SUCCESS


def _check(arguments: argparse.Namespace) -> ExitCode:
    results = run_suite(arguments.suite)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        suffix = f": {result.message}" if result.message else ""
        print(f"{status} {result.suite}.{result.name}{suffix}")
    return ExitCode.SUCCESS if all(result.passed for result in results) else ExitCode.CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="keller-segel", description="Keller-Segel chemotaxis simulator")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log errors only")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="run a simulation from a configuration file")
    run_parser.add_argument("--config", type=Path, required=True, help="path to the run configuration")
    run_parser.add_argument(
        "--dump-config", action="store_true", help="print the validated configuration with defaults and exit"
    )
    run_parser.set_defaults(handler=_run)

    mesh_parser = subparsers.add_parser("mesh", help="triangulate a preset domain")
    mesh_parser.add_argument("--domain", choices=list(DOMAIN_PRESETS), required=True)
    mesh_parser.add_argument("--h", type=float, required=True, help="target mesh size")
    mesh_parser.add_argument("--out", type=Path, help="write the mesh to this file")
    mesh_parser.add_argument("--grading-corners", type=int, nargs="*", default=[], help="vertex indices to grade to")
    mesh_parser.add_argument("--grading-ratio", type=float, default=1.0)
    mesh_parser.add_argument("--refine", type=int, default=0, help="uniform refinements after meshing")
    mesh_parser.add_argument("--nonobtuse", action="store_true", help="fail unless the mesh is nonobtuse")
    mesh_parser.set_defaults(handler=_mesh)

    check_parser = subparsers.add_parser("check", help="run the built-in property suites")
    check_parser.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    check_parser.set_defaults(handler=_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    arguments = build_parser().parse_args(argv)
    level = logging.DEBUG if arguments.verbose else logging.ERROR if arguments.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return int(arguments.handler(arguments))


if __name__ == "__main__":
    sys.exit(main())
