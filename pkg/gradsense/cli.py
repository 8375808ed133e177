"""
Command-line entry point: check, scan, simulate, reconstruct, gramian.

Every command reads a YAML/JSON run configuration, writes its outputs under
--out and returns one of the documented exit codes.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import argparse
import json
import logging
import math
import sys

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from .config import Settings, load_settings
from .errors import (
    EXIT_NOT_STRATEGIC,
    EXIT_NUMERICAL,
    EXIT_OK,
    ChannelMismatch,
    ConfigValidationError,
    HorizonMismatch,
    ParseError,
    error_handler,
)
from .problem import (
    Problem,
    build_problem,
    config_error_from_validation,
    effective_regularization,
    initial_coefficients,
    scan_grid,
)
from .schemas import (
    CompletenessReport,
    CrossingSummary,
    GramianSummary,
    GroupReport,
    LocusSummary,
    ModeCoefficient,
    ReconstructionReport,
    RunConfig,
    ScanConfig,
    ScanRow,
    VerdictReport,
    VerdictSummary,
)
from .simulate_reconstruct import (
    OutputRecord,
    add_noise,
    gradient_trace,
    reconstruct_gradient,
    sample_times,
    simulate_outputs,
)
from .strategic_analysis import (
    ObservabilityGramian,
    StrategicVerdict,
    completeness_diagnostic,
    crossing_check,
    gramian,
    locus_check,
    positive_definite_test,
    rank_test,
    scan_locations,
    state_rank_test,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
SURROGATE_NORM = "L2 line integral of |grad e|^2 over the region (H^1/2 surrogate)"
FLOAT_FORMAT = "%.17g"


def setup_logging(settings: Settings) -> None:
    """Logs go to stderr (and optionally a file) so --json stdout stays clean"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.log_file:
        handlers.append(logging.FileHandler(settings.log_file, mode='a'))
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def _finite(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


# Config parsing

def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a YAML or JSON run configuration"""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as error:
        mark = getattr(error, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else None
        raise ParseError(f"malformed configuration: {error}", field_path=where)
    if not isinstance(data, dict):
        raise ParseError("configuration must be a mapping at the top level")
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as error:
        raise config_error_from_validation(error)
    build_problem(config)
    return config


def load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as error:
        raise ParseError(f"cannot read config {path}: {error}", field_path="--config")
    return parse_config(text)


# Report builders (shared with the HTTP surface)

def verdict_summary(verdict: StrategicVerdict) -> VerdictSummary:
    return VerdictSummary(
        strategic=verdict.strategic,
        functional=verdict.functional,
        q=verdict.q,
        r=verdict.r,
        J=verdict.J,
        sigma_max=verdict.sigma_max,
        threshold=verdict.threshold,
        sigma_min_overall=verdict.sigma_min_overall,
        margin=_finite(verdict.margin),
        borderline=verdict.borderline,
        failing_groups=verdict.failing_groups,
        per_group=[
            GroupReport(
                eigenvalue=group.eigenvalue, multiplicity=group.multiplicity, rank=group.rank,
                sigma_min=group.sigma_min, passed=group.passed, modes=list(group.modes),
            )
            for group in verdict.per_group
        ],
        gamma=verdict.gamma.describe() if verdict.gamma is not None else None,
    )


def gramian_summary(gram: ObservabilityGramian, pd_tol: float) -> GramianSummary:
    return GramianSummary(
        dimension=gram.dimension,
        T=gram.T,
        min_eigenvalue=gram.min_eigenvalue,
        max_eigenvalue=gram.max_eigenvalue,
        condition_number=_finite(gram.condition_number),
        whitened_min_eigenvalue=float(gram.whitened_eigenvalues[0]),
        whitened_max_eigenvalue=float(gram.whitened_eigenvalues[-1]),
        pd_tol=pd_tol,
        positive_definite=positive_definite_test(gram, pd_tol),
        positive_definite_raw=positive_definite_test(gram, pd_tol, whitened=False),
    )


def check_report(problem: Problem, settings: Settings) -> VerdictReport:
    config = problem.config
    verdict = rank_test(problem.suite, problem.modeset, problem.gamma, problem.quad, problem.rank_tol)
    state_verdict = state_rank_test(problem.suite, problem.modeset, problem.quad, problem.rank_tol)

    loci = []
    for k, sensor in enumerate(problem.suite):
        locus = locus_check(sensor, problem.domain, problem.gamma, problem.J)
        loci.append(LocusSummary(
            sensor=k, label=sensor.label, applicable=locus.applicable,
            non_strategic_by_locus=locus.non_strategic_by_locus, matched_rule=locus.matched_rule.value,
            witness=locus.witness, witness_mode=locus.witness_mode, interpreted=locus.interpreted,
        ))
        if locus.non_strategic_by_locus and verdict.strategic:
            logger.error(f"Locus {locus.matched_rule.value} fired on sensor {k} but the rank test passed")

    gram_summary = None
    if config.include_gramian:
        gram = gramian(problem.suite, problem.modeset, config.time.T, problem.quad)
        gram_summary = gramian_summary(gram, problem.pd_tol)
        if gram_summary.positive_definite != verdict.strategic:
            logger.warning(f"Gramian test ({gram_summary.positive_definite}) and rank test "
                           f"({verdict.strategic}) disagree (borderline={verdict.borderline})")

    completeness = completeness_diagnostic(problem.modeset, problem.gamma, problem.quad, problem.rank_tol)
    crossing = None
    if config.crossing is not None:
        result = crossing_check(problem.suite, problem.modeset, problem.gamma, config.crossing.radius,
                                problem.quad, problem.rank_tol)
        crossing = CrossingSummary(
            r_radius=result.r_radius, omega_r=result.omega_r, internal_pass=result.internal_pass,
            boundary_pass=result.boundary_pass, implication_holds=result.implication_holds,
            sensors_in_collar=result.sensors_in_collar,
        )

    return VerdictReport(
        version=settings.version,
        config=config,
        verdict=verdict_summary(verdict),
        state_verdict=verdict_summary(state_verdict),
        loci=loci,
        gramian=gram_summary,
        completeness=CompletenessReport(
            rank=completeness.rank, required=completeness.required,
            condition_number=_finite(completeness.condition_number), ok=completeness.ok,
        ),
        simple_spectrum=problem.simple_spectrum,
        crossing=crossing,
    )


def scan_rows(problem: Problem, threads: int) -> List[ScanRow]:
    template, fixed, locations = scan_grid(problem)
    records = scan_locations(template, locations, problem.modeset, problem.gamma, problem.quad,
                             problem.rank_tol, threads=threads, fixed=fixed)
    boundary = template.kind.is_boundary
    rows = []
    for record in records:
        coords = {"s": record.location[0]} if boundary else {"x": record.location[0], "y": record.location[1]}
        rows.append(ScanRow(index=record.index, strategic=record.strategic,
                            sigma_min=record.sigma_min_overall, error=record.error, **coords))
    return rows


# Output helpers

def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, model) -> None:
    path.write_text(model.model_dump_json(indent=2, by_alias=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")


def _write_csv(path: Path, frame: pd.DataFrame) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {path} ({len(frame)} rows)")


def _emit(model, as_json: bool) -> None:
    if as_json:
        sys.stdout.write(model.model_dump_json(indent=2, by_alias=True) + "\n")


# Commands

def cmd_check(config: RunConfig, out: str, settings: Settings, as_json: bool = False) -> int:
    problem = build_problem(config)
    report = check_report(problem, settings)
    _write_json(_out_dir(out) / "report.json", report)
    _emit(report, as_json)
    logger.info(f"check: strategic={report.verdict.strategic} at J={problem.J} "
                f"(q={report.verdict.q}, r={report.verdict.r})")
    return EXIT_OK if report.verdict.strategic else EXIT_NOT_STRATEGIC


def cmd_scan(config: RunConfig, out: str, settings: Settings, grid: Optional[Sequence[int]] = None,
             as_json: bool = False) -> int:
    if grid is not None:
        nx, ny = grid
        if nx < 1 or ny < 1:
            raise ConfigValidationError(f"--grid: counts must be >= 1, got {nx} x {ny}", field_path="--grid")
        base = config.scan or ScanConfig()
        config = config.model_copy(update={"scan": base.model_copy(update={"nx": nx, "ny": ny})})
    problem = build_problem(config)
    rows = scan_rows(problem, settings.threads)

    frame = pd.DataFrame([row.model_dump(exclude_none=False) for row in rows])
    columns = ["index", "s"] if problem.suite.sensors[config.scan.sensor].kind.is_boundary else ["index", "x", "y"]
    frame = frame[columns + ["strategic", "sigma_min", "error"]]
    _write_csv(_out_dir(out) / "scan.csv", frame)
    if as_json:
        sys.stdout.write(json.dumps([row.model_dump() for row in rows], indent=2) + "\n")

    computed = sum(row.error is None for row in rows)
    logger.info(f"scan: {computed}/{len(rows)} rows computed")
    return EXIT_OK if computed else EXIT_NUMERICAL


def simulate_record(problem: Problem, seed: Optional[int]) -> OutputRecord:
    config = problem.config
    coeffs = initial_coefficients(problem)
    record = simulate_outputs(problem.suite, coeffs, problem.modeset, config.time.T, config.time.dt, problem.quad)
    if config.noise.sigma > 0:
        record = add_noise(record, config.noise.sigma, seed if seed is not None else config.noise.seed)
    return record


def output_frame(record: OutputRecord) -> pd.DataFrame:
    data: Dict[str, Any] = {"t": record.times}
    for i in range(record.q):
        data[f"y_{i + 1}"] = record.samples[:, i]
    return pd.DataFrame(data)


def cmd_simulate(config: RunConfig, out: str, settings: Settings, seed: Optional[int] = None) -> int:
    problem = build_problem(config)
    record = simulate_record(problem, seed)
    _write_csv(_out_dir(out) / "outputs.csv", output_frame(record))
    return EXIT_OK


def read_output_record(path: str, problem: Problem) -> OutputRecord:
    """Load an outputs CSV and check it against the configured suite and time grid"""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise ParseError(f"cannot read output data {path}: {error}", field_path="--data")
    expected = ["t"] + [f"y_{i + 1}" for i in range(problem.suite.q)]
    if list(frame.columns) != expected:
        raise ChannelMismatch(f"output columns {list(frame.columns)} do not match {expected}")
    if frame.isna().any().any():
        raise ChannelMismatch("output data has missing values")

    times = frame["t"].to_numpy(dtype=float)
    grid = sample_times(problem.config.time.T, problem.config.time.dt)
    if times.size != grid.size or not np.allclose(times, grid, rtol=0.0, atol=1e-12 * grid[-1]):
        raise HorizonMismatch(
            f"output data has {times.size} samples up to t={times[-1] if times.size else float('nan'):g}; "
            f"config expects {grid.size} samples up to T={grid[-1]:g}"
        )
    return OutputRecord(times=grid, samples=frame[expected[1:]].to_numpy(dtype=float),
                        noise_sigma=problem.config.noise.sigma)


def cmd_reconstruct(config: RunConfig, out: str, settings: Settings, data: str, as_json: bool = False) -> int:
    problem = build_problem(config)
    record = read_output_record(data, problem)
    true_coeffs = initial_coefficients(problem)
    reg = effective_regularization(problem, record)
    samples = config.trace_samples or settings.trace_samples
    result = reconstruct_gradient(
        record, problem.suite, problem.modeset, problem.gamma, reg, problem.quad, T=config.time.T,
        true_coeffs=true_coeffs, trace_samples=samples, rank_tol=problem.rank_tol,
        singular_rcond=settings.singular_rcond,
    )

    truth = gradient_trace(true_coeffs, problem.modeset, problem.gamma, samples)
    tangential, normal = result.trace_on_gamma.components()
    true_tangential, true_normal = truth.components()
    trace = pd.DataFrame({
        "s": result.trace_on_gamma.s,
        "g_tangential": tangential,
        "g_normal": normal,
        "g_true_tangential": true_tangential,
        "g_true_normal": true_normal,
    })

    true_norm = float(np.linalg.norm(true_coeffs.values))
    diff = float(np.linalg.norm(result.estimated_coeffs.values - true_coeffs.values))
    report = ReconstructionReport(
        version=settings.version,
        config=config,
        regularization=result.regularization,
        residual=result.residual,
        condition_number=_finite(result.condition_number),
        err_gamma=result.err_gamma,
        err_boundary=result.err_boundary,
        coefficient_error=diff / true_norm if true_norm > 0 else None,
        surrogate_norm=SURROGATE_NORM,
        estimated_coefficients=[
            ModeCoefficient(n=mode.n, m=mode.m, value=float(value))
            for mode, value in zip(problem.modeset.modes, result.estimated_coeffs.values)
        ],
    )
    out_dir = _out_dir(out)
    _write_csv(out_dir / "trace.csv", trace)
    _write_json(out_dir / "reconstruction.json", report)
    _emit(report, as_json)
    return EXIT_OK


def cmd_gramian(config: RunConfig, out: str, settings: Settings, as_json: bool = False) -> int:
    problem = build_problem(config)
    gram = gramian(problem.suite, problem.modeset, config.time.T, problem.quad)
    summary = gramian_summary(gram, problem.pd_tol)
    out_dir = _out_dir(out)
    _write_json(out_dir / "gramian.json", summary)
    _write_csv(out_dir / "gramian_spectrum.csv", pd.DataFrame({
        "index": np.arange(gram.dimension),
        "eigenvalue": gram.eigenvalues,
        "whitened_eigenvalue": gram.whitened_eigenvalues,
    }))
    if as_json:
        _emit(summary, True)
    else:
        print(f"Gramian {summary.dimension}x{summary.dimension} at T={summary.T:g}: "
              f"eigenvalues [{summary.min_eigenvalue:.6e}, {summary.max_eigenvalue:.6e}], "
              f"whitened [{summary.whitened_min_eigenvalue:.6e}, {summary.whitened_max_eigenvalue:.6e}], "
              f"positive definite (whitened): {summary.positive_definite}, raw: {summary.positive_definite_raw}")
    return EXIT_OK


# Argument parsing

class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors become ParseError (exit 64) instead of SystemExit(2)"""

    def error(self, message):
        raise ParseError(f"usage: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument('--config', dest='config', required=True, help='YAML or JSON run configuration')
    common.add_argument('--out', dest='out', default='.', help='output directory')
    common.add_argument('--seed', dest='seed', type=int, default=None, help='noise seed (overrides config)')
    common.add_argument('--json', dest='json', action='store_true', help='print the report to stdout')

    parser = _ArgumentParser(prog='gradsense',
                             description='Regional boundary gradient sensor analysis for 2-D diffusion')
    commands = parser.add_subparsers(dest='command', required=True, parser_class=_ArgumentParser)
    commands.add_parser('check', parents=[common], help='rank test, loci and Gramian summary')
    scan = commands.add_parser('scan', parents=[common], help='rank test over a grid of sensor locations')
    scan.add_argument('--grid', dest='grid', type=int, nargs=2, metavar=('NX', 'NY'), default=None)
    commands.add_parser('simulate', parents=[common], help='simulate sensor outputs')
    reconstruct = commands.add_parser('reconstruct', parents=[common],
                                      help='reconstruct the gradient trace on gamma from outputs')
    reconstruct.add_argument('--data', dest='data', required=True, help='outputs CSV from simulate')
    commands.add_parser('gramian', parents=[common], help='print the Gramian spectrum summary')
    return parser


def _load_settings() -> Settings:
    try:
        return load_settings()
    except ValidationError as error:
        first = error.errors()[0]
        name = "GRADSENSE_" + str(first.get("loc", ("?",))[0]).upper()
        raise ConfigValidationError(f"{name}: {first.get('msg', 'invalid value')}", field_path=name)


def run(args: argparse.Namespace, settings: Settings) -> int:
    config = load_config(args.config)
    logger.info(f"Running {args.command} with {args.config}")
    if args.command == 'check':
        return cmd_check(config, args.out, settings, args.json)
    if args.command == 'scan':
        return cmd_scan(config, args.out, settings, args.grid, args.json)
    if args.command == 'simulate':
        return cmd_simulate(config, args.out, settings, args.seed)
    if args.command == 'reconstruct':
        return cmd_reconstruct(config, args.out, settings, args.data, args.json)
    return cmd_gramian(config, args.out, settings, args.json)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv_list = list(sys.argv[1:] if argv is None else argv)
    as_json = '--json' in argv_list
    try:
        settings = _load_settings()
        setup_logging(settings)
        args = build_parser().parse_args(argv)
        return run(args, settings)
    except Exception as error:
        payload = error_handler.handle_error(error, context={"argv": argv_list})
        if as_json:
            sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        else:
            where = f" ({payload['field_path']})" if payload['field_path'] else ""
            print(f"gradsense: {payload['error_class']}{where}: {payload['message']}", file=sys.stderr)
        return payload['exit_code']


if __name__ == '__main__':
    sys.exit(main())
