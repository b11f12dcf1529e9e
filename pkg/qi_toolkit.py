#!/usr/bin/env python3
"""
qi-toolkit - command-line front end

Quadratic invariance checks, closed-loop convexity probes, H2 model-matching
synthesis and reproduction of the embedded examples. Every command prints a
JSON report; exit code 0 means the check passed, 1 means a witness was found
or a check failed, 2 means the input or configuration was invalid.
"""

import os
import sys
import json
import argparse
import logging

from constants import (
    APP_DESCRIPTION,
    APP_NAME,
    DEFAULT_CONFIG_FILENAME,
    EXAMPLE_IDS,
    EXIT_CHECK_FAILED,
    EXIT_INPUT_ERROR,
    EXIT_OK,
    LOG_FORMAT,
    MAX_FREQ_COUNT,
    MAX_HORIZON,
    MAX_REJECT_REL_TOL,
    MAX_SAMPLES,
    MAX_SEED,
    MAX_TOL,
    MIN_FREQ_COUNT,
    MIN_HORIZON,
    MIN_SAMPLES,
    MSG_CHECK_LINE_FMT,
    MSG_INVALID_INPUT_FMT,
    MSG_QI_FALSE,
    MSG_QI_TRUE,
    MSG_SEED_FMT,
    MSG_SYNTH_REFUSED,
    VERDICT_PASS,
)
from lib.config_helpers import RunConfig, load_config, validate_and_apply_config
from lib.errors import (
    ConfigurationError,
    DimensionError,
    DomainError,
    InertnessError,
    ProbeError,
    QiViolationError,
    SchemaError,
)
from lib.export_helpers import export_cloud_csv, export_report_json, report_payload
from lib.fir_core import fir_subspace_qi_check
from lib.io_helpers import (
    is_fir_document,
    located_call,
    parse_fir_g,
    parse_fir_plant,
    parse_g_pattern,
    parse_s_pattern,
    parse_static_g,
    parse_static_plant,
    parse_subspace,
    read_json_document,
    resolve_output_path,
)
from lib.patterns import pattern_qi_check
from lib.plant_library import reproduce_example
from lib.probe import (
    closed_loop_membership,
    convexity_probe,
    hmap_image,
    hmap_membership,
    probe_image,
    sample_subspace,
)
from lib.static_core import subspace_qi_check
from lib.synthesis import h2_model_match, rank_checks
from lib.validation_helpers import validate_example_id, validate_input_path

logger = logging.getLogger(APP_NAME)


def _bounded(kind, lower, upper, exclusive=False):
    def parse(raw):
        try:
            value = kind(raw)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {raw!r}")
        too_low = value <= lower if exclusive else value < lower
        if too_low or value > upper:
            bracket = "(" if exclusive else "["
            raise argparse.ArgumentTypeError(
                f"{value} outside {bracket}{lower}, {upper}]"
            )
        return value

    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_bounded(float, 0.0, MAX_TOL, True))
    common.add_argument("--horizon", type=_bounded(int, MIN_HORIZON, MAX_HORIZON))
    common.add_argument("--samples", type=_bounded(int, MIN_SAMPLES, MAX_SAMPLES))
    common.add_argument("--seed", type=_bounded(int, 0, MAX_SEED))
    common.add_argument("--out", help="report JSON path")
    common.add_argument("--scheme", choices=("grid", "random"))
    common.add_argument("--cond-tol", type=_bounded(float, 0.0, MAX_TOL, True))
    common.add_argument(
        "--reject-rel-tol", type=_bounded(float, 0.0, MAX_REJECT_REL_TOL, True)
    )
    common.add_argument(
        "--freq-count", type=_bounded(int, MIN_FREQ_COUNT, MAX_FREQ_COUNT)
    )
    common.add_argument("--rank-tol", type=_bounded(float, 0.0, MAX_TOL, True))
    common.add_argument("--config", help="configuration file with a [run] section")
    common.add_argument("--log-file")
    common.add_argument("--verbose", action="store_true", default=None)

    parser = argparse.ArgumentParser(prog=APP_NAME, description=APP_DESCRIPTION)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("qi-check", "decide quadratic invariance of S under G"),
        ("probe", "sample S, map to closed loops and probe convexity"),
        ("synth", "H2 model matching over Q in S"),
    ):
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        cmd.add_argument("input", help="input JSON document")
    rep = sub.add_parser(
        "reproduce", parents=[common], help="run an embedded example"
    )
    rep.add_argument("--example", required=True, choices=EXAMPLE_IDS)
    return parser


def build_run_config(args) -> RunConfig:
    """Defaults, then the --config file, then command-line flags."""
    rc = RunConfig(command=args.command)
    config = load_config(args.config or DEFAULT_CONFIG_FILENAME)
    validate_and_apply_config(config, rc)
    rc.input_path = getattr(args, "input", None)
    rc.example = getattr(args, "example", None)
    for key in (
        "tol",
        "horizon",
        "samples",
        "seed",
        "scheme",
        "cond_tol",
        "reject_rel_tol",
        "freq_count",
        "rank_tol",
        "log_file",
        "verbose",
    ):
        value = getattr(args, key, None)
        if value is not None:
            setattr(rc, key, value)
    rc.out_path = args.out
    return rc


def setup_logging(rc: RunConfig) -> None:
    handlers = [logging.StreamHandler(sys.stderr)]
    if rc.log_file:
        try:
            handlers.append(logging.FileHandler(rc.log_file, encoding="utf-8"))
        except OSError:
            print(f"warning: cannot open log file {rc.log_file}", file=sys.stderr)
    logging.basicConfig(
        level=logging.DEBUG if rc.verbose else logging.INFO,
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def _emit(payload, rc: RunConfig, report=None) -> None:
    print(json.dumps(payload, indent=2))
    if rc.out_path and report is not None:
        path = resolve_output_path(rc.out_path, "report.json")
        export_report_json(report, path, seed=payload.get("seed"))
        logger.info("report written to %s", path)


def _open_input(rc: RunConfig):
    if not validate_input_path(rc.input_path):
        raise SchemaError("input must be an existing .json file", path=rc.input_path)
    return read_json_document(rc.input_path)


def cmd_qi_check(rc: RunConfig) -> int:
    doc = _open_input(rc)
    if doc.has("G_pattern"):
        report = located_call(
            doc, "G_pattern", pattern_qi_check, parse_s_pattern(doc), parse_g_pattern(doc)
        )
    elif is_fir_document(doc):
        G = parse_fir_g(doc)
        S = parse_subspace(doc, fir=True, horizon=rc.horizon)
        report = located_call(doc, "G", fir_subspace_qi_check, S, G, rc.tol)
    else:
        G = parse_static_g(doc)
        S = parse_subspace(doc)
        report = located_call(doc, "G", subspace_qi_check, S, G, rc.tol)
    logger.info(MSG_QI_TRUE if report.qi else MSG_QI_FALSE)
    _emit(report_payload(report), rc, report)
    return EXIT_OK if report.qi else EXIT_CHECK_FAILED


def _probe_paths(rc: RunConfig):
    report_path = resolve_output_path(rc.out_path, "probe_report.json")
    stem, _ = os.path.splitext(report_path)
    return report_path, stem + ".csv"


def _probe_cloud(doc, rc: RunConfig):
    """Sampled cloud and, where one exists, an exact membership oracle.

    Documents with P11, P12 and P21 are probed on the closed-loop set;
    a document with only G and S is probed on h_G(S ∩ M).
    """
    S = parse_subspace(doc)
    with_plant = all(doc.has(k) for k in ("P11", "P12", "P21"))
    P = parse_static_plant(doc) if with_plant else None
    G = P.G if with_plant else parse_static_g(doc)
    count = rc.samples
    if rc.scheme == "grid" and len(S.elements):
        count = max(2, int(round(rc.samples ** (1.0 / len(S.elements)))))
    samples = located_call(
        doc,
        "G",
        sample_subspace,
        S,
        rc.scheme,
        doc.data.get("ranges"),
        count,
        rc.seed,
        G,
        rc.cond_tol,
    )
    if not with_plant:
        return samples, hmap_image(G, samples), hmap_membership(S, G)
    cloud = probe_image(P, samples)
    ranks = rank_checks(P, rc.freq_count, rc.rank_tol)
    if ranks.p12_left_invertible and ranks.p21_right_invertible:
        return samples, cloud, closed_loop_membership(P, S)
    return samples, cloud, None


def cmd_probe(rc: RunConfig) -> int:
    doc = _open_input(rc)
    samples, cloud, membership = _probe_cloud(doc, rc)
    if membership is None:
        report = convexity_probe(cloud, rel_tol=rc.reject_rel_tol, seed=rc.seed)
    else:
        report = convexity_probe(cloud, membership=membership, seed=rc.seed)
    report.notes.append(f"{samples.excluded} sampled controllers outside M excluded")
    report_path, cloud_path = _probe_paths(rc)
    export_cloud_csv(cloud, cloud_path)
    export_report_json(report, report_path, seed=rc.seed)
    logger.info("cloud written to %s, report to %s", cloud_path, report_path)
    print(json.dumps(report_payload(report, rc.seed), indent=2))
    return EXIT_OK if report.verdict == VERDICT_PASS else EXIT_CHECK_FAILED


def cmd_synth(rc: RunConfig) -> int:
    doc = _open_input(rc)
    if is_fir_document(doc) or doc.has("horizon"):
        P = parse_fir_plant(doc)
        S = parse_subspace(doc, fir=True, horizon=rc.horizon)
        horizon = rc.horizon
    else:
        P = parse_static_plant(doc)
        S = parse_subspace(doc)
        horizon = None
    assumptions = rank_checks(P, rc.freq_count, rc.rank_tol)
    try:
        result = located_call(doc, "G", h2_model_match, P, S, horizon, rc.tol)
    except QiViolationError as e:
        print(MSG_SYNTH_REFUSED, file=sys.stderr)
        _emit(report_payload(e.report), rc, e.report)
        return EXIT_CHECK_FAILED
    payload = report_payload(result)
    payload["assumptions"] = assumptions.to_dict()
    _emit(payload, rc, result)
    return EXIT_OK


def cmd_reproduce(rc: RunConfig) -> int:
    if not validate_example_id(rc.example):
        raise SchemaError(f"unknown example {rc.example!r}", path="--example")
    report = reproduce_example(rc.example, rc.seed, rc.horizon)
    for check in report.checks:
        print(
            MSG_CHECK_LINE_FMT.format(
                status="PASS" if check.passed else "FAIL",
                name=check.name,
                detail=check.detail,
            )
        )
    if rc.out_path:
        path = resolve_output_path(rc.out_path, "reproduce.json")
        export_report_json(report, path, seed=rc.seed)
        stem, _ = os.path.splitext(path)
        for name, cloud in report.clouds.items():
            export_cloud_csv(cloud, f"{stem}_{name}.csv")
        logger.info("report written to %s", path)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


_DISPATCH = {
    "qi-check": cmd_qi_check,
    "probe": cmd_probe,
    "synth": cmd_synth,
    "reproduce": cmd_reproduce,
}


def format_schema_error(e: SchemaError) -> str:
    if e.line is None:
        return f"{e.path}: {e.message}" if e.path else e.message
    return MSG_INVALID_INPUT_FMT.format(path=e.path, line=e.line, message=e.message)


def run(rc: RunConfig) -> int:
    """Execute one command and map its outcome to an exit code."""
    if rc.command in ("probe", "reproduce"):
        print(MSG_SEED_FMT.format(seed=rc.seed))
        logger.info(MSG_SEED_FMT.format(seed=rc.seed))
    try:
        return _DISPATCH[rc.command](rc)
    except SchemaError as e:
        print(format_schema_error(e), file=sys.stderr)
        logger.error("invalid input: %s", format_schema_error(e))
        return EXIT_INPUT_ERROR
    except (DimensionError, ProbeError) as e:
        print(f"{rc.input_path}: {e}", file=sys.stderr)
        logger.error("invalid input: %s", e)
        return EXIT_INPUT_ERROR
    except (InertnessError, DomainError) as e:
        print(str(e), file=sys.stderr)
        logger.error("check failed: %s", e)
        return EXIT_CHECK_FAILED


def main(argv=None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        rc = build_run_config(args)
    except ConfigurationError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INPUT_ERROR
    setup_logging(rc)
    return run(rc)


if __name__ == "__main__":
    sys.exit(main())
