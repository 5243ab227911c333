#!/usr/bin/env python3
"""
orbires - resolve torus-quotient orbifolds of linear moment-level models.

Usage:
    python -m orbires.main validate model.json
    python -m orbires.main stratify model.json --row 1
    python -m orbires.main singular model.json
    python -m orbires.main resolve model.json [--epsilon 1/4] [--delta 1/2]
    python -m orbires.main cut model.json --row 1 --at 2 --side above [--resolve] [--verify]
    python -m orbires.main verify model.json --suite all --samples 20

Artifacts are JSON on stdout (or --output); summaries go to stderr.
Randomness is numpy's PCG64 (numpy.random.default_rng) seeded from
--seed, then ORBIRES_SEED, then config.yaml.
Exit status: 0 pass, 1 fail, 2 inconclusive, 3 input error.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

from . import storage, ui_terminal
from .config import load_config
from .cut import BELOW, SIDE_SIGNS, cut_and_resolve, symplectic_cut
from .errors import InputError, OrbiError
from .model import enumerate_strata, orbifold_singular_supports, validate_regular
from .resolve import resolve_all
from .verify import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    SUITES,
    Tolerance,
    VerificationReport,
    VerifySettings,
    cut_embedding_check,
    run_suites,
    worst_status,
)

logger = logging.getLogger(__name__)

COMMANDS = ("validate", "stratify", "singular", "resolve", "cut", "verify")
EXIT_CODES = {PASS: 0, FAIL: 1, INCONCLUSIVE: 2}
EXIT_INPUT = 3


@dataclass
class RunConfig:
    command: str
    input: Path
    output: Optional[Path] = None
    seed: int = 20240601
    tolerance: Tolerance = field(default_factory=Tolerance)
    support_cap: int = 16
    step_cap: int = 64
    epsilon: Optional[Fraction] = None
    delta: Optional[Fraction] = None
    row: Optional[int] = None
    at: Optional[Fraction] = None
    side: str = BELOW
    resolve: bool = False
    verify: bool = False
    suites: Tuple[str, ...] = ("all",)
    samples: Dict[str, int] = field(default_factory=dict)
    perturbation_degree: int = 4
    perturbation_scale: Fraction = Fraction(1, 100)
    quadrature_order: int = 64
    continuity_terms: int = 10000
    log_level: str = "WARNING"
    color: bool = True

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        for name in ("support_cap", "step_cap", "quadrature_order", "continuity_terms"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")
        if any(n <= 0 for n in self.samples.values()):
            raise InputError("sample counts must be positive")
        if self.epsilon is not None and self.epsilon <= 0:
            raise InputError("epsilon must be positive")
        if self.delta is not None and self.delta <= 0:
            raise InputError("delta must be positive")
        if self.epsilon is not None and self.delta is not None and not self.epsilon < self.delta:
            raise InputError(f"need epsilon < delta, got {self.epsilon} and {self.delta}")
        if self.command == "stratify" and self.row is None:
            raise InputError("stratify needs --row")
        if self.command == "cut":
            if self.at is None:
                raise InputError("cut needs --at")
            if self.side not in SIDE_SIGNS:
                raise InputError(f"cut side must be 'above' or 'below', got {self.side!r}")
        if self.row is not None and self.row < 1:
            raise InputError("--row is 1-based")
        for suite in self.suites:
            if suite != "all" and suite not in SUITES:
                raise InputError(f"unknown verify suite {suite!r}")

    def verify_settings(self) -> VerifySettings:
        return VerifySettings(seed=self.seed, tolerance=self.tolerance, samples=dict(self.samples),
                              perturbation_degree=self.perturbation_degree,
                              perturbation_scale=self.perturbation_scale,
                              quadrature_order=self.quadrature_order,
                              continuity_terms=self.continuity_terms)


# ---------------------------------------------------------
# ARGUMENTS
# ---------------------------------------------------------
def parse_rational(text, name):
    if text is None:
        return None
    if not storage.RATIONAL.match(str(text).strip()):
        raise InputError(f"{name} must be an integer or 'p/q', got {text!r}")
    try:
        return Fraction(str(text).strip())
    except ZeroDivisionError:
        raise InputError(f"{name} has a zero denominator") from None


class _Parser(argparse.ArgumentParser):
    """Usage errors surface as InputError (exit 3)."""

    def error(self, message):
        raise InputError(message)


def build_parser():
    parser = _Parser(
        prog="orbires",
        description="Resolve torus-quotient orbifolds of linear moment-level models",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("input", help="model, Hamiltonian model or certificate JSON")
    parser.add_argument("-o", "--output", help="write the JSON artifact here instead of stdout")
    parser.add_argument("--config", help="YAML config file (default ./config.yaml)")
    parser.add_argument("--seed", type=int, help="seed for every random draw")
    parser.add_argument("--row", type=int, help="1-based circle row")
    parser.add_argument("--epsilon", help="collar epsilon as p/q")
    parser.add_argument("--delta", help="collar delta as p/q")
    parser.add_argument("--at", help="cut value a as p/q")
    parser.add_argument("--side", default=BELOW, help="cut side: above or below")
    parser.add_argument("--resolve", action="store_true", help="resolve the cut orbifold")
    parser.add_argument("--verify", action="store_true", help="numerically check the cut embedding")
    parser.add_argument("--suite", action="append", help="verify suite (repeatable): all, " + ", ".join(SUITES))
    parser.add_argument("--samples", type=int, help="samples per verify suite")
    parser.add_argument("--step-cap", type=int, help="maximum number of resolution steps")
    parser.add_argument("--support-cap", type=int, help="maximum number of coordinates N")
    parser.add_argument("--no-color", action="store_true", help="plain terminal summaries")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def build_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config)
    tolerances = cfg["tolerances"]
    samples = {k: int(v) for k, v in cfg["samples"].items()}
    if args.samples is not None:
        samples = {k: args.samples for k in samples}
    try:
        tolerance = Tolerance(**{k: float(v) for k, v in tolerances.items()})
    except TypeError as exc:
        raise InputError(f"bad tolerances in config: {exc}") from None
    config = RunConfig(
        command=args.command,
        input=Path(args.input),
        output=Path(args.output) if args.output else None,
        seed=args.seed if args.seed is not None else int(cfg["seed"]),
        tolerance=tolerance,
        support_cap=args.support_cap or int(cfg["support_cap"]),
        step_cap=args.step_cap or int(cfg["step_cap"]),
        epsilon=parse_rational(args.epsilon, "--epsilon"),
        delta=parse_rational(args.delta, "--delta"),
        row=args.row,
        at=parse_rational(args.at, "--at"),
        side=args.side,
        resolve=args.resolve,
        verify=args.verify,
        suites=tuple(args.suite or ("all",)),
        samples=samples,
        perturbation_degree=int(cfg["perturbation"]["degree"]),
        perturbation_scale=parse_rational(cfg["perturbation"]["scale"], "perturbation.scale"),
        quadrature_order=int(cfg["quadrature_order"]),
        continuity_terms=int(cfg["continuity_terms"]),
        log_level="DEBUG" if args.verbose else str(cfg["logging"]["level"]).upper(),
        color=not args.no_color,
    )
    return config


# ---------------------------------------------------------
# COMMANDS
# ---------------------------------------------------------
def _load_model(config: RunConfig):
    model = storage.model_from_dict(storage.load_json(config.input))
    _check_cap(config, model)
    return model


def _check_cap(config: RunConfig, model) -> None:
    if model.n > config.support_cap:
        raise InputError(f"model has {model.n} coordinates, support cap is {config.support_cap}")


def _row(config: RunConfig, model) -> int:
    if not 1 <= config.row <= model.k:
        raise InputError(f"--row {config.row} out of range 1..{model.k}")
    return config.row - 1


def run_validate(config: RunConfig):
    report = validate_regular(_load_model(config))
    data = storage.regularity_to_dict(report)
    ui_terminal.render_validation(data)
    return data, PASS if report.passed and not report.empty else FAIL


def run_stratify(config: RunConfig):
    model = _load_model(config)
    strata = enumerate_strata(model, _row(config, model))
    data = [storage.stratum_to_dict(s) for s in strata]
    ui_terminal.render_strata(data, config.row)
    return data, PASS


def run_singular(config: RunConfig):
    data = storage.singular_to_list(orbifold_singular_supports(_load_model(config)))
    ui_terminal.render_singular(data)
    return data, PASS


def run_resolve(config: RunConfig):
    certificate = resolve_all(_load_model(config), config.epsilon, config.delta, config.step_cap)
    data = storage.certificate_to_dict(certificate)
    ui_terminal.render_certificate(data)
    return data, PASS


def run_cut(config: RunConfig):
    hmodel = storage.hamiltonian_from_dict(storage.load_json(config.input), config.row)
    _check_cap(config, hmodel.base)
    status = PASS
    if config.resolve:
        resolution = cut_and_resolve(hmodel, config.at, config.side, config.epsilon,
                                     config.delta, config.step_cap)
        cut = resolution.cut
        data = storage.cut_resolution_to_dict(resolution)
        ui_terminal.render_cut(data["cut"])
        ui_terminal.render_certificate(data["certificate"])
        if resolution.locality_violations:
            status = FAIL
    else:
        cut = symplectic_cut(hmodel, config.at, config.side)
        data = storage.cut_result_to_dict(cut)
        ui_terminal.render_cut(data)
    if config.verify:
        reduced = [hmodel.base.weights.row(r) for r in hmodel.quotient_rows]
        check = cut_embedding_check(cut, hmodel.hamiltonian, reduced,
                                    config.samples.get("collar", 50), config.seed, config.tolerance)
        report = storage.report_to_dict(VerificationReport([check]))
        ui_terminal.render_report(report)
        data["verification"] = report
        status = worst_status([status, check.status])
    return data, status


def run_verify(config: RunConfig):
    raw = storage.load_json(config.input)
    if isinstance(raw, dict) and "steps" in raw:
        certificate = storage.certificate_from_dict(raw)
        _check_cap(config, certificate.initial)
    else:
        model = storage.model_from_dict(raw)
        _check_cap(config, model)
        certificate = resolve_all(model, config.epsilon, config.delta, config.step_cap)
    report = run_suites(certificate, config.suites, config.verify_settings())
    data = storage.report_to_dict(report)
    ui_terminal.render_report(data)
    return data, report.status


HANDLERS = {
    "validate": run_validate,
    "stratify": run_stratify,
    "singular": run_singular,
    "resolve": run_resolve,
    "cut": run_cut,
    "verify": run_verify,
}


def _emit(config: RunConfig, data: Any) -> None:
    text = storage.dumps(data)
    if config.output is None:
        sys.stdout.write(text)
    else:
        with config.output.open("w", encoding="utf-8") as f:
            f.write(text)


def run(config: RunConfig) -> int:
    """Execute one command; returns the exit status."""
    try:
        config.validate()
        data, status = HANDLERS[config.command](config)
    except InputError as exc:
        ui_terminal.render_error(str(exc))
        return EXIT_INPUT
    except OrbiError as exc:
        ui_terminal.render_error(str(exc))
        return EXIT_CODES[FAIL]
    _emit(config, data)
    logger.info("%s finished: %s", config.command, status)
    return EXIT_CODES[status]


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = build_config(argv)
    except InputError as exc:
        ui_terminal.render_error(str(exc))
        return EXIT_INPUT
    logging.basicConfig(level=getattr(logging, config.log_level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    ui_terminal.set_color(config.color)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
