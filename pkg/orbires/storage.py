"""
JSON artifacts: models, certificates, cut results and verification reports.

Rationals are "p/q" strings (integers also accepted on input), supports and
row indices are 1-based, and dumps use sorted keys with a trailing newline so
identical inputs give byte-identical files.
"""

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .cut import CutResolution, CutResult, HamiltonianModel
from .errors import InputError
from .lattice import IntMatrix, StabilizerGroup
from .model import RegularityReport, Stratum, Support, TorusWeightModel
from .resolve import PhiWeights, ResolutionCertificate, SurgeryStep
from .verify import FAIL, INCONCLUSIVE, PASS, CheckReport, VerificationReport

RATIONAL = re.compile(r"^-?\d+(/\d+)?$")
NON_FINITE = ("inf", "-inf", "nan")


# ---------------------------------------------------------
# FILES
# ---------------------------------------------------------
def load_json(path):
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from None


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def save_json(data, path) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        f.write(dumps(data))


# ---------------------------------------------------------
# SCALARS
# ---------------------------------------------------------
def format_rational(value) -> str:
    return str(Fraction(value))


class _Errors:
    """Collects schema violations so one InputError can list them all."""

    def __init__(self):
        self.items: List[str] = []
        self.first: Optional[str] = None

    def add(self, pointer: str, message: str) -> None:
        self.items.append(f"{pointer or '/'}: {message}")
        if self.first is None:
            self.first = pointer or "/"

    def raise_if_any(self) -> None:
        if self.items:
            raise InputError("; ".join(self.items), self.first)


def _rational(value, pointer: str, errors: _Errors) -> Optional[Fraction]:
    if isinstance(value, bool):
        errors.add(pointer, "expected a rational, got a boolean")
        return None
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str) and RATIONAL.match(value.strip()):
        try:
            return Fraction(value.strip())
        except ZeroDivisionError:
            errors.add(pointer, "zero denominator")
            return None
    errors.add(pointer, f"expected an integer or a 'p/q' string, got {value!r}")
    return None


def _integer(value, pointer: str, errors: _Errors) -> Optional[int]:
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    errors.add(pointer, f"expected an integer, got {value!r}")
    return None


def _int_list(value, pointer: str, errors: _Errors) -> Optional[List[int]]:
    if not isinstance(value, list):
        errors.add(pointer, "expected a list of integers")
        return None
    out = [_integer(x, f"{pointer}/{i}", errors) for i, x in enumerate(value)]
    return None if any(x is None for x in out) else out


def _object(data, pointer: str, keys: Sequence[str], errors: _Errors) -> bool:
    if not isinstance(data, dict):
        errors.add(pointer, "expected an object")
        return False
    ok = True
    for key in keys:
        if key not in data:
            errors.add(f"{pointer}/{key}", "missing")
            ok = False
    return ok


def support_to_list(support: Support) -> List[int]:
    return support.one_based()


def _support(value, pointer: str, errors: _Errors, n: Optional[int] = None) -> Optional[Support]:
    items = _int_list(value, pointer, errors)
    if items is None:
        return None
    for i, j in enumerate(items):
        if j < 1 or (n is not None and j > n):
            errors.add(f"{pointer}/{i}", f"index {j} out of range")
            return None
    return Support.of(j - 1 for j in items)


def _optional(value, convert):
    return None if value is None else convert(value)


# ---------------------------------------------------------
# MODELS
# ---------------------------------------------------------
def model_to_dict(model: TorusWeightModel) -> Dict[str, Any]:
    data = {
        "weights": model.weights.to_list(),
        "level": [format_rational(v) for v in model.level],
    }
    if model.labels is not None:
        data["labels"] = list(model.labels)
    return data


def _model(data, pointer: str, errors: _Errors) -> Optional[TorusWeightModel]:
    if not _object(data, pointer, ("weights", "level"), errors):
        return None
    weights = data["weights"]
    if not isinstance(weights, list) or not weights:
        errors.add(f"{pointer}/weights", "expected a nonempty list of rows")
        return None
    rows = [_int_list(r, f"{pointer}/weights/{i}", errors) for i, r in enumerate(weights)]
    if any(r is None for r in rows):
        return None
    width = len(rows[0])
    if width == 0:
        errors.add(f"{pointer}/weights/0", "rows must be nonempty")
        return None
    for i, r in enumerate(rows):
        if len(r) != width:
            errors.add(f"{pointer}/weights/{i}", f"expected {width} entries, got {len(r)}")
            return None

    level = data["level"]
    if not isinstance(level, list) or len(level) != len(rows):
        errors.add(f"{pointer}/level", f"expected a list of {len(rows)} rationals")
        return None
    values = [_rational(v, f"{pointer}/level/{i}", errors) for i, v in enumerate(level)]
    if any(v is None for v in values):
        return None

    labels = data.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != width or \
                not all(isinstance(s, str) for s in labels):
            errors.add(f"{pointer}/labels", f"expected {width} strings")
            return None
    return TorusWeightModel(IntMatrix.from_rows(rows), tuple(values),
                            tuple(labels) if labels is not None else None)


def model_from_dict(data) -> TorusWeightModel:
    errors = _Errors()
    model = _model(data, "", errors)
    errors.raise_if_any()
    return model


def hamiltonian_to_dict(hmodel: HamiltonianModel) -> Dict[str, Any]:
    data = model_to_dict(hmodel.base)
    data["ham_row"] = hmodel.ham_row + 1
    return data


def hamiltonian_from_dict(data, ham_row: Optional[int] = None) -> HamiltonianModel:
    """`ham_row` (1-based) overrides the document's "ham_row"."""
    errors = _Errors()
    model = _model(data, "", errors)
    row = ham_row
    if row is None:
        if isinstance(data, dict) and "ham_row" in data:
            row = _integer(data["ham_row"], "/ham_row", errors)
        else:
            errors.add("/ham_row", "missing (pass --row)")
    errors.raise_if_any()
    if not 1 <= row <= model.k:
        raise InputError(f"ham_row {row} out of range 1..{model.k}", "/ham_row")
    return HamiltonianModel(model, row - 1)


# ---------------------------------------------------------
# STRATA AND REPORTS OF THE MODEL MODULE
# ---------------------------------------------------------
def group_to_dict(group: StabilizerGroup) -> Dict[str, Any]:
    return {"rank": group.rank, "torsion": list(group.torsion), "label": group.label()}


def _group(data, pointer: str, errors: _Errors) -> Optional[StabilizerGroup]:
    if not _object(data, pointer, ("rank", "torsion"), errors):
        return None
    rank = _integer(data["rank"], f"{pointer}/rank", errors)
    torsion = _int_list(data["torsion"], f"{pointer}/torsion", errors)
    if rank is None or torsion is None:
        return None
    return StabilizerGroup(rank, tuple(torsion))


def singular_to_list(entries) -> List[Dict[str, Any]]:
    return [{"support": support_to_list(S), "group": group_to_dict(G)} for S, G in entries]


def _singular(value, pointer: str, errors: _Errors):
    if not isinstance(value, list):
        errors.add(pointer, "expected a list")
        return None
    out = []
    for i, item in enumerate(value):
        p = f"{pointer}/{i}"
        if not _object(item, p, ("support", "group"), errors):
            return None
        S, G = _support(item["support"], f"{p}/support", errors), _group(item["group"], f"{p}/group", errors)
        if S is None or G is None:
            return None
        out.append((S, G))
    return tuple(out)


def regularity_to_dict(report: RegularityReport) -> Dict[str, Any]:
    return {
        "regular": report.passed,
        "empty": report.empty,
        "realizable_supports": report.realizable_count,
        "offending": singular_to_list(report.offending),
    }


def singular_from_list(value) -> Tuple[Tuple[Support, StabilizerGroup], ...]:
    errors = _Errors()
    entries = _singular(value, "", errors)
    errors.raise_if_any()
    return entries


def regularity_from_dict(data) -> RegularityReport:
    errors = _Errors()
    report = None
    if _object(data, "", ("regular", "empty", "realizable_supports", "offending"), errors):
        count = _integer(data["realizable_supports"], "/realizable_supports", errors)
        offending = _singular(data["offending"], "/offending", errors)
        for key in ("regular", "empty"):
            if not isinstance(data[key], bool):
                errors.add(f"/{key}", "expected a boolean")
        if not errors.items:
            report = RegularityReport(data["regular"], offending, count)
            if report.passed == bool(offending):
                errors.add("/regular", "disagrees with the offending supports")
            if report.empty != data["empty"]:
                errors.add("/empty", "disagrees with realizable_supports")
    errors.raise_if_any()
    return report


def stratum_to_dict(stratum: Stratum) -> Dict[str, Any]:
    return {
        "row": stratum.row + 1,
        "order": stratum.order,
        "fixed_support": support_to_list(stratum.fixed_support),
        "realizable": stratum.realizable,
        "lift": list(stratum.lift),
        "beta": list(stratum.beta),
        "quotiented": [q + 1 for q in stratum.quotiented],
    }


def _stratum(data, pointer: str, errors: _Errors) -> Optional[Stratum]:
    keys = ("row", "order", "fixed_support", "realizable", "lift", "beta", "quotiented")
    if not _object(data, pointer, keys, errors):
        return None
    row = _integer(data["row"], f"{pointer}/row", errors)
    order = _integer(data["order"], f"{pointer}/order", errors)
    fixed = _support(data["fixed_support"], f"{pointer}/fixed_support", errors)
    lift = _int_list(data["lift"], f"{pointer}/lift", errors)
    beta = _int_list(data["beta"], f"{pointer}/beta", errors)
    quotiented = _int_list(data["quotiented"], f"{pointer}/quotiented", errors)
    if not isinstance(data["realizable"], bool):
        errors.add(f"{pointer}/realizable", "expected a boolean")
        return None
    if None in (row, order, fixed, lift, beta, quotiented):
        return None
    try:
        return Stratum(row=row - 1, order=order, fixed_support=fixed, realizable=data["realizable"],
                       lift=tuple(lift), beta=tuple(beta), quotiented=tuple(q - 1 for q in quotiented))
    except InputError as exc:
        errors.add(pointer, str(exc))
        return None


def stratum_from_dict(data) -> Stratum:
    errors = _Errors()
    stratum = _stratum(data, "", errors)
    errors.raise_if_any()
    return stratum


def strata_from_list(value) -> List[Stratum]:
    errors = _Errors()
    if not isinstance(value, list):
        errors.add("", "expected a list")
        value = []
    strata = [_stratum(item, f"/{i}", errors) for i, item in enumerate(value)]
    errors.raise_if_any()
    return strata


# ---------------------------------------------------------
# CERTIFICATES
# ---------------------------------------------------------
def step_to_dict(step: SurgeryStep) -> Dict[str, Any]:
    data = {
        "kind": step.kind,
        "row": step.row + 1,
        "stratum": stratum_to_dict(step.stratum),
        "m": step.m,
        "new_level": format_rational(step.new_level),
        "new_row": step.new_row + 1,
        "input_columns": step.input_columns,
    }
    for key in ("epsilon", "delta", "separation"):
        value = getattr(step, key)
        data[key] = None if value is None else format_rational(value)
    data["phi"] = None if step.phi is None else {
        "weights": list(step.phi.weights),
        "order": step.phi.order,
        "fixed_support": support_to_list(step.phi.fixed_support),
    }
    data["tau_hat_row"] = None if step.tau_hat_row is None else list(step.tau_hat_row)
    data["replacement_row"] = None if step.replacement_row is None else list(step.replacement_row)
    return data


def _step(data, pointer: str, errors: _Errors) -> Optional[SurgeryStep]:
    keys = ("kind", "row", "stratum", "m", "new_level", "new_row", "input_columns")
    if not _object(data, pointer, keys, errors):
        return None
    fields = {
        "kind": data["kind"],
        "row": _integer(data["row"], f"{pointer}/row", errors),
        "stratum": _stratum(data["stratum"], f"{pointer}/stratum", errors),
        "m": _integer(data["m"], f"{pointer}/m", errors),
        "new_level": _rational(data["new_level"], f"{pointer}/new_level", errors),
        "new_row": _integer(data["new_row"], f"{pointer}/new_row", errors),
        "input_columns": _integer(data["input_columns"], f"{pointer}/input_columns", errors),
    }
    if any(v is None for v in fields.values()):
        return None
    fields["row"] -= 1
    fields["new_row"] -= 1
    for key in ("epsilon", "delta", "separation"):
        if data.get(key) is not None:
            fields[key] = _rational(data[key], f"{pointer}/{key}", errors)
    for key in ("tau_hat_row", "replacement_row"):
        if data.get(key) is not None:
            values = _int_list(data[key], f"{pointer}/{key}", errors)
            fields[key] = None if values is None else tuple(values)
    phi = data.get("phi")
    if phi is not None:
        p = f"{pointer}/phi"
        if not _object(phi, p, ("weights", "order", "fixed_support"), errors):
            return None
        weights = _int_list(phi["weights"], f"{p}/weights", errors)
        order = _integer(phi["order"], f"{p}/order", errors)
        fixed = _support(phi["fixed_support"], f"{p}/fixed_support", errors)
        if None in (weights, order, fixed):
            return None
        fields["phi"] = PhiWeights(tuple(weights), order, fixed)
    if errors.items:
        return None
    return SurgeryStep(**fields)


def certificate_to_dict(certificate: ResolutionCertificate) -> Dict[str, Any]:
    return {
        "initial": model_to_dict(certificate.initial),
        "steps": [step_to_dict(s) for s in certificate.steps],
        "summaries": [singular_to_list(s) for s in certificate.summaries],
        "final": model_to_dict(certificate.final),
    }


def _certificate(data, pointer: str, errors: _Errors) -> Optional[ResolutionCertificate]:
    if not _object(data, pointer, ("initial", "steps", "summaries", "final"), errors):
        return None
    initial = _model(data["initial"], f"{pointer}/initial", errors)
    final = _model(data["final"], f"{pointer}/final", errors)
    if not isinstance(data["steps"], list) or not isinstance(data["summaries"], list):
        errors.add(pointer, "steps and summaries must be lists")
        return None
    steps = [_step(s, f"{pointer}/steps/{i}", errors) for i, s in enumerate(data["steps"])]
    summaries = [_singular(s, f"{pointer}/summaries/{i}", errors) for i, s in enumerate(data["summaries"])]
    if len(summaries) != len(steps) + 1:
        errors.add(f"{pointer}/summaries", "expected one more summary than steps")
    if errors.items:
        return None
    return ResolutionCertificate(initial, tuple(steps), tuple(summaries), final)


def certificate_from_dict(data) -> ResolutionCertificate:
    errors = _Errors()
    certificate = _certificate(data, "", errors)
    errors.raise_if_any()
    return certificate


# ---------------------------------------------------------
# CUTS
# ---------------------------------------------------------
def cut_result_to_dict(cut: CutResult) -> Dict[str, Any]:
    return {
        "side": cut.side,
        "cut_value": format_rational(cut.cut_value),
        "cut_model": model_to_dict(cut.cut_model),
        "ham_weights": list(cut.ham_weights),
        "hypersurface_singularities": singular_to_list(cut.hypersurface_singularities),
    }


def _cut_result(data, pointer: str, errors: _Errors) -> Optional[CutResult]:
    keys = ("side", "cut_value", "cut_model", "ham_weights", "hypersurface_singularities")
    if not _object(data, pointer, keys, errors):
        return None
    value = _rational(data["cut_value"], f"{pointer}/cut_value", errors)
    model = _model(data["cut_model"], f"{pointer}/cut_model", errors)
    ham = _int_list(data["ham_weights"], f"{pointer}/ham_weights", errors)
    singular = _singular(data["hypersurface_singularities"], f"{pointer}/hypersurface_singularities", errors)
    if data["side"] not in ("above", "below"):
        errors.add(f"{pointer}/side", "expected 'above' or 'below'")
    if errors.items:
        return None
    return CutResult(data["side"], model, value, tuple(ham), singular)


def cut_result_from_dict(data) -> CutResult:
    errors = _Errors()
    cut = _cut_result(data, "", errors)
    errors.raise_if_any()
    return cut


def cut_resolution_to_dict(resolution: CutResolution) -> Dict[str, Any]:
    return {
        "cut": cut_result_to_dict(resolution.cut),
        "certificate": certificate_to_dict(resolution.certificate),
        "ham_weights": list(resolution.ham_weights),
        "margin": format_rational(resolution.margin),
        "locality_violations": [support_to_list(S) for S in resolution.locality_violations],
    }


def cut_resolution_from_dict(data) -> CutResolution:
    errors = _Errors()
    if _object(data, "", ("cut", "certificate", "ham_weights", "margin", "locality_violations"), errors):
        cut = _cut_result(data["cut"], "/cut", errors)
        certificate = _certificate(data["certificate"], "/certificate", errors)
        ham = _int_list(data["ham_weights"], "/ham_weights", errors)
        margin = _rational(data["margin"], "/margin", errors)
        moved = data["locality_violations"]
        if not isinstance(moved, list):
            errors.add("/locality_violations", "expected a list")
        else:
            moved = [_support(s, f"/locality_violations/{i}", errors) for i, s in enumerate(moved)]
    errors.raise_if_any()
    return CutResolution(cut, certificate, tuple(ham), margin, tuple(moved))


# ---------------------------------------------------------
# VERIFICATION REPORTS
# ---------------------------------------------------------
def _clean(value):
    if isinstance(value, float):
        return value if value == value and abs(value) != float("inf") else str(value)
    return value


def check_to_dict(check: CheckReport) -> Dict[str, Any]:
    return {
        "check": check.check,
        "formula": check.formula,
        "status": check.status,
        "max_residual": _clean(check.max_residual),
        "median_residual": _clean(check.median_residual),
        "residuals": [_clean(r) for r in check.residuals],
        "samples": check.samples,
        "seed": check.seed,
        "details": {k: _clean(v) for k, v in sorted(check.details.items())},
        "witnesses": list(check.witnesses),
    }


def report_to_dict(report: VerificationReport) -> Dict[str, Any]:
    return {"status": report.status, "checks": [check_to_dict(c) for c in report.checks]}


def _float(value, pointer: str, errors: _Errors) -> Optional[float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if value in NON_FINITE:
        return float(value)
    errors.add(pointer, f"expected a number, got {value!r}")
    return None


def _check(data, pointer: str, errors: _Errors) -> Optional[CheckReport]:
    keys = ("check", "formula", "status", "residuals", "samples", "seed", "details", "witnesses")
    if not _object(data, pointer, keys, errors):
        return None
    for key in ("check", "formula"):
        if not isinstance(data[key], str):
            errors.add(f"{pointer}/{key}", "expected a string")
    if data["status"] not in (PASS, FAIL, INCONCLUSIVE):
        errors.add(f"{pointer}/status", f"unknown status {data['status']!r}")
    residuals = data["residuals"]
    if not isinstance(residuals, list):
        errors.add(f"{pointer}/residuals", "expected a list")
        residuals = []
    residuals = [_float(r, f"{pointer}/residuals/{i}", errors) for i, r in enumerate(residuals)]
    samples = _integer(data["samples"], f"{pointer}/samples", errors)
    seed = _optional(data["seed"], lambda v: _integer(v, f"{pointer}/seed", errors))
    details = data["details"]
    if not isinstance(details, dict):
        errors.add(f"{pointer}/details", "expected an object")
        details = {}
    details = {k: float(v) if v in NON_FINITE else v for k, v in details.items()}
    witnesses = data["witnesses"]
    if not isinstance(witnesses, list) or not all(isinstance(w, str) for w in witnesses):
        errors.add(f"{pointer}/witnesses", "expected a list of strings")
    if errors.items:
        return None
    return CheckReport(data["check"], data["formula"], data["status"], residuals, samples, seed,
                       details, list(witnesses))


def check_from_dict(data) -> CheckReport:
    errors = _Errors()
    check = _check(data, "", errors)
    errors.raise_if_any()
    return check


def report_from_dict(data) -> VerificationReport:
    errors = _Errors()
    report = None
    if _object(data, "", ("status", "checks"), errors):
        checks = data["checks"]
        if not isinstance(checks, list):
            errors.add("/checks", "expected a list")
            checks = []
        checks = [_check(c, f"/checks/{i}", errors) for i, c in enumerate(checks)]
        if not errors.items:
            report = VerificationReport(checks)
            if report.status != data["status"]:
                errors.add("/status", f"expected {report.status!r} from the checks")
    errors.raise_if_any()
    return report
