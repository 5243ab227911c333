"""
Test script for JSON artifacts.

Demonstrates:
1. Loading the bundled fixtures
2. Schema errors with JSON pointers
3. Certificates, cut resolutions and reports surviving a save/load cycle
4. Byte-stable dumps
"""

import json
import math
import os
import sys
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbires.cut import ABOVE, cut_and_resolve
from orbires.errors import InputError
from orbires.model import TorusWeightModel, enumerate_strata, orbifold_singular_supports, validate_regular
from orbires.resolve import resolve_all
from orbires.storage import (
    certificate_from_dict,
    certificate_to_dict,
    check_from_dict,
    check_to_dict,
    cut_resolution_from_dict,
    cut_resolution_to_dict,
    dumps,
    format_rational,
    hamiltonian_from_dict,
    load_json,
    model_from_dict,
    model_to_dict,
    regularity_from_dict,
    regularity_to_dict,
    report_from_dict,
    report_to_dict,
    save_json,
    singular_from_list,
    singular_to_list,
    strata_from_list,
    stratum_from_dict,
    stratum_to_dict,
)
from orbires.verify import FAIL, CheckReport, VerificationReport, VerifySettings, run_suites

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def _fixture(name):
    return load_json(os.path.join(FIXTURES, name))


def test_load_fixtures():
    print("=" * 70)
    print("TEST 1: bundled fixtures parse")
    print("=" * 70)
    model = model_from_dict(_fixture("cp112.json"))
    assert model == TorusWeightModel.create([[1, 1, 2]], [1], ["z1", "z2", "z3"])
    assert model_from_dict(_fixture("line_2_3.json")).weights.to_list() == [[2, 3]]
    assert model_from_dict(_fixture("nonregular.json")).level == (Fraction(1), Fraction(0))
    hmodel = hamiltonian_from_dict(_fixture("cut_line.json"))
    assert hmodel.ham_row == 0
    assert hmodel.hamiltonian == (1, 2)


def test_rational_formats():
    model = model_from_dict({"weights": [[1, 2]], "level": ["3/4"]})
    assert model.level == (Fraction(3, 4),)
    model = model_from_dict({"weights": [[1, 2]], "level": [-2]})
    assert model.level == (Fraction(-2),)
    assert format_rational(Fraction(6, 8)) == "3/4"
    assert format_rational(Fraction(4, 2)) == "2"


@pytest.mark.parametrize("data, pointer", [
    ({"level": ["1"]}, "/weights"),
    ({"weights": [[1, 2]], "level": ["0.5"]}, "/level/0"),
    ({"weights": [[1, "x"]], "level": ["1"]}, "/weights/0/1"),
    ({"weights": [[1, 2], [1]], "level": ["1", "1"]}, "/weights/1"),
    ({"weights": [[1, 2]], "level": ["1", "2"]}, "/level"),
    ({"weights": [[1, 2]], "level": [True]}, "/level/0"),
    ({"weights": [[1, 2]], "level": ["1/0"]}, "/level/0"),
    ({"weights": [[1, 2]], "level": ["1"], "labels": ["a"]}, "/labels"),
])
def test_schema_errors(data, pointer):
    with pytest.raises(InputError) as info:
        model_from_dict(data)
    assert info.value.pointer == pointer


def test_not_an_object():
    with pytest.raises(InputError) as info:
        model_from_dict([1, 2])
    assert info.value.pointer == "/"


def test_ham_row_errors():
    with pytest.raises(InputError) as info:
        hamiltonian_from_dict({"weights": [[1, 2]], "level": ["1"]})
    assert info.value.pointer == "/ham_row"
    with pytest.raises(InputError):
        hamiltonian_from_dict({"weights": [[1, 2]], "level": ["1"], "ham_row": 2})
    assert hamiltonian_from_dict({"weights": [[1, 2]], "level": ["1"]}, ham_row=1).ham_row == 0


def test_missing_and_invalid_files(tmp_path):
    with pytest.raises(InputError):
        load_json(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(InputError):
        load_json(bad)


def test_certificate_save_load(tmp_path):
    print("=" * 70)
    print("TEST 2: a certificate survives a save/load cycle")
    print("=" * 70)
    cert = resolve_all(TorusWeightModel.create([[2, 3]], [1]))
    path = tmp_path / "cert.json"
    save_json(certificate_to_dict(cert), path)
    loaded = certificate_from_dict(load_json(path))
    assert loaded == cert
    data = load_json(path)
    assert data["steps"][0]["stratum"]["fixed_support"] == [2]
    assert data["steps"][0]["new_level"] == "-1/4"
    assert data["steps"][0]["row"] == 1


def test_reparametrise_certificate():
    cert = resolve_all(TorusWeightModel.create([[2, 2]], [1]))
    data = certificate_to_dict(cert)
    assert data["steps"][0]["epsilon"] is None
    assert certificate_from_dict(json.loads(dumps(data))) == cert


def test_certificate_errors():
    cert = certificate_to_dict(resolve_all(TorusWeightModel.create([[1, 1, 2]], [1])))
    cert["steps"][0]["m"] = "two"
    with pytest.raises(InputError) as info:
        certificate_from_dict(cert)
    assert info.value.pointer == "/steps/0/m"

    cert = certificate_to_dict(resolve_all(TorusWeightModel.create([[1, 1, 2]], [1])))
    cert["summaries"].pop()
    with pytest.raises(InputError) as info:
        certificate_from_dict(cert)
    assert info.value.pointer == "/summaries"


def test_cut_resolution_save_load():
    hmodel = hamiltonian_from_dict(_fixture("cut_line.json"))
    resolution = cut_and_resolve(hmodel, 2, ABOVE)
    data = json.loads(dumps(cut_resolution_to_dict(resolution)))
    assert data["margin"] == "1/2"
    assert data["ham_weights"] == [1, 2, 0, 0]
    assert cut_resolution_from_dict(data) == resolution


def test_dumps_is_stable():
    model = TorusWeightModel.create([[1, 1, 2]], [1])
    first = dumps(certificate_to_dict(resolve_all(model)))
    second = dumps(certificate_to_dict(resolve_all(model)))
    assert first == second
    assert first.endswith("\n")
    assert dumps(model_to_dict(model)) == dumps({"level": ["1"], "weights": [[1, 1, 2]]})


def test_check_report_non_finite():
    report = CheckReport("moser", "moser_system", FAIL, [math.inf], 1, details={"norm": math.nan})
    data = check_to_dict(report)
    assert data["max_residual"] == "inf"
    assert data["details"]["norm"] == "nan"
    json.dumps(data, allow_nan=False)


def test_model_reports_save_load():
    print("=" * 70)
    print("TEST 3: regularity reports, strata and singular lists reload")
    print("=" * 70)
    model = TorusWeightModel.create([[2, 3]], [1])
    report = validate_regular(model)
    assert regularity_from_dict(json.loads(dumps(regularity_to_dict(report)))) == report

    origin = validate_regular(TorusWeightModel.create([[1, -1]], [0]))
    data = json.loads(dumps(regularity_to_dict(origin)))
    assert data["offending"][0]["support"] == []
    assert regularity_from_dict(data) == origin

    strata = enumerate_strata(model, 0)
    data = json.loads(dumps([stratum_to_dict(s) for s in strata]))
    assert strata_from_list(data) == strata
    assert stratum_from_dict(data[0]) == strata[0]

    singular = tuple(orbifold_singular_supports(model))
    assert singular_from_list(json.loads(dumps(singular_to_list(singular)))) == singular


def test_model_report_errors():
    data = regularity_to_dict(validate_regular(TorusWeightModel.create([[1, 1, 2]], [1])))
    data["regular"] = False
    with pytest.raises(InputError) as info:
        regularity_from_dict(data)
    assert info.value.pointer == "/regular"
    with pytest.raises(InputError) as info:
        singular_from_list([{"support": [0], "group": {"rank": 0, "torsion": [2]}}])
    assert info.value.pointer == "/0/support/0"


def test_verification_report_save_load():
    cert = resolve_all(TorusWeightModel.create([[1, 1, 2]], [1]))
    settings = VerifySettings(seed=3, samples={"kernel": 3, "morse": 3, "collar": 2, "moser": 1},
                              continuity_terms=200)
    report = run_suites(cert, ["kernel", "morse", "stage"], settings)
    data = json.loads(dumps(report_to_dict(report)))
    assert report_from_dict(data) == report

    odd = CheckReport("moser", "moser_system", FAIL, [math.inf, 1e-3], 2, seed=4,
                      details={"norm": math.inf, "tangent_dim": 5}, witnesses=["{1,3}"])
    data = json.loads(dumps(check_to_dict(odd)))
    assert data["residuals"] == ["inf", 1e-3]
    assert check_from_dict(data) == odd

    data = report_to_dict(VerificationReport([odd]))
    data["status"] = "pass"
    with pytest.raises(InputError) as info:
        report_from_dict(data)
    assert info.value.pointer == "/status"


def main():
    test_load_fixtures()
    test_rational_formats()
    print("All storage tests passed.")


if __name__ == "__main__":
    main()
