from fractions import Fraction

import orjson
import pytest

from harness import ENGINE_VERSION, SCHEMA_VERSION
from harness.report import ReportLine, encode_lines, level_lines, rational_str, summary_line, tally
from pipeline import FormSummary, LevelReport


def _pair(level, checks, containment=True, odd=True, kernel=True):
    return ReportLine(kind="pair", level=level, f=f"{level}.2", g=f"{level}.1", p=3, r=3, data={
        "winding_containment": containment,
        "odd_identity_ok": odd,
        "kernel_claim_ok": kernel,
        "ordp_checks": checks,
    })


def test_rational_str():
    assert rational_str(Fraction(1, 5)) == "1/5"
    assert rational_str(Fraction(3)) == "3/1"
    assert rational_str(None) is None


def test_form_and_error_lines():
    report = LevelReport(level=11, genus=1, dimension=2, winding_denominator=5, forms=[
        FormSummary(label="11.1", eigenvalues={2: -2, 3: -1, 53: -6}, rank_zero=True, lratio=Fraction(1, 5)),
    ])
    [line] = level_lines(report, safety=3, sturm=2)
    assert line.kind == "form"
    assert line.data["lratio"] == "1/5"
    assert line.data["a_small"] == {"2": -2, "3": -1}
    assert line.schema_version == SCHEMA_VERSION
    assert line.engine_version == ENGINE_VERSION

    [err] = level_lines(LevelReport(level=5000, error="LevelTooLarge: too big"), safety=3, sturm=1)
    assert err.kind == "error"
    assert err.data["error"].startswith("LevelTooLarge")


def test_tally_separates_conditional_failures():
    lines = [
        _pair(389, [
            {"name": "factor1", "passed": True, "conditional": False},
            {"name": "torsion_sq_lratio", "passed": None, "conditional": True},
            {"name": "sha_analytic", "passed": False, "conditional": True},
        ]),
        _pair(433, [{"name": "factor1", "passed": False, "conditional": False}], odd=None),
        ReportLine(kind="error", level=5000, data={"error": "x"}),
    ]
    counts = tally(lines)
    assert counts["pairs"] == 2
    assert counts["passed"] == 1
    assert counts["unknown"] == 1
    assert counts["conditional_warnings"] == 1
    assert counts["failed"] == 1
    # the failed factor1 check and the error line
    assert counts["unconditional_failures"] == 2
    assert counts["levels_with_errors"] == 1


def test_containment_failure_is_unconditional():
    assert tally([_pair(389, [], containment=False)])["unconditional_failures"] == 1


def test_encoding_is_sorted_with_summary_last():
    lines = [
        _pair(433, []),
        ReportLine(kind="form", level=433, f="433.1"),
        ReportLine(kind="form", level=11, f="11.1"),
    ]
    blob = encode_lines(lines + [summary_line(lines, (11, 433))])
    decoded = [orjson.loads(x) for x in blob.splitlines()]
    assert [(d["kind"], d["level"]) for d in decoded] == [
        ("form", 11), ("form", 433), ("pair", 433), ("summary", None),
    ]
    assert decoded[-1]["data"]["from"] == 11
    assert blob.endswith(b"\n")
    assert encode_lines(list(reversed(lines)) + [summary_line(lines, (11, 433))]) == blob


def test_error_lines_fail_the_run():
    counts = tally([ReportLine(kind="error", level=5000, data={"error": "LevelTooLarge: too big"})])
    assert counts["levels_with_errors"] == 1
    assert counts["unconditional_failures"] == 1


def test_odd_intersection_failure_is_unconditional():
    line = _pair(389, [])
    line.data["odd_intersection_ok"] = False
    assert tally([line])["unconditional_failures"] == 1


@pytest.mark.parametrize("conditional, failures, warnings", [(False, 1, 0), (True, 0, 1)])
def test_torsion_inequality_depends_on_hypotheses(conditional, failures, warnings):
    line = _pair(389, [])
    line.data.update(torsion_equal_at_r=False, conditional=conditional)
    counts = tally([line])
    assert counts["unconditional_failures"] == failures
    assert counts["conditional_warnings"] == warnings


def test_form_invariant_failure_counts():
    line = ReportLine(kind="form", level=11, f="11.1", data={"torsion_divisible": False})
    assert tally([line])["unconditional_failures"] == 1
    # the denominator guard is a watchdog only
    guard = ReportLine(kind="form", level=11, f="11.1", data={"denominator_guard_ok": False})
    assert tally([guard])["unconditional_failures"] == 0
