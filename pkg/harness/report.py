from __future__ import annotations

from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import orjson
from pydantic import BaseModel, Field

from harness import ENGINE_VERSION, SCHEMA_VERSION
from pipeline import FormSummary, LevelReport
from visibility import VisibilityVerdict

KIND_ORDER = {"error": 0, "form": 1, "pair": 2, "summary": 3}


def rational_str(x: Optional[Fraction]) -> Optional[str]:
    if x is None:
        return None
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# ----------------------------------------------------------------------------
# Schemas
# ----------------------------------------------------------------------------
class ReportLine(BaseModel):
    kind: str
    level: Optional[int] = None
    schema_version: int = SCHEMA_VERSION
    engine_version: str = ENGINE_VERSION
    f: Optional[str] = None
    g: Optional[str] = None
    p: Optional[int] = None
    r: Optional[int] = None
    data: Dict[str, Any] = Field(default_factory=dict)

    def sort_key(self) -> Tuple:
        return (self.level or 0, KIND_ORDER[self.kind], self.f or "", self.g or "", self.p or 0)


def form_line(level: int, s: FormSummary) -> ReportLine:
    data: Dict[str, Any] = {
        "rank_zero": s.rank_zero,
        "lratio": rational_str(s.lratio),
        "cuspidal_image_order": s.cuspidal_image_order,
        "atkin_lehner_sign": s.atkin_lehner_sign,
        "root_number": s.root_number,
        "parity_ok": s.parity_ok,
        "modular_degree_index": s.modular_degree_index,
        "denominator_guard_ok": s.denominator_guard_ok,
        "a_small": {str(ell): a for ell, a in s.eigenvalues.items() if ell < 30},
        "curve": s.curve,
        "eichler_shimura_ok": s.eichler_shimura_ok,
        "torsion_divisible": s.torsion_divisible,
        "declared_ok": s.declared_ok,
    }
    if s.bsd is not None:
        data.update({
            "torsion": s.bsd.torsion_order,
            "tamagawa_product": s.bsd.tamagawa_product,
            "c_infinity": s.bsd.c_infinity,
            "sha_analytic": rational_str(s.bsd.sha_analytic),
            "bsd_flags": s.bsd.flags,
        })
    return ReportLine(kind="form", level=level, f=s.label, data=data)


def pair_line(v: VisibilityVerdict, safety: int, index_bound: int) -> ReportLine:
    return ReportLine(
        kind="pair",
        level=v.level,
        f=v.f,
        g=v.g,
        p=v.p,
        r=v.r,
        data={
            "factor1": v.factor1,
            "factor2": v.factor2,
            "denom": v.denom,
            "lratio": rational_str(v.lratio),
            "intersection_order": v.intersection_order,
            "torsion_equal_at_r": v.torsion_equal_at_r,
            "winding_containment": v.winding_containment,
            "kernel_claim_ok": v.kernel_claim_ok,
            "odd_identity_ok": v.odd_identity_ok,
            "odd_intersection_ok": v.odd_intersection_ok,
            "kernel_E_to_Ep": v.kernel_E_to_Ep,
            "kernel_F_to_Fp": v.kernel_F_to_Fp,
            "conditional": v.conditional,
            "exclusion": v.exclusion,
            "flags": v.flags,
            "ordp_checks": [
                {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "passed": c.passed, "conditional": c.conditional}
                for c in v.ordp_checks
            ],
            "notes": v.notes,
            "safety": safety,
            "index_bound": index_bound,
        },
    )


def level_lines(rep: LevelReport, safety: int, sturm: int) -> List[ReportLine]:
    if rep.error is not None:
        return [ReportLine(kind="error", level=rep.level, data={"error": rep.error})]
    lines = [form_line(rep.level, s) for s in rep.forms]
    lines += [pair_line(v, safety, safety * sturm) for v in rep.verdicts]
    return lines


# ----------------------------------------------------------------------------
# Tallies
# ----------------------------------------------------------------------------
FORM_INVARIANTS = ("torsion_divisible", "eichler_shimura_ok")


def tally(lines: List[ReportLine]) -> Dict[str, int]:
    out = {"levels_with_errors": 0, "forms": 0, "pairs": 0, "passed": 0, "failed": 0, "unknown": 0,
           "unconditional_failures": 0, "conditional_warnings": 0}
    for line in lines:
        if line.kind == "error":
            # unchecked levels fail the run
            out["levels_with_errors"] += 1
            out["unconditional_failures"] += 1
        elif line.kind == "form":
            out["forms"] += 1
            if any(line.data.get(key) is False for key in FORM_INVARIANTS):
                out["unconditional_failures"] += 1
        elif line.kind == "pair":
            out["pairs"] += 1
            d = line.data
            if (not d["winding_containment"] or d["odd_identity_ok"] is False
                    or d.get("odd_intersection_ok") is False or not d["kernel_claim_ok"]):
                out["unconditional_failures"] += 1
            if d.get("torsion_equal_at_r") is False:
                key = "conditional_warnings" if d.get("conditional", True) else "unconditional_failures"
                out[key] += 1
            for c in d["ordp_checks"]:
                if c["passed"] is None:
                    out["unknown"] += 1
                elif c["passed"]:
                    out["passed"] += 1
                elif c["conditional"]:
                    out["conditional_warnings"] += 1
                else:
                    out["failed"] += 1
                    out["unconditional_failures"] += 1
    return out


def summary_line(lines: List[ReportLine], levels: Tuple[int, int]) -> ReportLine:
    return ReportLine(kind="summary", level=None, data={"from": levels[0], "to": levels[1], **tally(lines)})


def _jsonl_encode(obj: Dict[str, Any]) -> bytes:
    return orjson.dumps(obj, option=orjson.OPT_SORT_KEYS) + b"\n"


def encode_lines(lines: List[ReportLine]) -> bytes:
    ordered = sorted((l for l in lines if l.kind != "summary"), key=ReportLine.sort_key)
    ordered += [l for l in lines if l.kind == "summary"]
    return b"".join(_jsonl_encode(l.model_dump()) for l in ordered)
