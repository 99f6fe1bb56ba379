import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

from sympy import primerange

from congruence import DEFAULT_SAFETY, find_visible_pairs
from curve_file import CurveFileProcessor
from curves import BSDReport, CurveRecord, ap_point_count, bsd_report, local_data, match_curve_to_newform
from errors import EngineError
from newform import (
    RationalNewform,
    analytic_rank_is_zero,
    eigenvalue,
    modular_degree_index,
    rational_newforms,
    root_number,
    sturm_bound,
)
from space_cache import SpaceStore
from visibility import VisibilityVerdict, verify_main_theorem
from winding import WindingData, lratio_report, winding_data

log = logging.getLogger(__name__)

DEFAULT_P_MAX = 13


@dataclass
class FormSummary:
    label: str
    eigenvalues: Dict[int, int]
    rank_zero: bool
    lratio: Fraction
    cuspidal_image_order: Optional[int] = None
    atkin_lehner_sign: Optional[int] = None
    root_number: Optional[int] = None
    parity_ok: Optional[bool] = None
    modular_degree_index: Optional[int] = None
    denominator_guard_ok: bool = True
    curve: Optional[str] = None
    bsd: Optional[BSDReport] = None
    eichler_shimura_ok: Optional[bool] = None
    torsion_divisible: Optional[bool] = None
    declared_ok: Optional[bool] = None


@dataclass
class LevelReport:
    level: int
    genus: int = 0
    dimension: int = 0
    winding_denominator: Optional[int] = None
    forms: List[FormSummary] = field(default_factory=list)
    verdicts: List[VisibilityVerdict] = field(default_factory=list)
    unmatched_curves: List[str] = field(default_factory=list)
    error: Optional[str] = None


class LevelPipeline:
    """Everything computed for one level: space, newforms, winding data, pairs and verdicts."""

    def __init__(self, store: Optional[SpaceStore] = None, curves: Optional[CurveFileProcessor] = None,
                 p_max: int = DEFAULT_P_MAX, safety: int = DEFAULT_SAFETY, strict: bool = False):
        self.store = store or SpaceStore()
        self.curves = curves
        self.p_max = p_max
        self.safety = safety
        self.strict = strict

    # ---- per form
    def _summarize(self, f: RationalNewform, curve: Optional[CurveRecord], data: WindingData) -> FormSummary:
        rank_zero = analytic_rank_is_zero(f)
        ratio = lratio_report(f, data)
        value = ratio.lratio
        out = FormSummary(
            label=f.label,
            eigenvalues=dict(sorted(f.eigenvalues.items())),
            rank_zero=rank_zero,
            lratio=value,
            cuspidal_image_order=ratio.cuspidal_image_order,
            atkin_lehner_sign=f.atkin_lehner_sign,
            root_number=root_number(f),
            modular_degree_index=modular_degree_index(f),
            denominator_guard_ok=ratio.denominator_guard_ok,
        )
        if out.root_number is not None:
            out.parity_ok = (out.root_number == 1) or not rank_zero
        if curve is None:
            return out
        out.curve = curve.label
        bound = sturm_bound(f.level)
        out.eichler_shimura_ok = all(
            ap_point_count(curve, ell) == eigenvalue(f, ell) for ell in primerange(2, bound + 1) if f.level % ell
        )
        out.bsd = bsd_report(curve, value)
        if out.cuspidal_image_order:
            out.torsion_divisible = out.bsd.torsion_order % out.cuspidal_image_order == 0
        declared = []
        if curve.torsion is not None:
            declared.append(curve.torsion == out.bsd.torsion_order)
        if curve.rank is not None:
            declared.append((curve.rank == 0) == rank_zero)
        out.declared_ok = all(declared) if declared else None
        return out

    # ---- per level
    def run(self, N: int) -> LevelReport:
        report = LevelReport(level=N)
        try:
            space = self.store.get(N)
            report.genus, report.dimension = space.genus, space.dimension
            if space.genus == 0:
                return report
            data = winding_data(space)
            report.winding_denominator = data.cuspidal_order
            forms = rational_newforms(space)

            matched: Dict[str, CurveRecord] = {}
            for curve in (self.curves.for_level(N) if self.curves else []):
                f = match_curve_to_newform(curve, forms)
                if f is None:
                    report.unmatched_curves.append(curve.label)
                elif f.label not in matched:
                    matched[f.label] = curve
            report.forms = [self._summarize(f, matched.get(f.label), data) for f in forms]

            for pair in find_visible_pairs(space, self.p_max, self.safety, forms=forms):
                report.verdicts.append(
                    verify_main_theorem(pair, matched.get(pair.f.label), matched.get(pair.g.label), strict=self.strict)
                )
            self.store.save(space)
        except EngineError as exc:
            log.error("level %d: %s: %s", N, type(exc).__name__, exc)
            report.error = f"{type(exc).__name__}: {exc}"
        except Exception as exc:
            log.exception("level %d: unexpected failure", N)
            report.error = f"internal {type(exc).__name__}: {exc}"
        return report


def local_table(curve: CurveRecord) -> List[Dict[str, object]]:
    return [
        {"q": q, "kodaira": ld.kodaira_type, "c_q": ld.c_q, "v(disc)": ld.disc_valuation,
         "f_q": ld.conductor_exponent, "reduction": ld.reduction}
        for q, ld in sorted(local_data(curve.ainvs).items())
    ]
