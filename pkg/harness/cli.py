from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, model_validator
from sympy import primerange
from tqdm import tqdm

from curve_file import CurveFileProcessor
from curves import bsd_report, c_infinity, match_curve_to_newform, torsion_order
from errors import ConfigError, EngineError
from harness import ENGINE_VERSION, SCHEMA_VERSION
from harness.report import ReportLine, encode_lines, level_lines, rational_str, summary_line
from newform import analytic_rank_is_zero, eigenvalue, rational_newforms, root_number, sturm_bound
from pipeline import DEFAULT_P_MAX, LevelPipeline, local_table
from space_cache import SpaceStore
from winding import cuspidal_image_order, lratio, winding_data


# ----------------------------------------------------------------------------
# Init
# ----------------------------------------------------------------------------
load_dotenv()

log = logging.getLogger("harness")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = os.getenv("MODVIS_LOG_LEVEL", "INFO").upper()
    if verbose:
        level = "DEBUG"
    elif quiet:
        level = "WARNING"
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


# ----------------------------------------------------------------------------
# Schemas
# ----------------------------------------------------------------------------
class ScanConfig(BaseModel):
    n_from: int = Field(ge=1)
    n_to: int = Field(ge=1)
    p_max: int = Field(default=DEFAULT_P_MAX, ge=3)
    safety: int = Field(default=3, ge=1)
    curve_file: Optional[str] = None
    cache_dir: Optional[str] = None
    threads: int = Field(default_factory=lambda: int(os.getenv("MODVIS_THREADS", "1")), ge=1)
    out: str
    strict: bool = False

    @model_validator(mode="after")
    def _ordered_range(self) -> "ScanConfig":
        if self.n_to < self.n_from:
            raise ValueError(f"empty level range {self.n_from}..{self.n_to}")
        return self


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(f"{message}\n{self.format_usage()}")


# ----------------------------------------------------------------------------
# Pipeline singleton (one per worker process)
# ----------------------------------------------------------------------------
_PIPELINE: Optional[LevelPipeline] = None
_PIPELINE_CFG: Optional[ScanConfig] = None


def get_pipeline(cfg: ScanConfig) -> LevelPipeline:
    global _PIPELINE, _PIPELINE_CFG
    if _PIPELINE is None or _PIPELINE_CFG != cfg:
        curves = CurveFileProcessor(cfg.curve_file)
        _PIPELINE = LevelPipeline(
            store=SpaceStore(cache_dir=cfg.cache_dir),
            curves=curves,
            p_max=cfg.p_max,
            safety=cfg.safety,
            strict=cfg.strict,
        )
        _PIPELINE_CFG = cfg
    return _PIPELINE


def _scan_level(N: int, cfg_doc: Dict[str, Any]) -> List[Dict[str, Any]]:
    cfg = ScanConfig.model_validate(cfg_doc)
    report = get_pipeline(cfg).run(N)
    return [line.model_dump() for line in level_lines(report, cfg.safety, sturm_bound(N))]


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------
def cmd_scan(cfg: ScanConfig, quiet: bool = False) -> int:
    levels = list(range(cfg.n_from, cfg.n_to + 1))
    curves = CurveFileProcessor(cfg.curve_file)
    log.info("scan %d..%d with %d curve record(s), %d worker(s)", cfg.n_from, cfg.n_to, len(curves.records), cfg.threads)
    doc = cfg.model_dump()
    if cfg.threads == 1:
        results = map(_scan_level, levels, repeat(doc))
    else:
        pool = ProcessPoolExecutor(max_workers=cfg.threads)
        results = pool.map(_scan_level, levels, repeat(doc))
    lines: List[ReportLine] = []
    try:
        for chunk in tqdm(results, total=len(levels), desc="levels", file=sys.stderr, disable=quiet):
            lines.extend(ReportLine.model_validate(d) for d in chunk)
    finally:
        if cfg.threads != 1:
            pool.shutdown()

    summary = summary_line(lines, (cfg.n_from, cfg.n_to))
    out_dir = os.path.dirname(os.path.abspath(cfg.out))
    os.makedirs(out_dir, exist_ok=True)
    with open(cfg.out, "wb") as fh:
        fh.write(encode_lines(lines + [summary]))

    counts = summary.data
    log.info("%d pair(s); %d passed, %d failed, %d unknown, %d conditional warning(s)",
             counts["pairs"], counts["passed"], counts["failed"], counts["unknown"], counts["conditional_warnings"])
    if counts["conditional_warnings"]:
        log.warning("%d conditional check(s) failed with unproved hypotheses", counts["conditional_warnings"])
    return EXIT_FAILED if counts["unconditional_failures"] else EXIT_OK


def cmd_inspect(N: int, eig_bound: int = 30, curve_file: Optional[str] = None, cache_dir: Optional[str] = None) -> int:
    if N < 1:
        raise ConfigError("level must be positive")
    store = SpaceStore(cache_dir=cache_dir)
    space = store.get(N)
    if space.genus == 0:
        print(f"level {N}: genus 0, nothing to show")
        return EXIT_OK
    data = winding_data(space)
    forms = rational_newforms(space, bound=eig_bound)
    print(f"level {N}: genus {space.genus}, dimension {space.dimension}, "
          f"{len(space.cusps)} cusps, winding denominator {data.cuspidal_order}")

    primes = list(primerange(2, eig_bound + 1))
    rows = []
    for f in forms:
        zero = analytic_rank_is_zero(f)
        row = {"form": f.label}
        row.update({f"a{ell}": eigenvalue(f, ell) for ell in primes})
        row.update({
            "rank0": zero,
            "lratio": rational_str(lratio(f)),
            "cusp_image": cuspidal_image_order(f) if zero else None,
            "w_N": f.atkin_lehner_sign,
            "eps": root_number(f),
        })
        rows.append(row)
    if rows:
        print(pd.DataFrame(rows).to_string(index=False))
    else:
        print("no rational newforms")

    curves = CurveFileProcessor(curve_file)
    declared = curves.df[curves.df["N"] == N]
    if not declared.empty:
        print(f"\n{declared.to_string(index=False)}")
    for curve in curves.for_level(N):
        f = match_curve_to_newform(curve, forms)
        print(f"\n{curve.label} {list(curve.ainvs)} -> {f.label if f else 'unmatched'}")
        print(pd.DataFrame(local_table(curve)).to_string(index=False))
        print(f"torsion {torsion_order(curve)}, c_inf {c_infinity(curve.ainvs)}", end="")
        if f is not None:
            bsd = bsd_report(curve, lratio(f))
            print(f", tamagawa {bsd.tamagawa_product}, sha_an {rational_str(bsd.sha_analytic)}")
        else:
            print()
    store.save(space)
    return EXIT_OK


# ----------------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modvis", description="Modular-symbol visibility scans.")
    parser.add_argument("--version", action="version",
                        version=f"modvis {ENGINE_VERSION} (report schema {SCHEMA_VERSION})")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scan = sub.add_parser("scan", help="scan a range of levels for visible congruences")
    scan.add_argument("--from", dest="n_from", type=int, required=True)
    scan.add_argument("--to", dest="n_to", type=int, required=True)
    scan.add_argument("--p-max", dest="p_max", type=int, default=DEFAULT_P_MAX)
    scan.add_argument("--safety", type=int, default=3)
    scan.add_argument("--curves", dest="curve_file")
    scan.add_argument("--cache", dest="cache_dir")
    scan.add_argument("--threads", type=int)
    scan.add_argument("--out", required=True)
    scan.add_argument("--strict", action="store_true", help="fail pairs whose hypotheses cannot be verified")

    inspect = sub.add_parser("inspect", help="print the newforms and winding data of one level")
    inspect.add_argument("level", type=int)
    inspect.add_argument("--eigenvalues", type=int, default=30, metavar="L")
    inspect.add_argument("--curves", dest="curve_file")
    inspect.add_argument("--cache", dest="cache_dir")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _configure_logging(args.verbose, args.quiet)
        if args.command == "scan":
            fields = {k: v for k, v in vars(args).items()
                      if k in ScanConfig.model_fields and v is not None}
            try:
                cfg = ScanConfig(**fields)
            except ValidationError as exc:
                raise ConfigError(f"{exc}\n{parser.format_usage()}") from exc
            return cmd_scan(cfg, quiet=args.quiet)
        return cmd_inspect(args.level, args.eigenvalues, args.curve_file, args.cache_dir)
    except ConfigError as exc:
        print(f"modvis: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"modvis: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EngineError as exc:
        print(f"modvis: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
