"""Command-line pipeline: functional inference, auxiliary inference, WP.

Each stage reads a MicroC file and writes an artifact into the output
directory.  ``all`` chains the stages through the same files, so running the
stages one by one gives the same final report.  The report file holds only
deterministic content; stage timings and inference notes go to stdout.
"""

from __future__ import annotations

import argparse
import enum
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import oracle
from .aux_infer import infer_auxiliary
from .frontend import FrontendError, emit_source, parse_module
from .func_infer import FuncInferConfig, InferenceFailure, analyze
from .solver import SolverLimits
from .wp import Report, WPError, describe, verify

log = logging.getLogger(__name__)

FUNC_OUTPUT = "tmp_inferred_source_merged.c"
AUX_OUTPUT = "annotated.c"
STAGES = ("func", "aux", "wp", "all")
CAP_ENV = "MICRODEDUCT_CAP"


class ExitStatus(enum.IntEnum):
    VERIFIED = 0
    FAILED = 1
    UNKNOWN = 2
    INFERENCE_FAILURE = 3
    INPUT_ERROR = 4


@dataclass(frozen=True)
class PipelineConfig:
    input: Path
    stage: str = "all"
    out_dir: Optional[Path] = None  # default: the input's directory
    report_format: str = "text"
    solver: SolverLimits = SolverLimits()
    self_check: bool = False
    oracle_bounds: tuple = oracle.DEFAULT_DOMAIN

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.report_format not in ("text", "json"):
            raise ValueError(f"unknown report format {self.report_format!r}")
        if self.solver.dnf_cap <= 0 or self.solver.node_budget <= 0:
            raise ValueError("solver caps must be positive")

    @property
    def directory(self) -> Path:
        return Path(self.out_dir) if self.out_dir is not None else Path(self.input).parent

    @property
    def report_path(self) -> Path:
        return self.directory / ("report.json" if self.report_format == "json" else "report.txt")


@dataclass
class RunResult:
    status: ExitStatus
    artifacts: dict = field(default_factory=dict)  # stage -> path
    report: Optional[Report] = None
    timings: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)


# --------------------------------------------------------------------------
# Reports


def summary_line(r: Report) -> str:
    n, k = len(r.results), r.verified_count
    if r.status == "verified":
        return f"VERIFIED ({k}/{n} VCs)"
    return f"{r.status.upper()} ({k}/{n} VCs verified)"


def emit_report(r: Report, fmt: str = "text", volatile: bool = True) -> str:
    """Render ``r``; ``volatile=False`` leaves out timings and notes."""
    if fmt == "json":
        doc = {
            "status": r.status,
            "verified": r.verified_count,
            "total": len(r.results),
            "vcs": [
                {
                    "name": x.vc.name,
                    "span": str(x.vc.span),
                    "status": x.status,
                    "countermodel": x.countermodel,
                    "reason": x.reason,
                }
                for x in r.results
            ],
            "warnings": list(r.warnings),
        }
        if volatile:
            doc["timings"] = {k: round(v, 6) for k, v in r.timings.items()}
            doc["notes"] = list(r.notes)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = [describe(x) for x in r.results]
    lines += [f"warning: {w}" for w in r.warnings]
    if volatile:
        lines += [f"note: {n}" for n in r.notes]
        for stage, secs in r.timings.items():
            lines.append(f"time {stage}: {secs:.3f} s")
    lines.append(summary_line(r))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Stages


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def stage_func(source: str, cfg: PipelineConfig, res: RunResult) -> str:
    t0 = time.perf_counter()
    fr = analyze(parse_module(source), FuncInferConfig(solver=cfg.solver))
    res.timings["func"] = time.perf_counter() - t0
    res.notes.extend(n for n in fr.notes if n not in res.notes)
    res.warnings.extend(fr.warnings)
    out = emit_source(fr.module)
    res.artifacts["func"] = _write(cfg.directory / FUNC_OUTPUT, out)
    return out


def stage_aux(source: str, cfg: PipelineConfig, res: RunResult) -> str:
    t0 = time.perf_counter()
    m = infer_auxiliary(parse_module(source))
    res.timings["aux"] = time.perf_counter() - t0
    out = emit_source(m)
    res.artifacts["aux"] = _write(cfg.directory / AUX_OUTPUT, out)
    return out


def stage_wp(source: str, cfg: PipelineConfig, res: RunResult) -> Report:
    m = parse_module(source)
    report = verify(m, cfg.solver)
    res.timings["wp"] = report.timings.get("wp", 0.0)
    if cfg.self_check:
        _self_check(m, cfg, res)
    report.timings = dict(res.timings)
    report.notes = list(res.notes)
    report.warnings = list(dict.fromkeys(res.warnings + report.warnings))
    res.report = report
    res.artifacts["wp"] = _write(cfg.report_path, emit_report(report, cfg.report_format, volatile=False))
    return report


def _self_check(m, cfg: PipelineConfig, res: RunResult) -> None:
    """Cross-check every contract by bounded execution (informational)."""
    for f in m.functions:
        try:
            chk = oracle.check_contract(m, f.name, default=cfg.oracle_bounds)
        except oracle.EnumerationRefused as e:
            res.notes.append(f"self-check {f.name}: skipped ({e})")
            continue
        msg = f"self-check {f.name}: {chk.status} ({chk.checked} runs)"
        if chk.checked == 0:
            msg += " vacuous: no state within the bounds satisfies requires"
        if not chk.holds:
            msg += f" {chk.kind} {chk.detail}"
        res.notes.append(msg)


def _status_of(report: Report) -> ExitStatus:
    return {"verified": ExitStatus.VERIFIED, "failed": ExitStatus.FAILED}.get(report.status, ExitStatus.UNKNOWN)


def run(cfg: PipelineConfig) -> RunResult:
    res = RunResult(ExitStatus.VERIFIED)
    try:
        source = Path(cfg.input).read_text(encoding="utf-8")
    except OSError as e:
        res.status = ExitStatus.INPUT_ERROR
        res.diagnostics.append(f"error: cannot read {cfg.input}: {e.strerror}")
        return res
    try:
        if cfg.stage in ("func", "all"):
            source = stage_func(source, cfg, res)
        if cfg.stage in ("aux", "all"):
            source = stage_aux(source, cfg, res)
        if cfg.stage in ("wp", "all"):
            report = stage_wp(source, cfg, res)
            res.status = _status_of(report)
            if res.status == ExitStatus.FAILED and res.notes:
                res.diagnostics.append("note: inference insufficient (constraints were dropped during inference)")
    except FrontendError as e:
        res.status = ExitStatus.INPUT_ERROR
        res.diagnostics.extend(str(d) for d in e.diagnostics)
    except WPError as e:
        res.status = ExitStatus.INPUT_ERROR
        res.diagnostics.append(f"{e.span}: error: {e}")
    except InferenceFailure as e:
        res.status = ExitStatus.INFERENCE_FAILURE
        res.diagnostics.append(f"error: inference failed: {e}")
    if res.status == ExitStatus.FAILED:
        for x in res.report.results:
            if x.status != "verified":
                res.diagnostics.append(f"{x.vc.span}: {x.vc.name} {x.status}")
    elif res.status == ExitStatus.UNKNOWN:
        res.diagnostics.append("error: verification unknown (solver gave up on some VCs)")
    return res


# --------------------------------------------------------------------------
# CLI


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="microdeduct", description="Infer contracts for MicroC helpers and verify the entry point.")
    g = p.add_mutually_exclusive_group()
    for stage in ("func", "aux", "wp", "all"):
        g.add_argument(f"--{stage}", f"-{stage}", dest="stage", action="store_const", const=stage)
    p.add_argument("--out-dir", type=Path, default=None, help="directory for intermediate files and the report")
    p.add_argument("--report", choices=("text", "json"), default="text", help="report format")
    p.add_argument("--cap", type=int, default=None, help=f"solver DNF cube cap (env {CAP_ENV})")
    p.add_argument("--self-check", action="store_true", help="also check contracts by bounded execution")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("file", type=Path)
    return p


def config_from_args(args) -> PipelineConfig:
    cap = args.cap
    if cap is None and os.environ.get(CAP_ENV):
        cap = int(os.environ[CAP_ENV])
    limits = SolverLimits()
    if cap is not None:
        limits = replace(limits, dnf_cap=cap)
    return PipelineConfig(
        input=args.file,
        stage=args.stage or "all",
        out_dir=args.out_dir,
        report_format=args.report,
        solver=limits,
        self_check=args.self_check,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return int(ExitStatus.INPUT_ERROR)
    res = run(cfg)
    for stage, path in res.artifacts.items():
        print(f"{stage}: wrote {path}")
    for w in res.warnings:
        print(f"warning: {w}")
    if res.report is not None:
        sys.stdout.write(emit_report(res.report, "text", volatile=True))
    else:
        for n in res.notes:
            print(f"note: {n}")
        for stage, secs in res.timings.items():
            print(f"time {stage}: {secs:.3f} s")
    for d in res.diagnostics:
        print(d, file=sys.stderr)
    return int(res.status)


if __name__ == "__main__":
    sys.exit(main())
