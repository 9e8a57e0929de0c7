"""The refinement loop: approximate, solve, refine -- with a prover and a
disprover racing in fair round-robin.

The prover approximates the input; the disprover approximates its De
Morgan dual.  A 'valid' verdict from the prover decides Valid; one from
the disprover decides Invalid.  'invalid' backend verdicts on an
approximation are never conclusive (the approximation only
under-approximates) and just advance that side's iteration.  Tag
derivations are computed once per side and reused across parameter values,
so successive approximations differ only in the coefficients.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Optional

from .backend import BackendSpec, BackendVerdict, External, solve
from .convert import formula_to_hes, hes_to_formula
from .eval import IterationCap, RangeEscape
from .syntax import Hes, contains_mu
from .tags import TagDerivation, infer_tags_formula
from .transform import (
    ApproxParams, desugar_quantifiers, dual_hes, eliminate_abs,
    eta_expand_mu_partials, transform_formula,
)
from .typecheck import typecheck


@dataclass(frozen=True)
class Schedule:
    steps: tuple[ApproxParams, ...]

    def __len__(self) -> int:
        return len(self.steps)


def default_schedule(max_iterations: int) -> Schedule:
    """The standard parameter schedule: an explicit four-row prefix, then
    all four coefficients double every two iterations while the counter
    count keeps alternating between 1 and 2."""
    if max_iterations < 1:
        raise ValueError("need at least one iteration")
    steps = []
    prefix = [
        ApproxParams(1, 2, 1, 1, 1),
        ApproxParams(1, 2, 1, 1, 2),
        ApproxParams(1, 16, 1, 1, 1),
        ApproxParams(1, 16, 1, 1, 2),
    ]
    steps.extend(prefix[:max_iterations])
    i = len(steps)
    while len(steps) < max_iterations:
        pair = (i - 4) // 2 + 1  # how many doublings past the prefix
        scale = 2 ** pair
        steps.append(
            ApproxParams(scale, 16 * scale, scale, scale, 1 if i % 2 == 0 else 2)
        )
        i += 1
    return Schedule(tuple(steps))


@dataclass(frozen=True)
class IterationRecord:
    side: str  # "prover" | "disprover"
    params: ApproxParams
    verdict: BackendVerdict


@dataclass(frozen=True)
class VerdictReport:
    outcome: str  # "valid" | "invalid" | "unknown"
    winning_side: str  # "prover" | "disprover" | "none"
    iterations: tuple[IterationRecord, ...]
    total_elapsed_s: float
    reason: str = ""


class _Side:
    def __init__(self, name: str, h: Hes, *, all_f: bool, desugar: bool):
        self.name = name
        self.formula = hes_to_formula(h)
        if desugar:
            self.formula = desugar_quantifiers(self.formula)
        self.formula = eta_expand_mu_partials(self.formula)
        self.tags: TagDerivation = infer_tags_formula(self.formula, all_f=all_f)
        self.mu_free = not contains_mu(self.formula)
        self.exhausted = False
        self.attempted_params: set = set()

    def approximate(self, params: ApproxParams, desugar: bool) -> Hes:
        g = transform_formula(self.formula, self.tags, params)
        g = eliminate_abs(g)
        if desugar:
            g = desugar_quantifiers(g)
        return formula_to_hes(g)


def verify(
    h: Hes,
    spec: BackendSpec,
    schedule: Optional[Schedule] = None,
    deadline_s: float = 60.0,
    *,
    mode: str = "both",
    no_extra_args: bool = False,
    counters_override: Optional[int] = None,
) -> VerdictReport:
    """Race prover and disprover over the schedule (strict round-robin,
    prover first).  The first 'valid' backend verdict decides; exhausting
    the schedule or the deadline yields Unknown."""

    start = time.monotonic()
    hard_deadline = start + deadline_s
    schedule = schedule if schedule is not None else default_schedule(8)
    typed = typecheck(h)
    desugar = isinstance(spec, External) and not spec.supports_quantifiers

    sides: list[_Side] = []
    if mode in ("prove", "both"):
        sides.append(_Side("prover", typed, all_f=no_extra_args, desugar=desugar))
    if mode in ("disprove", "both"):
        sides.append(_Side("disprover", dual_hes(typed), all_f=no_extra_args, desugar=desugar))
    if not sides:
        raise ValueError(f"bad mode {mode!r}")

    records: list[IterationRecord] = []

    def report(outcome: str, winner: str, reason: str = "") -> VerdictReport:
        return VerdictReport(
            outcome, winner, tuple(records), time.monotonic() - start, reason
        )

    for i, params in enumerate(schedule.steps):
        if no_extra_args or counters_override is not None:
            k = 1 if no_extra_args else counters_override
            params = ApproxParams(params.c, params.d, params.c_extra, params.d_extra, k)
        for side in sides:
            if side.exhausted:
                continue
            now = time.monotonic()
            if now >= hard_deadline:
                return report("unknown", "none", "timeout")
            remaining_steps = len(schedule.steps) - i
            budget = (hard_deadline - now) / (2 * remaining_steps)
            step_deadline = min(now + max(budget, 0.05), hard_deadline)

            if side.mu_free and side.attempted_params:
                side.exhausted = True
                continue
            key = params if not side.mu_free else "const"
            if key in side.attempted_params:
                records.append(
                    IterationRecord(side.name, params, BackendVerdict("unknown", "duplicate parameters", 0.0))
                )
                continue
            side.attempted_params.add(key)

            try:
                approx = side.approximate(params, desugar)
            except (IterationCap, RangeEscape) as e:
                records.append(
                    IterationRecord(side.name, params, BackendVerdict("unknown", f"transform failed: {e}", 0.0))
                )
                continue
            verdict = solve(spec, approx, deadline=step_deadline)
            records.append(IterationRecord(side.name, params, verdict))
            if verdict.outcome == "valid":
                if side.name == "prover":
                    return report("valid", "prover")
                return report("invalid", "disprover")
        if all(s.exhausted for s in sides):
            break
    reason = "timeout" if time.monotonic() >= hard_deadline else "schedule exhausted"
    return report("unknown", "none", reason)


# ---------------------------------------------------------------------------
# Report rendering


def emit_report(r: VerdictReport, format: str = "text") -> str:
    if format == "json":
        payload = {
            "outcome": r.outcome,
            "winning_side": r.winning_side,
            "reason": r.reason,
            "total_elapsed_s": r.total_elapsed_s,
            "iterations": [
                {
                    "side": it.side,
                    "params": {
                        "c": it.params.c,
                        "d": it.params.d,
                        "c_extra": it.params.c_extra,
                        "d_extra": it.params.d_extra,
                        "counters": it.params.counters,
                    },
                    "verdict": {
                        "outcome": it.verdict.outcome,
                        "detail": it.verdict.detail,
                        "elapsed_s": it.verdict.elapsed_s,
                    },
                }
                for it in r.iterations
            ],
        }
        return json.dumps(payload, indent=2)
    if format != "text":
        raise ValueError(f"unknown report format {format!r}")
    lines = [r.outcome]
    if r.outcome == "unknown" and r.reason:
        lines.append(f"reason: {r.reason}")
    for n, it in enumerate(r.iterations, 1):
        p = it.params
        lines.append(
            f"  [{n}] {it.side}: c={p.c} d={p.d} c'={p.c_extra} d'={p.d_extra} "
            f"k={p.counters} -> {it.verdict.outcome}"
            + (f" ({it.verdict.detail})" if it.verdict.detail else "")
        )
    lines.append(f"elapsed: {r.total_elapsed_s:.3f}s")
    return "\n".join(lines) + "\n"


def report_from_json(text: str) -> VerdictReport:
    data = json.loads(text)
    its = tuple(
        IterationRecord(
            it["side"],
            ApproxParams(
                it["params"]["c"],
                it["params"]["d"],
                it["params"]["c_extra"],
                it["params"]["d_extra"],
                it["params"]["counters"],
            ),
            BackendVerdict(
                it["verdict"]["outcome"],
                it["verdict"]["detail"],
                it["verdict"]["elapsed_s"],
            ),
        )
        for it in data["iterations"]
    )
    return VerdictReport(
        data["outcome"],
        data["winning_side"],
        its,
        data["total_elapsed_s"],
        data.get("reason", ""),
    )
