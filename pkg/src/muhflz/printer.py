"""Pretty-printer for the HES text format.

Deterministic: the same Hes always prints to the same bytes, and the output
re-parses to a structurally identical Hes.  Internal absolute-value nodes
are refused -- they must never reach a backend or a file.
"""

from __future__ import annotations

from .syntax import (
    Abs, And, App, AppInt, Exists, Forall, Formula, Ge, Hes, IntAbs, IntExpr,
    IntVar, Lit, Mu, Nu, Or, Plus, Sign, Times, Var,
)


class PrintError(Exception):
    pass


# formula precedence levels: binder 0, \/ 1, /\ 2, atom/app 3
_BINDER, _OR, _AND, _APP = 0, 1, 2, 3


def _fmt_formula(f: Formula, ctx: int) -> str:
    match f:
        case Var(name):
            return name
        case Or(l, r):
            s = f"{_fmt_formula(l, _OR)} \\/ {_fmt_formula(r, _OR + 1)}"
            return f"({s})" if ctx > _OR else s
        case And(l, r):
            s = f"{_fmt_formula(l, _AND)} /\\ {_fmt_formula(r, _AND + 1)}"
            return f"({s})" if ctx > _AND else s
        case Abs(param, _, body):
            s = f"\\{param}. {_fmt_formula(body, _BINDER)}"
            return f"({s})" if ctx > _BINDER else s
        case Forall(var, body):
            s = f"forall {var}. {_fmt_formula(body, _BINDER)}"
            return f"({s})" if ctx > _BINDER else s
        case Exists(var, body):
            s = f"exists {var}. {_fmt_formula(body, _BINDER)}"
            return f"({s})" if ctx > _BINDER else s
        case App(fn, arg):
            s = f"{_fmt_formula(fn, _APP)} {_fmt_formula(arg, _APP + 1)}"
            return f"({s})" if ctx > _APP else s
        case AppInt(fn, arg):
            s = f"{_fmt_formula(fn, _APP)} {_fmt_arg(arg)}"
            return f"({s})" if ctx > _APP else s
        case Ge(l, r):
            s = f"{_fmt_int(l, _PLUS)} >= {_fmt_int(r, _PLUS)}"
            return f"({s})" if ctx > _APP else s
        case Mu() | Nu():
            raise PrintError(
                "fixpoint binders have no concrete syntax; convert to an HES first"
            )
    raise PrintError(f"cannot print {f!r}")


# int precedence: + 0, * 1, atom 2
_PLUS, _TIMES, _IATOM = 0, 1, 2


def _fmt_int(e: IntExpr, ctx: int) -> str:
    match e:
        case Lit(v):
            s = str(v)
            return f"({s})" if v < 0 and ctx >= _IATOM else s
        case IntVar(name):
            return name
        case Plus(l, Times(Lit(-1), r)):
            s = f"{_fmt_int(l, _PLUS)} - {_fmt_int(r, _TIMES + 1)}"
            return f"({s})" if ctx > _PLUS else s
        case Plus(l, Lit(v)) if v < 0:
            s = f"{_fmt_int(l, _PLUS)} - {-v}"
            return f"({s})" if ctx > _PLUS else s
        case Plus(l, r):
            s = f"{_fmt_int(l, _PLUS)} + {_fmt_int(r, _TIMES)}"
            return f"({s})" if ctx > _PLUS else s
        case Times(l, r):
            s = f"{_fmt_int(l, _TIMES)} * {_fmt_int(r, _IATOM)}"
            return f"({s})" if ctx > _TIMES else s
        case IntAbs():
            raise PrintError("absolute-value node survived to printing")
    raise PrintError(f"cannot print {e!r}")


def _fmt_arg(e: IntExpr) -> str:
    """Integer expression in application-argument position: anything but a
    plain variable or non-negative literal needs parentheses."""
    match e:
        case IntVar(name):
            return name
        case Lit(v) if v >= 0:
            return str(v)
        case _:
            return f"({_fmt_int(e, _PLUS)})"


def print_formula(f: Formula) -> str:
    return _fmt_formula(f, _BINDER)


def print_hes(h: Hes) -> str:
    lines = [f"Main =v {print_formula(h.entry)};"]
    for eq in h.equations:
        params = "".join(f" {p}" for p, _ in eq.params)
        sign = "=u" if eq.sign is Sign.MU else "=v"
        lines.append(f"{eq.name}{params} {sign} {print_formula(eq.body)};")
    return "\n".join(lines) + "\n"
