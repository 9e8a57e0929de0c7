"""Bounded-domain reference evaluator for HFL(Z).

Semantics over a finite integer window [lo, hi]:

* arithmetic and comparisons are exact over Z;
* quantifiers range over the window;
* function spaces are the monotone maps over window-enumerated arguments,
  materialized as tables when a value has to be enumerated or compared;
* fixpoints are computed by local (demand-driven) Kleene iteration: only
  the argument tuples actually queried get table entries, so higher-order
  fixpoints whose full argument space is astronomically large stay cheap
  as long as the reachable configuration space is small.

Where the window boundary is crossed:

* indexing a materialized table outside the window raises ``RangeEscape``
  in strict mode (clamping mode clamps to the nearest bound);
* an out-of-window argument to a least-fixpoint predicate evaluates to
  False -- the recursion is descending out of the window and a least
  fixpoint truncates at bottom.  The greatest-fixpoint side keeps the
  escape: truncating at top would let a bounded run report validity the
  unbounded semantics may not have.

Validity verdicts are therefore relative to the window; no claim about
unbounded Z-validity is made here.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .syntax import (
    Abs, And, App, AppInt, Arrow, Exists, Forall, Formula, Ge, INT, IntAbs,
    IntExpr, IntType, IntVar, Lit, Mu, Nu, Or, Plus, PROP, PropType,
    SimpleType, Times, Var, arg_types, arrow, free_vars,
)


class RangeEscape(Exception):
    """A value crossed the finite-domain boundary in strict mode."""


class IterationCap(Exception):
    """Defensive resource bound; carries a reason ('step-cap',
    'enumeration', 'deadline', ...)."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class Domain:
    lo: int
    hi: int
    strict: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty domain")

    def values(self) -> range:
        return range(self.lo, self.hi + 1)


class BoundedResult(Enum):
    VALID = "valid"
    INVALID = "invalid"
    RANGE_ESCAPE = "range_escape"


class _Esc:
    """Sentinel for a table entry whose computation left the window.  Only
    appears in tables used as identity keys; applying a value at such an
    entry raises RangeEscape."""

    __slots__ = ()

    def __repr__(self):
        return "<esc>"


_ESC = _Esc()


# ---------------------------------------------------------------------------
# Semantic values


class Table:
    """Canonical, extensional function value: one entry per element of the
    enumerated argument type, in enumeration order.  Interned, so equality
    is identity."""

    __slots__ = ("ty", "arg_ty", "entries", "_hash")

    def __init__(self, ty: Arrow, entries: tuple):
        self.ty = ty
        self.arg_ty = ty.arg
        self.entries = entries
        self._hash = hash((id(ty), entries))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other

    def __repr__(self):
        return f"Table({self.ty}, {self.entries!r})"


class Closure:
    __slots__ = ("param", "body", "env", "ty", "_forced")

    def __init__(self, param, body, env, ty):
        self.param = param
        self.body = body
        self.env = env
        self.ty = ty
        self._forced = None


class FixPartial:
    __slots__ = ("inst", "args")

    def __init__(self, inst: "_FixInstance", args: tuple):
        self.inst = inst
        self.args = args

    @property
    def ty(self) -> SimpleType:
        return arrow(self.inst.param_tys[len(self.args):], PROP)


SemValue = Union[bool, int, Table, Closure, FixPartial]


# ---------------------------------------------------------------------------
# Enumeration of types over a window (shared across evaluations)

_ENUM_CACHE: dict = {}
_INTERN: dict = {}

_ENUM_LIMIT = 1 << 15
_ENUM_ARG_LIMIT = 600
_TOO_BIG = object()


def _tkey(ty: SimpleType) -> str:
    return str(ty)


def intern_table(ty: Arrow, dom: Domain, entries: tuple) -> Table:
    key = (_tkey(ty), dom.lo, dom.hi, entries)
    t = _INTERN.get(key)
    if t is None:
        t = Table(ty, entries)
        _INTERN[key] = t
    return t


def value_leq(ty: SimpleType, a, b) -> bool:
    """The pointwise order of the semantic lattice (Int is discrete)."""
    if isinstance(ty, IntType):
        return a == b
    if isinstance(ty, PropType):
        return (not a) or b
    assert isinstance(ty, Arrow)
    return all(value_leq(ty.ret, x, y) for x, y in zip(a.entries, b.entries))


def enumerate_type(ty: SimpleType, dom: Domain) -> list:
    """All semantic values of ``ty`` over the window; function types are
    restricted to monotone tables (all maps are monotone when the argument
    order is discrete)."""
    key = (_tkey(ty), dom.lo, dom.hi)
    cached = _ENUM_CACHE.get(key)
    if cached is _TOO_BIG:
        raise IterationCap("enumeration")
    if cached is not None:
        return cached
    if isinstance(ty, IntType):
        out: list = list(dom.values())
    elif isinstance(ty, PropType):
        out = [False, True]
    else:
        assert isinstance(ty, Arrow)
        try:
            args = enumerate_type(ty.arg, dom)
            if len(args) > _ENUM_ARG_LIMIT:
                raise IterationCap("enumeration")
            rets = enumerate_type(ty.ret, dom)
            if isinstance(ty.arg, IntType) and len(rets) ** len(args) > _ENUM_LIMIT:
                # discrete argument order: the count is exact, fail fast
                raise IterationCap("enumeration")
        except IterationCap:
            _ENUM_CACHE[key] = _TOO_BIG
            raise
        n = len(args)
        below = [
            [j for j in range(n) if j != i and value_leq(ty.arg, args[j], args[i])]
            for i in range(n)
        ]
        above = [
            [j for j in range(n) if j != i and value_leq(ty.arg, args[i], args[j])]
            for i in range(n)
        ]
        out = []
        entries: list = [None] * n

        def assign(i: int):
            if len(out) > _ENUM_LIMIT:
                raise IterationCap("enumeration")
            if i == n:
                out.append(intern_table(ty, dom, tuple(entries)))
                return
            for r in rets:
                ok = all(
                    entries[j] is None or value_leq(ty.ret, entries[j], r)
                    for j in below[i]
                ) and all(
                    entries[j] is None or value_leq(ty.ret, r, entries[j])
                    for j in above[i]
                )
                if ok:
                    entries[i] = r
                    assign(i + 1)
                    entries[i] = None

        try:
            assign(0)
        except IterationCap:
            _ENUM_CACHE[key] = _TOO_BIG
            raise
    _ENUM_CACHE[key] = out
    return out


def enum_index(ty: SimpleType, dom: Domain) -> dict:
    key = ("idx", _tkey(ty), dom.lo, dom.hi)
    idx = _ENUM_CACHE.get(key)
    if idx is None:
        idx = {v: i for i, v in enumerate(enumerate_type(ty, dom))}
        _ENUM_CACHE[key] = idx
    return idx


def is_monotone_table(t: Table, dom: Domain) -> bool:
    ty = t.ty
    args = enumerate_type(ty.arg, dom)
    n = len(args)
    for i in range(n):
        for j in range(n):
            if value_leq(ty.arg, args[i], args[j]) and not value_leq(
                ty.ret, t.entries[i], t.entries[j]
            ):
                return False
    return True


# ---------------------------------------------------------------------------
# Evaluation context


class _EvalContext:
    def __init__(
        self,
        dom: Domain,
        step_limit: int = 20_000_000,
        deadline: Optional[float] = None,
    ):
        self.dom = dom
        self.steps = 0
        self.step_limit = step_limit
        self.deadline = deadline
        self.instances: dict = {}
        self.forced_partials: dict = {}
        self._fv_cache: dict[int, frozenset] = {}
        self._ty_cache: dict[int, SimpleType] = {}

    def tick(self):
        self.steps += 1
        if self.steps >= self.step_limit:
            raise IterationCap("step-cap")
        if self.deadline is not None and self.steps % 4096 == 0:
            if time.monotonic() > self.deadline:
                raise IterationCap("deadline")

    def fv(self, f: Formula) -> frozenset:
        got = self._fv_cache.get(id(f))
        if got is None:
            got = frozenset(free_vars(f))
            self._fv_cache[id(f)] = got
        return got

    def annotate_types(self, f: Formula, env: dict[str, SimpleType]) -> SimpleType:
        """Record the simple type of every subterm (binders must carry
        annotations, i.e. the formula went through typecheck)."""
        match f:
            case Var(name):
                ty = env[name]
            case Or(l, r) | And(l, r):
                self.annotate_types(l, env)
                self.annotate_types(r, env)
                ty = PROP
            case Ge():
                ty = PROP
            case Forall(var, body) | Exists(var, body):
                self.annotate_types(body, {**env, var: INT})
                ty = PROP
            case Abs(param, pty, body):
                if pty is None:
                    raise ValueError("evaluator needs typed binders; run typecheck")
                ty = Arrow(pty, self.annotate_types(body, {**env, param: pty}))
            case Mu(name, xty, body) | Nu(name, xty, body):
                if xty is None:
                    raise ValueError("evaluator needs typed binders; run typecheck")
                self.annotate_types(body, {**env, name: xty})
                ty = xty
            case App(fn, arg):
                fty = self.annotate_types(fn, env)
                self.annotate_types(arg, env)
                assert isinstance(fty, Arrow), f"application of {fty}"
                ty = fty.ret
            case AppInt(fn, _):
                fty = self.annotate_types(fn, env)
                assert isinstance(fty, Arrow), f"application of {fty}"
                ty = fty.ret
            case _:
                raise TypeError(f"not a Formula: {f!r}")
        self._ty_cache[id(f)] = ty
        return ty

    def node_type(self, f: Formula) -> SimpleType:
        return self._ty_cache[id(f)]

    # -- window crossings ----------------------------------------------------

    def clip_int(self, n: int) -> int:
        if self.dom.lo <= n <= self.dom.hi:
            return n
        if self.dom.strict:
            raise RangeEscape(f"{n} outside [{self.dom.lo}, {self.dom.hi}]")
        return min(max(n, self.dom.lo), self.dom.hi)

    # -- canonical keys -------------------------------------------------------

    def reaches_inflight(self, v) -> bool:
        if isinstance(v, Closure):
            return any(self.reaches_inflight(w) for w in v.env.values())
        if isinstance(v, FixPartial):
            if v.inst.mid_solve:
                return True
            return any(self.reaches_inflight(w) for w in v.inst.env.values()) or any(
                self.reaches_inflight(w) for w in v.args
            )
        return False

    def force_table(self, v, ty: Optional[SimpleType] = None, *, for_key: bool = False) -> Table:
        """Extensional table of a function value.  With ``for_key`` an
        entry whose computation escapes the window is recorded as a
        sentinel (two values escaping at the same points are identified);
        without it the escape propagates."""
        if isinstance(v, Table):
            return v
        cache_key = None
        if isinstance(v, Closure):
            got = v._forced.get(for_key) if v._forced else None
            if got is not None:
                return got
            # closures are rebuilt on every body evaluation: cache by content
            cache_key = (
                id(v.body),
                for_key,
                tuple((n, self.config_key(w)) for n, w in sorted(v.env.items())),
            )
            got = self.forced_partials.get(cache_key)
            if got is not None:
                if v._forced is None:
                    v._forced = {}
                v._forced[for_key] = got
                return got
        elif isinstance(v, FixPartial):
            cache_key = (id(v.inst), for_key, tuple(self.config_key(a) for a in v.args))
            got = self.forced_partials.get(cache_key)
            if got is not None:
                return got
        ty = ty if ty is not None else v.ty
        assert isinstance(ty, Arrow), f"cannot force {ty}"
        entries = []
        for a in enumerate_type(ty.arg, self.dom):
            if for_key:
                try:
                    entries.append(self.config_key(apply_value(self, v, a), ty.ret))
                except RangeEscape:
                    entries.append(_ESC)
            else:
                entries.append(self.config_key(apply_value(self, v, a), ty.ret))
        t = intern_table(ty, self.dom, tuple(entries))
        if isinstance(v, Closure):
            if v._forced is None:
                v._forced = {}
            v._forced[for_key] = t
        if cache_key is not None:
            self.forced_partials[cache_key] = t
        return t

    def config_key(self, v, ty: Optional[SimpleType] = None):
        """Identity of a value for fixpoint tables and memo keys.  Values
        not touching an in-flight fixpoint are forced extensionally; the
        rest are keyed by their syntax and environment."""
        if isinstance(v, bool):
            return v
        if isinstance(v, int):
            return self.clip_int(v)
        if isinstance(v, Table):
            return v
        if self.reaches_inflight(v):
            if isinstance(v, Closure):
                return (
                    "clo",
                    id(v.body),
                    tuple((n, self.config_key(v.env[n])) for n in sorted(v.env)),
                )
            assert isinstance(v, FixPartial)
            return ("fixp", id(v.inst), tuple(self.config_key(a) for a in v.args))
        return self.force_table(v, ty, for_key=True)

    def versions(self, v, acc: set):
        if isinstance(v, Closure):
            for w in v.env.values():
                self.versions(w, acc)
        elif isinstance(v, FixPartial):
            if v.inst.mid_solve:
                acc.add((id(v.inst), v.inst.version))
            for w in v.inst.env.values():
                self.versions(w, acc)
            for w in v.args:
                self.versions(w, acc)

    def instance(self, node, env: dict) -> "_FixInstance":
        vers: set = set()
        keys = []
        for n in sorted(env):
            keys.append((n, self.config_key(env[n])))
            self.versions(env[n], vers)
        memo_key = (id(node), tuple(keys), tuple(sorted(vers)))
        inst = self.instances.get(memo_key)
        if inst is None:
            inst = _FixInstance(self, node, env)
            self.instances[memo_key] = inst
        return inst


# ---------------------------------------------------------------------------
# Fixpoint instances


class _FixInstance:
    __slots__ = (
        "ctx", "node", "env", "sign", "name", "body", "param_tys", "arity",
        "recursive", "asg", "argvals", "version", "mid_solve",
    )

    def __init__(self, ctx: _EvalContext, node, env: dict):
        self.ctx = ctx
        self.node = node
        self.env = env
        self.sign = "mu" if isinstance(node, Mu) else "nu"
        self.name = node.name
        self.body = node.body
        self.param_tys = arg_types(node.ty)
        self.arity = len(self.param_tys)
        self.recursive = node.name in ctx.fv(node.body)
        self.asg: dict = {}
        self.argvals: dict = {}
        self.version = 0
        self.mid_solve = False

    def init_value(self) -> bool:
        return self.sign == "nu"

    def full_query(self, values: tuple) -> bool:
        try:
            key = tuple(
                self.ctx.config_key(v, ty) for v, ty in zip(values, self.param_tys)
            )
        except RangeEscape:
            if self.sign == "mu":
                # descending out of the window: a least fixpoint bottoms out
                return False
            raise
        # stored entries whose arguments capture a fixpoint that is still
        # being solved must not survive that fixpoint's updates
        vers: set = set()
        for v in values:
            self.ctx.versions(v, vers)
        vers = {(i, n) for (i, n) in vers if i != id(self)}
        if vers:
            key = key + (tuple(sorted(vers)),)
        if not self.recursive:
            if key not in self.asg:
                self.argvals[key] = values
                self.asg[key] = self.eval_entry(key)
            return self.asg[key]
        if key not in self.asg:
            self.asg[key] = self.init_value()
            self.argvals[key] = values
            self.version += 1
        if self.mid_solve:
            return self.asg[key]
        self.solve()
        return self.asg[key]

    def eval_entry(self, key) -> bool:
        ctx = self.ctx
        env = self.env
        if self.recursive:
            # the recursive occurrence: applied occurrences query through a
            # partial; a nullary occurrence is just the current iterate
            self_ref = self.asg[key] if self.arity == 0 else FixPartial(self, ())
            env = {**env, self.name: self_ref}
        v = eval_formula(ctx, self.body, env)
        for a in self.argvals[key]:
            v = apply_value(ctx, v, a)
        assert isinstance(v, bool)
        return v

    def solve(self):
        self.mid_solve = True
        try:
            passes = 0
            while True:
                passes += 1
                if passes > 4 * len(self.asg) + 64:
                    raise IterationCap("fixpoint-passes")
                if len(self.asg) > 300_000:
                    raise IterationCap("fixpoint-keys")
                changed = False
                count_before = len(self.asg)
                for key in list(self.asg):
                    self.ctx.tick()
                    nv = self.eval_entry(key)
                    if nv != self.asg[key]:
                        self.asg[key] = nv
                        self.version += 1
                        changed = True
                if len(self.asg) != count_before:
                    changed = True
                if not changed:
                    return
        finally:
            self.mid_solve = False


# ---------------------------------------------------------------------------
# The evaluator proper


def apply_value(ctx: _EvalContext, f, a):
    ctx.tick()
    # clamping mode is a total finite-domain semantics: integers clamp to
    # the window when bound (strict mode keeps arithmetic exact instead
    # and escapes at representation boundaries)
    if not ctx.dom.strict and isinstance(a, int) and not isinstance(a, bool):
        a = ctx.clip_int(a)
    if isinstance(f, Closure):
        env = dict(f.env)
        env[f.param] = a
        return eval_formula(ctx, f.body, env)
    if isinstance(f, FixPartial):
        args = f.args + (a,)
        if len(args) == f.inst.arity:
            return f.inst.full_query(args)
        return FixPartial(f.inst, args)
    if isinstance(f, Table):
        if isinstance(a, bool):
            idx = 1 if a else 0
        elif isinstance(a, int):
            idx = ctx.clip_int(a) - ctx.dom.lo
        else:
            t = ctx.config_key(a, f.arg_ty)
            idx = enum_index(f.arg_ty, ctx.dom).get(t)
            if idx is None:
                raise RangeEscape("argument outside the enumerated universe")
        entry = f.entries[idx]
        if entry is _ESC:
            raise RangeEscape("table entry left the window")
        return entry
    raise TypeError(f"cannot apply {f!r}")


def eval_int(ctx: _EvalContext, e: IntExpr, env: dict) -> int:
    match e:
        case Lit(v):
            return v
        case IntVar(name):
            v = env[name]
            assert isinstance(v, int)
            return v
        case Plus(l, r):
            return eval_int(ctx, l, env) + eval_int(ctx, r, env)
        case Times(l, r):
            return eval_int(ctx, l, env) * eval_int(ctx, r, env)
        case IntAbs(a):
            return abs(eval_int(ctx, a, env))
    raise TypeError(f"not an IntExpr: {e!r}")


def eval_formula(ctx: _EvalContext, f: Formula, env: dict):
    ctx.tick()
    match f:
        case Var(name):
            return env[name]
        case Or(l, r):
            if eval_formula(ctx, l, env) is True:
                return True
            return eval_formula(ctx, r, env) is True
        case And(l, r):
            if eval_formula(ctx, l, env) is False:
                return False
            return eval_formula(ctx, r, env) is True
        case Ge(l, r):
            return eval_int(ctx, l, env) >= eval_int(ctx, r, env)
        case Forall(var, body):
            env2 = dict(env)
            for n in ctx.dom.values():
                env2[var] = n
                if eval_formula(ctx, body, env2) is False:
                    return False
            return True
        case Exists(var, body):
            env2 = dict(env)
            for n in ctx.dom.values():
                env2[var] = n
                if eval_formula(ctx, body, env2) is True:
                    return True
            return False
        case Abs(param, _, body):
            names = ctx.fv(body) - {param}
            return Closure(param, body, {n: env[n] for n in names}, ctx.node_type(f))
        case App(fn, arg):
            fv = eval_formula(ctx, fn, env)
            av = eval_formula(ctx, arg, env)
            return apply_value(ctx, fv, av)
        case AppInt(fn, arg):
            fv = eval_formula(ctx, fn, env)
            return apply_value(ctx, fv, eval_int(ctx, arg, env))
        case Mu() | Nu():
            names = ctx.fv(f)
            inst = ctx.instance(f, {n: env[n] for n in names})
            if inst.arity == 0:
                return inst.full_query(())
            return FixPartial(inst, ())
    raise TypeError(f"not a Formula: {f!r}")


# ---------------------------------------------------------------------------
# Public API


def make_context(
    f: Formula,
    dom: Domain,
    env_types: Optional[dict[str, SimpleType]] = None,
    *,
    step_limit: int = 20_000_000,
    deadline: Optional[float] = None,
) -> _EvalContext:
    ctx = _EvalContext(dom, step_limit=step_limit, deadline=deadline)
    ctx.annotate_types(f, dict(env_types) if env_types else {})
    return ctx


def evaluate(
    f: Formula,
    env: Optional[dict] = None,
    dom: Domain = Domain(-4, 4),
    *,
    env_types: Optional[dict[str, SimpleType]] = None,
    step_limit: int = 20_000_000,
    deadline: Optional[float] = None,
) -> SemValue:
    """Denotation of ``f`` over the window.  Prop results are bools, Int
    results ints, predicate results canonical ``Table``s."""

    if env and env_types is None:
        env_types = {}
        for k, v in env.items():
            if isinstance(v, bool):
                env_types[k] = PROP
            elif isinstance(v, int):
                env_types[k] = INT
            elif isinstance(v, Table):
                env_types[k] = v.ty
            else:
                raise ValueError(f"cannot infer a type for env value {k}")
    ctx = make_context(f, dom, env_types, step_limit=step_limit, deadline=deadline)
    v = eval_formula(ctx, f, dict(env) if env else {})
    if isinstance(v, (bool, int, Table)):
        return v
    return ctx.force_table(v)


def check_validity_bounded(
    f: Formula,
    dom: Domain,
    *,
    step_limit: int = 20_000_000,
    deadline: Optional[float] = None,
) -> BoundedResult:
    """Valid iff the closed Prop formula evaluates to true over the window.
    RangeEscape is reported as its own outcome; callers must treat it as
    inconclusive, never as Invalid."""

    try:
        v = evaluate(f, None, dom, step_limit=step_limit, deadline=deadline)
    except RangeEscape:
        return BoundedResult.RANGE_ESCAPE
    assert isinstance(v, bool)
    return BoundedResult.VALID if v else BoundedResult.INVALID
