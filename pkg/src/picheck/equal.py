"""Weak-head normalization, definitional equality and unification."""
from __future__ import annotations

from typing import Iterable

from picheck.environment import CheckError, Context, ErrorClass, UnificationFailure
from picheck.syntax import (
    REL,
    Ann,
    App,
    Arg,
    Case,
    Contra,
    DataCon,
    Definition,
    Epsilon,
    Lam,
    Let,
    LetPair,
    LitUnit,
    Name,
    PatCon,
    Pattern,
    PatVar,
    Pi,
    Pos,
    Prod,
    Refl,
    Subst,
    Term,
    TrustMe,
    TyCon,
    TyEq,
    TySigma,
    TyType,
    TyUnit,
    Var,
    aeq,
    fresh,
    instantiate,
    pattern_vars,
    same_shape,
    substitute,
    unbind2,
)

_STUCK = object()


def _peel(t: Term) -> Term:
    while isinstance(t, (Pos, Ann)):
        t = t.term
    return t


def whnf(ctx: Context, t: Term) -> Term:
    """Reduce ``t`` until its head is exposed."""
    session = ctx.session
    if session.aeq_only:
        return _peel(t)
    while True:
        match t:
            case Pos(_, a) | Ann(a, _):
                t = a
            case Var(x):
                if not session.unfold:
                    return t
                d = ctx.lookup_def(x)
                if d is None:
                    return t
                ctx.tick()
                t = d
            case App(f, arg):
                head = whnf(ctx, f)
                if isinstance(head, Lam):
                    ctx.tick()
                    t = instantiate(head.bind, arg.term)
                    continue
                return t if head is f else App(head, arg)
            case Let(rhs, b):
                ctx.tick()
                t = instantiate(b, rhs)
            case LetPair(s, b2):
                ws = whnf(ctx, s)
                if not isinstance(ws, Prod):
                    return LetPair(ws, b2)
                ctx.tick()
                t = substitute(b2.body, {b2.bound1: ws.first, b2.bound2: ws.second})
            case Subst(body, proof):
                wp = whnf(ctx, proof)
                if not isinstance(wp, Refl):
                    return Subst(body, wp)
                ctx.tick()
                t = body
            case Case(s, matches):
                ws = whnf(ctx, s)
                for m in matches:
                    r = match_pattern(ctx, m.pattern, ws)
                    if r is _STUCK:
                        return Case(ws, matches)
                    if r is not None:
                        ctx.tick()
                        t = substitute(m.body, r)
                        break
                else:
                    return Case(ws, matches)
            case _:
                return t


def match_pattern(ctx: Context, pat: Pattern, t: Term):
    """Match a value against a pattern.

    Returns a substitution, ``None`` when the pattern cannot match, or the
    stuck marker when the value is not yet a constructor.
    """
    if isinstance(pat, PatVar):
        return {pat.name: t}
    w = whnf(ctx, t)
    if not isinstance(w, DataCon):
        return _STUCK
    if w.name != pat.con or len(w.args) != len(pat.args):
        return None
    out: dict[Name, Term] = {}
    stuck = False
    for (p, _), a in zip(pat.args, w.args):
        r = match_pattern(ctx, p, a.term)
        if r is None:
            return None
        if r is _STUCK:
            stuck = True
        elif not stuck:
            out.update(r)
    return _STUCK if stuck else out


# ---------------------------------------------------------------------------
# equality


def _mismatch(ctx: Context, a: Term, b: Term) -> CheckError:
    return ctx.error(ErrorClass.TypeMismatch, "Expected", b, "but found", a)


def _spine(t: Term) -> tuple[Term, list[Arg]]:
    args: list[Arg] = []
    t = _peel(t)
    while isinstance(t, App):
        args.append(t.arg)
        t = _peel(t.fun)
    args.reverse()
    return t, args


def equate(ctx: Context, a: Term, b: Term) -> None:
    """Succeed iff ``a`` and ``b`` are definitionally equal."""
    if aeq(a, b):
        return
    if ctx.session.aeq_only:
        raise _mismatch(ctx, _peel(a), _peel(b))
    ha, args_a = _spine(a)
    hb, args_b = _spine(b)
    if (
        args_a
        and isinstance(ha, Var)
        and isinstance(hb, Var)
        and ha.name == hb.name
        and len(args_a) == len(args_b)
        and ctx.lookup_def(ha.name) is not None
    ):
        try:
            _equate_args(ctx, args_a, args_b, a, b)
            return
        except CheckError as e:
            if e.cls is not ErrorClass.TypeMismatch:
                raise
    _equate_whnf(ctx, whnf(ctx, a), whnf(ctx, b))


def _equate_args(ctx: Context, xs: Iterable[Arg], ys: Iterable[Arg], a: Term, b: Term) -> None:
    for x, y in zip(xs, ys):
        if x.eps != y.eps:
            raise _mismatch(ctx, a, b)
        if x.eps is REL:
            equate(ctx, x.term, y.term)


def _equate_whnf(ctx: Context, a: Term, b: Term) -> None:
    if aeq(a, b):
        return
    if type(a) is not type(b):
        raise _mismatch(ctx, a, b)
    match a:
        case Var(x):
            if x != b.name:
                raise _mismatch(ctx, a, b)
        case Lam(eps, b1):
            if eps != b.eps:
                raise _mismatch(ctx, a, b)
            _, u, v = unbind2(b1, b.bind)
            equate(ctx, u, v)
        case App(f, arg):
            equate(ctx, f, b.fun)
            _equate_args(ctx, [arg], [b.arg], a, b)
        case Pi(eps, dom, b1):
            if eps != b.eps:
                raise _mismatch(ctx, a, b)
            equate(ctx, dom, b.domain)
            _, u, v = unbind2(b1, b.bind)
            equate(ctx, u, v)
        case TySigma(dom, b1):
            equate(ctx, dom, b.first)
            _, u, v = unbind2(b1, b.bind)
            equate(ctx, u, v)
        case Prod(x, y):
            equate(ctx, x, b.first)
            equate(ctx, y, b.second)
        case TyEq(x, y):
            equate(ctx, x, b.lhs)
            equate(ctx, y, b.rhs)
        case Subst(x, y):
            equate(ctx, x, b.body)
            equate(ctx, y, b.proof)
        case Contra(x):
            equate(ctx, x, b.proof)
        case LetPair(s, b1):
            equate(ctx, s, b.scrutinee)
            b2 = b.bind
            x, y = fresh(b1.bound1), fresh(b1.bound2)
            equate(
                ctx,
                substitute(b1.body, {b1.bound1: Var(x), b1.bound2: Var(y)}),
                substitute(b2.body, {b2.bound1: Var(x), b2.bound2: Var(y)}),
            )
        case TyCon(name, args):
            if name != b.name or len(args) != len(b.params):
                raise _mismatch(ctx, a, b)
            for x, y in zip(args, b.params):
                equate(ctx, x.term, y.term)
        case DataCon(name, args):
            if name != b.name or len(args) != len(b.args):
                raise _mismatch(ctx, a, b)
            _equate_args(ctx, args, b.args, a, b)
        case Case(s, ms):
            equate(ctx, s, b.scrutinee)
            if len(ms) != len(b.matches):
                raise _mismatch(ctx, a, b)
            for m1, m2 in zip(ms, b.matches):
                if not same_shape(m1.pattern, m2.pattern):
                    raise _mismatch(ctx, a, b)
                xs, ys = pattern_vars(m1.pattern), pattern_vars(m2.pattern)
                shared = [Var(fresh(x)) for x in xs]
                equate(
                    ctx,
                    substitute(m1.body, dict(zip(xs, shared))),
                    substitute(m2.body, dict(zip(ys, shared))),
                )
        case TyType() | TyUnit() | LitUnit() | Refl() | TrustMe():
            pass
        case _:
            raise _mismatch(ctx, a, b)


# ---------------------------------------------------------------------------
# head-form coercions


def ensure_pi(ctx: Context, ty: Term) -> tuple[Epsilon, Name, Term, Term]:
    w = whnf(ctx, ty)
    if isinstance(w, Pi):
        return w.eps, w.bind.bound, w.domain, w.bind.body
    ctx.err(ErrorClass.NotAFunction, "Expected a function type but found", w)


def ensure_tcon(ctx: Context, ty: Term) -> tuple[str, tuple[Arg, ...]]:
    w = whnf(ctx, ty)
    if isinstance(w, TyCon):
        return w.name, w.params
    ctx.err(ErrorClass.NotATyCon, "Expected a data type but found", w)


# ---------------------------------------------------------------------------
# unification

_RIGID = (TyType, Pi, Lam, TySigma, TyUnit, LitUnit, TyEq, Refl, Prod, TyCon, DataCon)


def unify(ctx: Context, flexible: Iterable[Name], a: Term, b: Term) -> list[Definition]:
    """First-order unification producing definitions for variables.

    A variable may be defined when it is flexible or a local without a
    definition. Distinct rigid heads fail; anything else that does not
    match structurally yields no information.
    """
    return _unify(ctx, frozenset(flexible), a, b)


def _definable(ctx: Context, flex: frozenset[Name], t: Term) -> bool:
    return (
        isinstance(t, Var)
        and (t.name in flex or ctx.is_local(t.name))
        and ctx.lookup_def(t.name) is None
    )


def _bind_var(ctx: Context, x: Name, t: Term) -> list[Definition]:
    if x in t.free_vars:
        if isinstance(t, _RIGID):
            ctx.unification_failure("Occurs check failed:", Var(x), "occurs in", t)
        return []
    return [Definition(x, t)]


def _unify(ctx: Context, flex: frozenset[Name], a: Term, b: Term) -> list[Definition]:
    if aeq(a, b):
        return []
    na, nb = whnf(ctx, a), whnf(ctx, b)
    if aeq(na, nb):
        return []
    if _definable(ctx, flex, na):
        return _bind_var(ctx, na.name, nb)
    if _definable(ctx, flex, nb):
        return _bind_var(ctx, nb.name, na)
    if not (isinstance(na, _RIGID) and isinstance(nb, _RIGID)):
        return []
    if type(na) is not type(nb):
        ctx.unification_failure("Cannot unify", na, "with", nb)
    match na:
        case DataCon(name, args):
            if name != nb.name or len(args) != len(nb.args):
                ctx.unification_failure("Cannot unify", na, "with", nb)
            return _unify_many(ctx, flex, [(x.eps, x.term, y.term) for x, y in zip(args, nb.args)])
        case TyCon(name, args):
            if name != nb.name or len(args) != len(nb.params):
                ctx.unification_failure("Cannot unify", na, "with", nb)
            return _unify_many(ctx, flex, [(REL, x.term, y.term) for x, y in zip(args, nb.params)])
        case Prod(x, y):
            return _unify_many(ctx, flex, [(REL, x, nb.first), (REL, y, nb.second)])
        case TyEq(x, y):
            return _unify_many(ctx, flex, [(REL, x, nb.lhs), (REL, y, nb.rhs)])
    return []


def _unify_many(ctx: Context, flex: frozenset[Name], pairs) -> list[Definition]:
    out: list[Definition] = []
    for eps, x, y in pairs:
        try:
            ds = _unify(ctx, flex, x, y)
        except UnificationFailure:
            if eps is REL:
                raise
            continue
        out.extend(ds)
        ctx = ctx.extend_all(ds)
    return out
