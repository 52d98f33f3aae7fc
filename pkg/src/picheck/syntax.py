"""Abstract syntax, names and binders.

Terms use a named representation. Every binder carries the name it binds;
opening a binder renames that name to a fresh one, so names introduced by
the checker are globally unique. Names straight from the parser have
``uid == 0``.
"""
from __future__ import annotations

import enum
import itertools
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Union


@dataclass(frozen=True, order=True)
class Name:
    hint: str
    uid: int = 0

    def __str__(self) -> str:
        return self.hint if self.uid == 0 else f"{self.hint}#{self.uid}"


class NameSupply:
    """Issues names with never-before-seen uids. Safe to share across threads."""

    def __init__(self) -> None:
        self._counter = itertools.count(1)
        self._lock = threading.Lock()

    def fresh(self, name: Name) -> Name:
        with self._lock:
            return Name(name.hint, next(self._counter))


_supply = NameSupply()


def fresh(name: Name) -> Name:
    return _supply.fresh(name)


class Epsilon(enum.Enum):
    REL = "+"
    IRR = "-"

    def __str__(self) -> str:
        return self.value


REL = Epsilon.REL
IRR = Epsilon.IRR


@dataclass(frozen=True)
class SourcePos:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class Term:
    """Base class of every syntactic form."""

    @cached_property
    def free_vars(self) -> frozenset[Name]:
        return _free_vars(self)

    def __str__(self) -> str:
        from picheck.pretty import pretty_term

        return pretty_term(self)


@dataclass(frozen=True)
class Binder:
    bound: Name
    body: Term


@dataclass(frozen=True)
class Binder2:
    bound1: Name
    bound2: Name
    body: Term


@dataclass(frozen=True)
class Arg:
    eps: Epsilon
    term: Term


@dataclass(frozen=True)
class PatVar:
    name: Name


@dataclass(frozen=True)
class PatCon:
    con: str
    args: tuple[tuple["Pattern", Epsilon], ...] = ()


Pattern = Union[PatVar, PatCon]


@dataclass(frozen=True)
class Match:
    pattern: Pattern
    body: Term


@dataclass(frozen=True)
class TyType(Term):
    pass


@dataclass(frozen=True)
class Var(Term):
    name: Name


@dataclass(frozen=True)
class Lam(Term):
    eps: Epsilon
    bind: Binder


@dataclass(frozen=True)
class App(Term):
    fun: Term
    arg: Arg


@dataclass(frozen=True)
class Pi(Term):
    eps: Epsilon
    domain: Term
    bind: Binder


@dataclass(frozen=True)
class Ann(Term):
    term: Term
    type: Term


@dataclass(frozen=True)
class Pos(Term):
    pos: SourcePos
    term: Term


@dataclass(frozen=True)
class TrustMe(Term):
    pass


@dataclass(frozen=True)
class TyUnit(Term):
    pass


@dataclass(frozen=True)
class LitUnit(Term):
    pass


@dataclass(frozen=True)
class TySigma(Term):
    first: Term
    bind: Binder


@dataclass(frozen=True)
class Prod(Term):
    first: Term
    second: Term


@dataclass(frozen=True)
class LetPair(Term):
    scrutinee: Term
    bind: Binder2


@dataclass(frozen=True)
class Let(Term):
    rhs: Term
    bind: Binder


@dataclass(frozen=True)
class TyEq(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Refl(Term):
    pass


@dataclass(frozen=True)
class Subst(Term):
    body: Term
    proof: Term


@dataclass(frozen=True)
class Contra(Term):
    proof: Term


@dataclass(frozen=True)
class TyCon(Term):
    name: str
    params: tuple[Arg, ...] = ()


@dataclass(frozen=True)
class DataCon(Term):
    name: str
    args: tuple[Arg, ...] = ()


@dataclass(frozen=True)
class Case(Term):
    scrutinee: Term
    matches: tuple[Match, ...]


# Telescope entries. A telescope is a tuple of these; each entry scopes over
# the ones after it.
@dataclass(frozen=True)
class Sig:
    name: Name
    eps: Epsilon
    type: Term


@dataclass(frozen=True)
class Definition:
    name: Name
    term: Term


TeleEntry = Union[Sig, Definition]
Telescope = tuple[TeleEntry, ...]


@dataclass(frozen=True)
class ConstructorDef:
    name: str
    tele: Telescope


WILDCARD = Name("_")


# ---------------------------------------------------------------------------
# free variables


def pattern_vars(pat: Pattern) -> list[Name]:
    if isinstance(pat, PatVar):
        return [pat.name]
    out: list[Name] = []
    for sub, _ in pat.args:
        out.extend(pattern_vars(sub))
    return out


def _free_vars(t: Term) -> frozenset[Name]:
    match t:
        case Var(name):
            return frozenset((name,))
        case Lam(_, b):
            return b.body.free_vars - {b.bound}
        case Let(rhs, b):
            return rhs.free_vars | (b.body.free_vars - {b.bound})
        case App(f, a):
            return f.free_vars | a.term.free_vars
        case Pi(_, dom, b) | TySigma(dom, b):
            return dom.free_vars | (b.body.free_vars - {b.bound})
        case Ann(a, ty):
            return a.free_vars | ty.free_vars
        case Pos(_, a) | Contra(a):
            return a.free_vars
        case Prod(a, b) | TyEq(a, b) | Subst(a, b):
            return a.free_vars | b.free_vars
        case LetPair(s, b2):
            return s.free_vars | (b2.body.free_vars - {b2.bound1, b2.bound2})
        case TyCon(_, args) | DataCon(_, args):
            return frozenset().union(*(a.term.free_vars for a in args))
        case Case(s, matches):
            out = set(s.free_vars)
            for m in matches:
                out |= m.body.free_vars - set(pattern_vars(m.pattern))
            return frozenset(out)
        case _:
            return frozenset()


def fv(t: Term) -> frozenset[Name]:
    return t.free_vars


def tele_free_vars(tele: Iterable[TeleEntry]) -> frozenset[Name]:
    bound: set[Name] = set()
    out: set[Name] = set()
    for e in tele:
        if isinstance(e, Sig):
            out |= e.type.free_vars - bound
            bound.add(e.name)
        else:
            out |= ({e.name} | e.term.free_vars) - bound
    return frozenset(out)


# ---------------------------------------------------------------------------
# substitution


def subst(x: Name, a: Term, b: Term) -> Term:
    """``b[a/x]``, capture-avoiding."""
    return substitute(b, {x: a})


def substitute(t: Term, s: Mapping[Name, Term]) -> Term:
    """Simultaneous capture-avoiding substitution."""
    s = {x: v for x, v in s.items() if x in t.free_vars}
    if not s:
        return t
    avoid = frozenset().union(*(v.free_vars for v in s.values()))
    return _subst(t, s, avoid)


def _relevant(s: Mapping[Name, Term], t: Term) -> bool:
    fvs = t.free_vars
    return any(x in fvs for x in s)


def _subst(t: Term, s: Mapping[Name, Term], avoid: frozenset[Name]) -> Term:
    if not _relevant(s, t):
        return t
    match t:
        case Var(name):
            return s.get(name, t)
        case Lam(eps, b):
            return Lam(eps, _subst_bind(b, s, avoid))
        case App(f, Arg(eps, a)):
            return App(_subst(f, s, avoid), Arg(eps, _subst(a, s, avoid)))
        case Pi(eps, dom, b):
            return Pi(eps, _subst(dom, s, avoid), _subst_bind(b, s, avoid))
        case Ann(a, ty):
            return Ann(_subst(a, s, avoid), _subst(ty, s, avoid))
        case Pos(p, a):
            return Pos(p, _subst(a, s, avoid))
        case TySigma(a, b):
            return TySigma(_subst(a, s, avoid), _subst_bind(b, s, avoid))
        case Prod(a, b):
            return Prod(_subst(a, s, avoid), _subst(b, s, avoid))
        case LetPair(sc, b2):
            names, body = _subst_under([b2.bound1, b2.bound2], b2.body, s, avoid)
            return LetPair(_subst(sc, s, avoid), Binder2(names[0], names[1], body))
        case Let(rhs, b):
            return Let(_subst(rhs, s, avoid), _subst_bind(b, s, avoid))
        case TyEq(a, b):
            return TyEq(_subst(a, s, avoid), _subst(b, s, avoid))
        case Subst(a, b):
            return Subst(_subst(a, s, avoid), _subst(b, s, avoid))
        case Contra(a):
            return Contra(_subst(a, s, avoid))
        case TyCon(name, args):
            return TyCon(name, tuple(Arg(x.eps, _subst(x.term, s, avoid)) for x in args))
        case DataCon(name, args):
            return DataCon(name, tuple(Arg(x.eps, _subst(x.term, s, avoid)) for x in args))
        case Case(sc, matches):
            return Case(_subst(sc, s, avoid), tuple(_subst_match(m, s, avoid) for m in matches))
    raise TypeError(f"unknown term {t!r}")


def _subst_under(
    names: list[Name], body: Term, s: Mapping[Name, Term], avoid: frozenset[Name]
) -> tuple[list[Name], Term]:
    inner = {x: v for x, v in s.items() if x not in names and x in body.free_vars}
    if not inner:
        return names, body
    out = []
    for x in names:
        if x in avoid:
            y = fresh(x)
            inner[x] = Var(y)
            out.append(y)
        else:
            out.append(x)
    return out, _subst(body, inner, avoid)


def _subst_bind(b: Binder, s: Mapping[Name, Term], avoid: frozenset[Name]) -> Binder:
    names, body = _subst_under([b.bound], b.body, s, avoid)
    if body is b.body:
        return b
    return Binder(names[0], body)


def _rename_pattern(pat: Pattern, ren: Mapping[Name, Name]) -> Pattern:
    if isinstance(pat, PatVar):
        return PatVar(ren.get(pat.name, pat.name))
    return PatCon(pat.con, tuple((_rename_pattern(p, ren), e) for p, e in pat.args))


def _subst_match(m: Match, s: Mapping[Name, Term], avoid: frozenset[Name]) -> Match:
    names = pattern_vars(m.pattern)
    new, body = _subst_under(names, m.body, s, avoid)
    if body is m.body:
        return m
    ren = {x: y for x, y in zip(names, new) if x != y}
    return Match(_rename_pattern(m.pattern, ren), body)


def subst_tele(tele: Telescope, s: Mapping[Name, Term]) -> Telescope:
    """Substitute through a telescope, respecting the names it binds."""
    s = dict(s)
    out: list[TeleEntry] = []
    avoid = frozenset().union(*(v.free_vars for v in s.values())) if s else frozenset()
    for e in tele:
        if isinstance(e, Sig):
            ty = substitute(e.type, s)
            s.pop(e.name, None)
            name = e.name
            if name in avoid:
                name = fresh(e.name)
                s[e.name] = Var(name)
            out.append(Sig(name, e.eps, ty))
        else:
            lhs = s.get(e.name, Var(e.name))
            name = lhs.name if isinstance(lhs, Var) else e.name
            out.append(Definition(name, substitute(e.term, s)))
    return tuple(out)


# ---------------------------------------------------------------------------
# binders


def bind(x: Name, body: Term) -> Binder:
    return Binder(x, body)


def unbind(b: Binder) -> tuple[Name, Term]:
    x = fresh(b.bound)
    return x, substitute(b.body, {b.bound: Var(x)})


def unbind2(b1: Binder, b2: Binder) -> tuple[Name, Term, Term]:
    """Open two binders with one shared fresh name."""
    x = fresh(b1.bound)
    v = Var(x)
    return x, substitute(b1.body, {b1.bound: v}), substitute(b2.body, {b2.bound: v})


def instantiate(b: Binder, a: Term) -> Term:
    return substitute(b.body, {b.bound: a})


def unbind_pair(b: Binder2) -> tuple[Name, Name, Term]:
    x, y = fresh(b.bound1), fresh(b.bound2)
    return x, y, substitute(b.body, {b.bound1: Var(x), b.bound2: Var(y)})


def unbind_match(m: Match) -> tuple[Pattern, Term]:
    names = pattern_vars(m.pattern)
    ren = {x: fresh(x) for x in names}
    body = substitute(m.body, {x: Var(y) for x, y in ren.items()})
    return _rename_pattern(m.pattern, ren), body


def freshen_tele(tele: Telescope) -> tuple[Telescope, dict[Name, Term]]:
    """Rename every name a telescope binds. Returns the renaming used."""
    ren: dict[Name, Term] = {}
    out: list[TeleEntry] = []
    for e in tele:
        if isinstance(e, Sig):
            y = fresh(e.name)
            out.append(Sig(y, e.eps, substitute(e.type, ren)))
            ren[e.name] = Var(y)
        else:
            lhs = ren.get(e.name, Var(e.name))
            assert isinstance(lhs, Var)
            out.append(Definition(lhs.name, substitute(e.term, ren)))
    return tuple(out), ren


# ---------------------------------------------------------------------------
# alpha-equivalence


def strip(t: Term) -> Term:
    """Remove every Pos and Ann node."""
    return _strip(t, keep_ann=False)


def strip_pos(t: Term) -> Term:
    return _strip(t, keep_ann=True)


def _strip(t: Term, keep_ann: bool) -> Term:
    def go(t: Term) -> Term:
        match t:
            case Pos(_, a):
                return go(a)
            case Ann(a, ty):
                return Ann(go(a), go(ty)) if keep_ann else go(a)
            case Var() | TyType() | TrustMe() | TyUnit() | LitUnit() | Refl():
                return t
            case Lam(eps, b):
                return Lam(eps, Binder(b.bound, go(b.body)))
            case App(f, Arg(eps, a)):
                return App(go(f), Arg(eps, go(a)))
            case Pi(eps, dom, b):
                return Pi(eps, go(dom), Binder(b.bound, go(b.body)))
            case TySigma(a, b):
                return TySigma(go(a), Binder(b.bound, go(b.body)))
            case Prod(a, b):
                return Prod(go(a), go(b))
            case LetPair(sc, b2):
                return LetPair(go(sc), Binder2(b2.bound1, b2.bound2, go(b2.body)))
            case Let(rhs, b):
                return Let(go(rhs), Binder(b.bound, go(b.body)))
            case TyEq(a, b):
                return TyEq(go(a), go(b))
            case Subst(a, b):
                return Subst(go(a), go(b))
            case Contra(a):
                return Contra(go(a))
            case TyCon(name, args):
                return TyCon(name, tuple(Arg(x.eps, go(x.term)) for x in args))
            case DataCon(name, args):
                return DataCon(name, tuple(Arg(x.eps, go(x.term)) for x in args))
            case Case(sc, ms):
                return Case(go(sc), tuple(Match(m.pattern, go(m.body)) for m in ms))
        raise TypeError(f"unknown term {t!r}")

    return go(t)


def _peel(t: Term) -> Term:
    while isinstance(t, (Pos, Ann)):
        t = t.term
    return t


def aeq(a: Term, b: Term) -> bool:
    """Alpha-equivalence, ignoring annotations and source positions."""
    return _Aeq().eq(a, b)


class _Aeq:
    def __init__(self) -> None:
        self.left: dict[Name, int] = {}
        self.right: dict[Name, int] = {}
        self.depth = 0

    def bind(self, xs: list[Name], ys: list[Name]) -> list:
        saved = []
        for x, y in zip(xs, ys):
            saved.append((x, self.left.get(x), y, self.right.get(y)))
            self.left[x] = self.depth
            self.right[y] = self.depth
            self.depth += 1
        return saved

    def unbind(self, saved: list) -> None:
        for x, lx, y, ry in reversed(saved):
            self.depth -= 1
            if lx is None:
                del self.left[x]
            else:
                self.left[x] = lx
            if ry is None:
                del self.right[y]
            else:
                self.right[y] = ry

    def under(self, xs: list[Name], ys: list[Name], a: Term, b: Term) -> bool:
        saved = self.bind(xs, ys)
        try:
            return self.eq(a, b)
        finally:
            self.unbind(saved)

    def args(self, xs: tuple[Arg, ...], ys: tuple[Arg, ...]) -> bool:
        return len(xs) == len(ys) and all(
            x.eps == y.eps and self.eq(x.term, y.term) for x, y in zip(xs, ys)
        )

    def eq(self, a: Term, b: Term) -> bool:
        a, b = _peel(a), _peel(b)
        if a is b and not (self.left or self.right):
            return True
        if type(a) is not type(b):
            return False
        match a:
            case Var(x):
                lx, ly = self.left.get(x), self.right.get(b.name)
                if lx is None and ly is None:
                    return x == b.name
                return lx == ly
            case Lam(eps, bd):
                return eps == b.eps and self.under([bd.bound], [b.bind.bound], bd.body, b.bind.body)
            case App(f, arg):
                return (
                    arg.eps == b.arg.eps
                    and self.eq(f, b.fun)
                    and self.eq(arg.term, b.arg.term)
                )
            case Pi(eps, dom, bd):
                return (
                    eps == b.eps
                    and self.eq(dom, b.domain)
                    and self.under([bd.bound], [b.bind.bound], bd.body, b.bind.body)
                )
            case TySigma(dom, bd):
                return self.eq(dom, b.first) and self.under(
                    [bd.bound], [b.bind.bound], bd.body, b.bind.body
                )
            case Prod(x, y):
                return self.eq(x, b.first) and self.eq(y, b.second)
            case LetPair(sc, b2):
                o = b.bind
                return self.eq(sc, b.scrutinee) and self.under(
                    [b2.bound1, b2.bound2], [o.bound1, o.bound2], b2.body, o.body
                )
            case Let(rhs, bd):
                return self.eq(rhs, b.rhs) and self.under(
                    [bd.bound], [b.bind.bound], bd.body, b.bind.body
                )
            case TyEq(x, y):
                return self.eq(x, b.lhs) and self.eq(y, b.rhs)
            case Subst(x, y):
                return self.eq(x, b.body) and self.eq(y, b.proof)
            case Contra(x):
                return self.eq(x, b.proof)
            case TyCon(name, args):
                return name == b.name and self.args(args, b.params)
            case DataCon(name, args):
                return name == b.name and self.args(args, b.args)
            case Case(sc, ms):
                if not self.eq(sc, b.scrutinee) or len(ms) != len(b.matches):
                    return False
                for m1, m2 in zip(ms, b.matches):
                    if not same_shape(m1.pattern, m2.pattern):
                        return False
                    if not self.under(
                        pattern_vars(m1.pattern), pattern_vars(m2.pattern), m1.body, m2.body
                    ):
                        return False
                return True
            case TyType() | TrustMe() | TyUnit() | LitUnit() | Refl():
                return True
        raise TypeError(f"unknown term {a!r}")


def same_shape(p: Pattern, q: Pattern) -> bool:
    if isinstance(p, PatVar) or isinstance(q, PatVar):
        return isinstance(p, PatVar) and isinstance(q, PatVar)
    return (
        p.con == q.con
        and len(p.args) == len(q.args)
        and all(e1 == e2 and same_shape(a, b) for (a, e1), (b, e2) in zip(p.args, q.args))
    )


def pattern_term(pat: Pattern) -> Term:
    """Read a pattern back as a term."""
    if isinstance(pat, PatVar):
        return Var(pat.name)
    return DataCon(pat.con, tuple(Arg(e, pattern_term(p)) for p, e in pat.args))


# ---------------------------------------------------------------------------
# small constructors


def nat_literal(n: int) -> Term:
    t: Term = DataCon("Zero")
    for _ in range(n):
        t = DataCon("Succ", (Arg(REL, t),))
    return t


def app(f: Term, *args: Term | Arg) -> Term:
    for a in args:
        f = App(f, a if isinstance(a, Arg) else Arg(REL, a))
    return f


def lam(x: str | Name, body: Term, eps: Epsilon = REL) -> Lam:
    return Lam(eps, Binder(Name(x) if isinstance(x, str) else x, body))


def pi(x: str | Name, dom: Term, body: Term, eps: Epsilon = REL) -> Pi:
    return Pi(eps, dom, Binder(Name(x) if isinstance(x, str) else x, body))


def var(x: str) -> Var:
    return Var(Name(x))
