"""A reference normalizer used to cross-check ``equate``.

It shares nothing with ``whnf``: it reduces everywhere, including under
binders and inside stuck eliminators, matching patterns against full
normal forms, and erases irrelevant arguments
so that they never influence comparison.
"""
from __future__ import annotations

from typing import Mapping

from picheck.syntax import (
    IRR,
    Ann,
    App,
    Arg,
    Binder,
    Binder2,
    Case,
    Contra,
    DataCon,
    Lam,
    Let,
    LetPair,
    LitUnit,
    Match,
    Name,
    PatCon,
    PatVar,
    Pi,
    Pos,
    Prod,
    Refl,
    Subst,
    Term,
    TyCon,
    TyEq,
    TySigma,
    Var,
    aeq,
    substitute,
)

ERASED = LitUnit()


class OutOfFuel(Exception):
    pass


class Normalizer:
    def __init__(self, defs: Mapping[Name, Term], fuel: int = 200_000) -> None:
        self.defs = defs
        self.fuel = fuel

    def step(self) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise OutOfFuel

    def arg(self, a: Arg) -> Arg:
        return Arg(a.eps, ERASED if a.eps is IRR else self.nf(a.term))

    def head(self, t: Term) -> Term:
        """Reduce until the outermost constructor is not a redex."""
        while True:
            match t:
                case Pos(_, a) | Ann(a, _):
                    t = a
                case Var(x):
                    d = self.defs.get(x)
                    if d is None:
                        return t
                    self.step()
                    t = d
                case App(f, a):
                    f2 = self.head(f)
                    if not isinstance(f2, Lam):
                        return App(f2, a)
                    self.step()
                    t = substitute(f2.bind.body, {f2.bind.bound: a.term})
                case Let(rhs, b):
                    self.step()
                    t = substitute(b.body, {b.bound: rhs})
                case LetPair(s, b2):
                    s2 = self.head(s)
                    if not isinstance(s2, Prod):
                        return LetPair(s2, b2)
                    self.step()
                    t = substitute(b2.body, {b2.bound1: s2.first, b2.bound2: s2.second})
                case Case(s, ms):
                    s2 = self.nf(s)
                    for m in ms:
                        r = self.match(m.pattern, s2)
                        if r == "stuck":
                            return Case(s2, ms)
                        if r is not None:
                            self.step()
                            t = substitute(m.body, r)
                            break
                    else:
                        return Case(s2, ms)
                case Subst(body, proof):
                    p2 = self.head(proof)
                    if not isinstance(p2, Refl):
                        return Subst(body, p2)
                    self.step()
                    t = body
                case _:
                    return t

    def nf(self, t: Term) -> Term:
        t = self.head(t)
        match t:
            case App(f, a):
                return App(self.nf(f), self.arg(a))
            case Lam(eps, b):
                return Lam(eps, Binder(b.bound, self.nf(b.body)))
            case LetPair(s, b2):
                return LetPair(self.nf(s), Binder2(b2.bound1, b2.bound2, self.nf(b2.body)))
            case Case(s, ms):
                return Case(self.nf(s), tuple(Match(m.pattern, self.nf(m.body)) for m in ms))
            case Subst(body, proof):
                return Subst(self.nf(body), self.nf(proof))
            case Contra(p):
                return Contra(self.nf(p))
            case Pi(eps, dom, b):
                return Pi(eps, self.nf(dom), Binder(b.bound, self.nf(b.body)))
            case TySigma(dom, b):
                return TySigma(self.nf(dom), Binder(b.bound, self.nf(b.body)))
            case Prod(a, b):
                return Prod(self.nf(a), self.nf(b))
            case TyEq(a, b):
                return TyEq(self.nf(a), self.nf(b))
            case TyCon(name, args):
                return TyCon(name, tuple(self.arg(a) for a in args))
            case DataCon(name, args):
                return DataCon(name, tuple(self.arg(a) for a in args))
        return t

    def match(self, p, v: Term):
        """A substitution, None for a clash, or "stuck"."""
        if isinstance(p, PatVar):
            return {p.name: v}
        assert isinstance(p, PatCon)
        if not isinstance(v, DataCon):
            return "stuck"
        if v.name != p.con or len(v.args) != len(p.args):
            return None
        out: dict = {}
        stuck = False
        for (q, _), a in zip(p.args, v.args):
            r = self.match(q, a.term)
            if r is None:
                return None
            if r == "stuck":
                stuck = True
            else:
                out.update(r)
        return "stuck" if stuck else out


def oracle_equal(defs: Mapping[Name, Term], a: Term, b: Term) -> bool:
    n = Normalizer(defs)
    return aeq(n.nf(a), n.nf(b))
