"""Pretty-printer producing concrete syntax the parser accepts back."""
from __future__ import annotations

from typing import Iterable

from picheck.parser import KEYWORDS, Data, Def, ModuleAST, TypeSig
from picheck.syntax import (
    IRR,
    REL,
    Ann,
    App,
    Arg,
    Case,
    Contra,
    DataCon,
    Definition,
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
    Sig,
    Subst,
    Telescope,
    Term,
    TrustMe,
    TyCon,
    TyEq,
    TySigma,
    TyType,
    TyUnit,
    Var,
    pattern_vars,
)

TOP, EQ, APP, ATOM = 0, 1, 2, 3


def _nat_value(t: Term) -> int | None:
    n = 0
    while True:
        while isinstance(t, Pos):
            t = t.term
        if not isinstance(t, DataCon):
            return None
        if t.name == "Zero" and not t.args:
            return n
        if t.name == "Succ" and len(t.args) == 1 and t.args[0].eps is REL:
            n += 1
            t = t.args[0].term
        else:
            return None


def _is_if(t: Case) -> bool:
    if len(t.matches) != 2:
        return False
    p, q = t.matches[0].pattern, t.matches[1].pattern
    return p == PatCon("True") and q == PatCon("False")


class Printer:
    def __init__(self, taken: Iterable[str] = ()) -> None:
        self.names: dict[Name, str] = {}
        self.taken: set[str] = set(taken)

    # -- names

    def _choose(self, base: str) -> str:
        if base not in self.taken and base not in KEYWORDS:
            return base
        i = 1
        while f"{base}{i}" in self.taken:
            i += 1
        return f"{base}{i}"

    def free(self, names: Iterable[Name]) -> None:
        for x in sorted(names, key=lambda n: (n.hint, n.uid)):
            if x not in self.names:
                d = self._choose(x.hint)
                self.names[x] = d
                self.taken.add(d)

    def bind(self, x: Name, body_fv: frozenset[Name] | None = None) -> tuple[str, tuple]:
        if x.hint == "_" and (body_fv is None or x not in body_fv):
            saved = (x, self.names.get(x), None)
            self.names[x] = "_"
            return "_", saved
        d = self._choose(x.hint)
        saved = (x, self.names.get(x), d)
        self.names[x] = d
        self.taken.add(d)
        return d, saved

    def unbind(self, saved: tuple) -> None:
        x, old, d = saved
        if d is not None:
            self.taken.discard(d)
        if old is None:
            self.names.pop(x, None)
        else:
            self.names[x] = old

    def name(self, x: Name) -> str:
        if x not in self.names:
            self.free([x])
        return self.names[x]

    # -- terms

    def term(self, t: Term, prec: int = TOP) -> str:
        s, level = self._term(t)
        return f"({s})" if level < prec else s

    def _term(self, t: Term) -> tuple[str, int]:
        match t:
            case Pos(_, a):
                return self._term(a)
            case TyType():
                return "Type", ATOM
            case Var(x):
                return self.name(x), ATOM
            case TrustMe():
                return "TRUSTME", ATOM
            case TyUnit():
                return "Unit", ATOM
            case LitUnit():
                return "()", ATOM
            case Refl():
                return "Refl", ATOM
            case Lam():
                return self._lam(t), TOP
            case App():
                return f"{self.term(t.fun, APP)} {self.arg(t.arg)}", APP
            case Pi(eps, dom, b):
                if eps is REL and b.bound not in b.body.free_vars:
                    return f"{self.term(dom, EQ)} -> {self.term(b.body)}", TOP
                d = self.term(dom)
                x, saved = self.bind(b.bound, b.body.free_vars)
                body = self.term(b.body)
                self.unbind(saved)
                if eps is IRR:
                    return f"[{x} : {d}] -> {body}", TOP
                return f"({x} : {d}) -> {body}", TOP
            case Ann(a, ty):
                return f"({self.term(a)} : {self.term(ty)})", ATOM
            case TySigma(a, b):
                d = self.term(a)
                x, saved = self.bind(b.bound, b.body.free_vars)
                if x == "_":
                    self.unbind(saved)
                    x, saved = self.bind(Name("x"), None)
                body = self.term(b.body)
                self.unbind(saved)
                return f"{{ {x} : {d} | {body} }}", ATOM
            case Prod(a, b):
                return f"({self.term(a)}, {self.term(b)})", ATOM
            case LetPair(s, b2):
                scrut = self.term(s)
                x, s1 = self.bind(b2.bound1, b2.body.free_vars)
                y, s2 = self.bind(b2.bound2, b2.body.free_vars)
                body = self.term(b2.body)
                self.unbind(s2)
                self.unbind(s1)
                return f"let ({x}, {y}) = {scrut} in {body}", TOP
            case Let(rhs, b):
                r = self.term(rhs)
                x, saved = self.bind(b.bound, b.body.free_vars)
                if x == "_":
                    self.unbind(saved)
                    x, saved = self.bind(Name("x"), None)
                body = self.term(b.body)
                self.unbind(saved)
                return f"let {x} = {r} in {body}", TOP
            case TyEq(a, b):
                return f"{self.term(a, APP)} = {self.term(b, APP)}", EQ
            case Subst(a, b):
                return f"subst {self.term(a)} by {self.term(b)}", TOP
            case Contra(a):
                return f"contra {self.term(a)}", TOP
            case TyCon(name, args):
                if not args:
                    return name, ATOM
                return " ".join([name] + [self.arg(a) for a in args]), APP
            case DataCon(name, args):
                n = _nat_value(t)
                if n is not None:
                    return str(n), ATOM
                if not args:
                    return name, ATOM
                return " ".join([name] + [self.arg(a) for a in args]), APP
            case Case(s, ms):
                scrut = self.term(s)
                if _is_if(t):
                    a, b = self.term(ms[0].body), self.term(ms[1].body)
                    return f"if {scrut} then {a} else {b}", TOP
                branches = []
                for m in ms:
                    saved = [self.bind(x, m.body.free_vars | {x})[1] for x in pattern_vars(m.pattern)]
                    branches.append(f"{self.pattern(m.pattern)} -> {self.term(m.body)}")
                    for sv in reversed(saved):
                        self.unbind(sv)
                inner = "; ".join(branches)
                return f"case {scrut} of {{ {inner} }}" if inner else f"case {scrut} of {{}}", TOP
        raise TypeError(f"cannot print {t!r}")

    def _lam(self, t: Term) -> str:
        params: list[str] = []
        saved: list[tuple] = []
        while True:
            while isinstance(t, Pos):
                t = t.term
            if not isinstance(t, Lam):
                break
            x, sv = self.bind(t.bind.bound, t.bind.body.free_vars)
            saved.append(sv)
            params.append(f"[{x}]" if t.eps is IRR else x)
            t = t.bind.body
        body = self.term(t)
        for sv in reversed(saved):
            self.unbind(sv)
        return "\\" + " ".join(params) + ". " + body

    def arg(self, a: Arg) -> str:
        if a.eps is IRR:
            return f"[{self.term(a.term)}]"
        return self.term(a.term, ATOM)

    def pattern(self, p: Pattern, nested: bool = False) -> str:
        if isinstance(p, PatVar):
            return self.names.get(p.name, p.name.hint)
        if not p.args:
            return p.con
        parts = [p.con]
        for q, eps in p.args:
            parts.append(f"[{self.pattern(q)}]" if eps is IRR else self.pattern(q, True))
        s = " ".join(parts)
        return f"({s})" if nested else s

    def tele(self, tele: Telescope) -> tuple[str, list[tuple]]:
        parts: list[str] = []
        saved: list[tuple] = []
        for e in tele:
            if isinstance(e, Sig):
                ty = self.term(e.type)
                if e.name.hint == "_":
                    parts.append(f"[{ty}]" if e.eps is IRR else f"({ty})")
                    continue
                x, sv = self.bind(e.name)
                saved.append(sv)
                parts.append(f"[{x} : {ty}]" if e.eps is IRR else f"({x} : {ty})")
            else:
                parts.append(f"[{self.name(e.name)} = {self.term(e.term)}]")
        return " ".join(parts), saved


def pretty_term(t: Term) -> str:
    p = Printer()
    p.free(t.free_vars)
    return p.term(t)


def pretty_tele(tele: Telescope) -> str:
    return Printer().tele(tele)[0]


def pretty_module(m: ModuleAST) -> str:
    lines: list[str] = []
    if m.name != "Main":
        lines.append(f"module {m.name} where")
    for imp in m.imports:
        lines.append(f"import {imp}")
    if lines:
        lines.append("")
    for d in m.decls:
        match d:
            case TypeSig(name, eps, ty):
                s = pretty_term(ty)
                lines.append(f"[{name.hint}] : {s}" if eps is IRR else f"{name.hint} : {s}")
            case Def(name, term):
                lines.append(f"{name.hint} = {pretty_term(term)}")
                lines.append("")
            case Data(tycon, params, cons):
                p = Printer()
                ps, saved = p.tele(params)
                head = f"data {tycon} {ps} : Type where" if ps else f"data {tycon} : Type where"
                if not cons:
                    lines.append(head + " {}")
                else:
                    lines.append(head)
                    for c in cons:
                        cs, csaved = p.tele(c.tele)
                        for sv in reversed(csaved):
                            p.unbind(sv)
                        lines.append(f"  {c.name} of {cs}" if cs else f"  {c.name}")
                lines.append("")
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"
