"""Lexer and layout-sensitive parser for the concrete syntax.

Identifiers are parsed as variables first. A resolution pass afterwards turns
applications headed by a known type or data constructor name into ``TyCon``
and ``DataCon`` nodes, so constructors may be declared anywhere in a module.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from picheck.syntax import (
    IRR,
    REL,
    Ann,
    App,
    Arg,
    Binder,
    Binder2,
    Case,
    ConstructorDef,
    Contra,
    DataCon,
    Definition,
    Epsilon,
    Lam,
    Let,
    LetPair,
    LitUnit,
    Match,
    Name,
    PatCon,
    Pattern,
    PatVar,
    Pi,
    Pos,
    Prod,
    Refl,
    Sig,
    SourcePos,
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
    fresh,
    nat_literal,
    pattern_vars,
)

KEYWORDS = frozenset(
    "Type Unit if then else let in case of data where subst by contra Refl TRUSTME module import".split()
)

DEFAULT_TYCONS = frozenset({"Bool", "Nat"})
DEFAULT_DCONS = frozenset({"True", "False", "Zero", "Succ"})


class ParseError(Exception):
    def __init__(self, pos: SourcePos, message: str) -> None:
        super().__init__(f"{pos}: {message}")
        self.pos = pos
        self.message = message


# ---------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class TypeSig:
    name: Name
    eps: Epsilon
    type: Term
    pos: SourcePos | None = None


@dataclass(frozen=True)
class Def:
    name: Name
    term: Term
    pos: SourcePos | None = None


@dataclass(frozen=True)
class Data:
    tycon: str
    params: Telescope
    constructors: tuple[ConstructorDef, ...]
    pos: SourcePos | None = None


Decl = Union[TypeSig, Def, Data]


@dataclass
class ModuleAST:
    name: str
    imports: list[str] = field(default_factory=list)
    decls: list[Decl] = field(default_factory=list)
    file: str = "<input>"


# ---------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "num", "sym", "kw", "eof"
    text: str
    line: int
    col: int
    first: bool  # first token on its line


_TOKEN_RE = re.compile(
    r"""
    (?P<nl>\n)
  | (?P<ws>[ \t\r]+)
  | (?P<block>\{-)
  | (?P<comment>--[^\n]*)
  | (?P<num>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|[\\.:=()\[\]{}|,;])
    """,
    re.VERBOSE,
)


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    i, line, line_start = 0, 1, 0
    first = True
    n = len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        col = _column(text, line_start, i)
        if m is None:
            raise ParseError(SourcePos(file, line, col), f"unexpected character {text[i]!r}")
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
            first = True
        elif kind == "block":
            end = text.find("-}", m.end())
            if end < 0:
                raise ParseError(SourcePos(file, line, col), "unterminated comment")
            chunk = text[i : end + 2]
            newlines = chunk.count("\n")
            if newlines:
                line += newlines
                line_start = i + chunk.rfind("\n") + 1
            i = end + 2
            continue
        elif kind in ("ws", "comment"):
            pass
        else:
            word = m.group()
            if kind == "ident" and word in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, word, line, col, first))
            first = False
        i = m.end()
    tokens.append(Token("eof", "<end of input>", line + 1, 1, True))
    return tokens


def _column(text: str, line_start: int, i: int) -> int:
    col = 1
    for ch in text[line_start:i]:
        col = (col + 8 - (col - 1) % 8) if ch == "\t" else col + 1
    return col


# ---------------------------------------------------------------------------
# parser


_ATOM_START_SYMS = {"(", "{"}
_ATOM_START_KWS = {"Type", "Unit", "Refl", "TRUSTME"}


class Parser:
    def __init__(self, text: str, file: str = "<input>") -> None:
        self.file = file
        self.toks = tokenize(text, file)
        self.i = 0
        self.layout = [0]

    # -- token helpers

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def pos(self, tok: Token | None = None) -> SourcePos:
        tok = tok or self.peek()
        return SourcePos(self.file, tok.line, tok.col)

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.i += 1
        return tok

    def fail(self, expected: str) -> ParseError:
        tok = self.peek()
        return ParseError(self.pos(tok), f"expected {expected}, found '{tok.text}'")

    def is_(self, text: str, tok: Token | None = None) -> bool:
        tok = tok or self.peek()
        return tok.kind in ("sym", "kw") and tok.text == text

    def expect(self, text: str) -> Token:
        if not self.is_(text):
            raise self.fail(f"'{text}'")
        return self.advance()

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.fail("an identifier")
        return self.advance()

    def at_boundary(self) -> bool:
        tok = self.peek()
        return tok.kind == "eof" or (tok.first and tok.col <= self.layout[-1])

    def continues(self, text: str) -> bool:
        return self.is_(text) and not self.at_boundary()

    def wrap(self, tok: Token, t: Term) -> Term:
        return t if isinstance(t, Pos) else Pos(self.pos(tok), t)

    # -- modules

    def module(self) -> ModuleAST:
        mod = ModuleAST(name="Main", file=self.file)
        if self.is_("module"):
            self.advance()
            mod.name = self.ident().text
            self.expect("where")
        while self.is_("import"):
            self.advance()
            mod.imports.append(self.ident().text)
        tok = self.peek()
        if tok.kind == "eof":
            return mod
        col = tok.col
        self.layout.append(col)
        while self.peek().kind != "eof":
            tok = self.peek()
            if not tok.first or tok.col != col:
                raise self.fail("a declaration at column %d" % col)
            mod.decls.append(self.decl())
        self.layout.pop()
        return mod

    def decl(self) -> Decl:
        tok = self.peek()
        if self.is_("data"):
            return self.data_decl()
        name = self.ident()
        if self.is_(":"):
            self.advance()
            return TypeSig(Name(name.text), REL, self.expr(), self.pos(tok))
        if self.is_("="):
            self.advance()
            return Def(Name(name.text), self.expr(), self.pos(tok))
        raise self.fail("':' or '='")

    def data_decl(self) -> Data:
        start = self.expect("data")
        tycon = self.ident().text
        params: list[Sig] = []
        while self.is_("("):
            self.advance()
            x = self.ident().text
            self.expect(":")
            self.layout.append(0)
            params.append(Sig(Name(x), REL, self.expr()))
            self.layout.pop()
            self.expect(")")
        self.expect(":")
        self.expect("Type")
        cons: list[ConstructorDef] = []
        if self.is_("where"):
            self.advance()
        if self.is_("{") and not self.at_boundary():
            self.advance()
            self.layout.append(0)
            while not self.is_("}"):
                cons.append(self.constructor())
                if not self.is_(";"):
                    break
                self.advance()
            self.layout.pop()
            self.expect("}")
        else:
            while self.peek().kind == "ident" and not self.at_boundary():
                cons.append(self.constructor())
        return Data(tycon, tuple(params), tuple(cons), self.pos(start))

    def constructor(self) -> ConstructorDef:
        name = self.ident().text
        tele: list = []
        if self.continues("of"):
            self.advance()
            while (self.is_("(") or self.is_("[")) and not self.at_boundary():
                tele.append(self.tele_entry())
        return ConstructorDef(name, tuple(tele))

    def tele_entry(self):
        open_tok = self.advance()
        close = ")" if open_tok.text == "(" else "]"
        eps = REL if open_tok.text == "(" else IRR
        self.layout.append(0)
        if self.peek().kind == "ident" and self.is_(":", self.peek(1)):
            x = self.advance().text
            self.advance()
            entry = Sig(Name(x), eps, self.expr())
        else:
            body = self.expr()
            inner = _peel_pos(body)
            if eps is IRR and isinstance(inner, TyEq):
                lhs = _peel_pos(inner.lhs)
                if not isinstance(lhs, Var):
                    raise ParseError(self.pos(open_tok), "constraint must have a variable on the left")
                entry = Definition(lhs.name, inner.rhs)
            else:
                entry = Sig(Name("_"), eps, body)
        self.layout.pop()
        self.expect(close)
        return entry

    # -- expressions

    def expr(self) -> Term:
        tok = self.peek()
        if self.is_("\\"):
            return self.wrap(tok, self.lambda_())
        if self.is_("let"):
            return self.wrap(tok, self.let_())
        if self.is_("if"):
            self.advance()
            c = self.expr()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            b = self.expr()
            return self.wrap(
                tok,
                Case(c, (Match(PatCon("True"), a), Match(PatCon("False"), b))),
            )
        if self.is_("case"):
            return self.wrap(tok, self.case_())
        if self.is_("subst"):
            self.advance()
            a = self.expr()
            self.expect("by")
            return self.wrap(tok, Subst(a, self.expr()))
        if self.is_("contra"):
            self.advance()
            return self.wrap(tok, Contra(self.expr()))
        return self.arrow()

    def lambda_(self) -> Term:
        start = self.expect("\\")
        params: list[tuple[Name, Epsilon]] = []
        while True:
            if self.is_("["):
                self.advance()
                params.append((Name(self.ident().text), IRR))
                self.expect("]")
            elif self.peek().kind == "ident":
                params.append((Name(self.advance().text), REL))
            else:
                break
        if not params:
            raise self.fail("a lambda parameter")
        if not self.is_("."):
            tok = self.peek()
            raise ParseError(self.pos(start), f"incomplete lambda: expected '.', found '{tok.text}'")
        self.advance()
        body = self.expr()
        for x, eps in reversed(params):
            body = Lam(eps, Binder(x, body))
        return body

    def let_(self) -> Term:
        self.expect("let")
        if self.is_("("):
            self.advance()
            x = Name(self.ident().text)
            self.expect(",")
            y = Name(self.ident().text)
            self.expect(")")
            self.expect("=")
            rhs = self.expr()
            self.expect("in")
            return LetPair(rhs, Binder2(x, y, self.expr()))
        x = Name(self.ident().text)
        self.expect("=")
        rhs = self.expr()
        self.expect("in")
        return Let(rhs, Binder(x, self.expr()))

    def case_(self) -> Term:
        self.expect("case")
        scrut = self.expr()
        self.expect("of")
        matches: list[Match] = []
        if self.is_("{") and not self.at_boundary():
            self.advance()
            self.layout.append(0)
            while not self.is_("}"):
                matches.append(self.branch())
                if not self.is_(";"):
                    break
                self.advance()
            self.layout.pop()
            self.expect("}")
            return Case(scrut, tuple(matches))
        if self.at_boundary() or self.peek().col <= self.layout[-1]:
            return Case(scrut, ())
        col = self.peek().col
        self.layout.append(col)
        while True:
            matches.append(self.branch())
            tok = self.peek()
            if tok.kind == "eof" or not tok.first or tok.col != col:
                break
        self.layout.pop()
        return Case(scrut, tuple(matches))

    def branch(self) -> Match:
        pat = self.pattern(top=True)
        self.expect("->")
        return Match(pat, self.expr())

    def pattern(self, top: bool = False) -> Pattern:
        tok = self.peek()
        if self.is_("("):
            self.advance()
            p = self.pattern(top=True)
            self.expect(")")
            return p
        if tok.kind == "num":
            self.advance()
            return _nat_pattern(int(tok.text))
        name = self.ident().text
        if not top:
            return _pat_name(name)
        args: list[tuple[Pattern, Epsilon]] = []
        while not self.at_boundary():
            if self.is_("["):
                self.advance()
                args.append((self.pattern(top=True), IRR))
                self.expect("]")
            elif self.peek().kind in ("ident", "num") or self.is_("("):
                args.append((self.pattern(), REL))
            else:
                break
        if not args:
            return _pat_name(name)
        return PatCon(name, tuple(args))

    def arrow(self) -> Term:
        tok = self.peek()
        if self.is_("["):
            self.advance()
            x = Name(self.ident().text)
            self.expect(":")
            dom = self.expr()
            self.expect("]")
            self.expect("->")
            return self.wrap(tok, Pi(IRR, dom, Binder(x, self.expr())))
        if self.is_("(") and self.peek(1).kind == "ident" and self.is_(":", self.peek(2)):
            save = self.i
            self.advance()
            x = Name(self.advance().text)
            self.advance()
            self.layout.append(0)
            dom = self.expr()
            self.layout.pop()
            if self.is_(")") and self.is_("->", self.peek(1)):
                self.advance()
                self.advance()
                return self.wrap(tok, Pi(REL, dom, Binder(x, self.expr())))
            self.i = save
        lhs = self.equality()
        if self.continues("->"):
            self.advance()
            return self.wrap(tok, Pi(REL, lhs, Binder(Name("_"), self.expr())))
        return lhs

    def equality(self) -> Term:
        tok = self.peek()
        lhs = self.application()
        if self.continues("="):
            self.advance()
            return self.wrap(tok, TyEq(lhs, self.application()))
        return lhs

    def starts_atom(self) -> bool:
        tok = self.peek()
        if tok.kind in ("ident", "num"):
            return True
        if tok.kind == "kw":
            return tok.text in _ATOM_START_KWS
        return tok.kind == "sym" and tok.text in _ATOM_START_SYMS

    def application(self) -> Term:
        tok = self.peek()
        if not self.starts_atom() or self.at_boundary():
            raise self.fail("an expression")
        t = self.atom()
        applied = False
        while not self.at_boundary():
            if self.is_("["):
                self.advance()
                self.layout.append(0)
                arg = self.expr()
                self.layout.pop()
                self.expect("]")
                t = App(t, Arg(IRR, arg))
            elif self.starts_atom():
                t = App(t, Arg(REL, self.atom()))
            else:
                break
            applied = True
        return self.wrap(tok, t) if applied else t

    def atom(self) -> Term:
        tok = self.advance()
        if tok.kind == "ident":
            return self.wrap(tok, Var(Name(tok.text)))
        if tok.kind == "num":
            return self.wrap(tok, nat_literal(int(tok.text)))
        if tok.kind == "kw":
            node = {"Type": TyType, "Unit": TyUnit, "Refl": Refl, "TRUSTME": TrustMe}[tok.text]()
            return self.wrap(tok, node)
        if tok.text == "(":
            if self.is_(")"):
                self.advance()
                return self.wrap(tok, LitUnit())
            self.layout.append(0)
            a = self.expr()
            if self.is_(":"):
                self.advance()
                a = Ann(a, self.expr())
            elif self.is_(","):
                self.advance()
                a = Prod(a, self.expr())
            self.layout.pop()
            self.expect(")")
            return self.wrap(tok, a)
        if tok.text == "{":
            self.layout.append(0)
            x = Name(self.ident().text)
            self.expect(":")
            a = self.expr()
            self.expect("|")
            b = self.expr()
            self.layout.pop()
            self.expect("}")
            return self.wrap(tok, TySigma(a, Binder(x, b)))
        self.i -= 1
        raise self.fail("an expression")

    def finish(self) -> None:
        if self.peek().kind != "eof":
            raise self.fail("end of input")


def _peel_pos(t: Term) -> Term:
    while isinstance(t, Pos):
        t = t.term
    return t


def _pat_name(name: str) -> Pattern:
    if name == "_":
        return PatVar(fresh(Name("_")))
    return PatVar(Name(name))


def _nat_pattern(n: int) -> Pattern:
    p: Pattern = PatCon("Zero")
    for _ in range(n):
        p = PatCon("Succ", ((p, REL),))
    return p


# ---------------------------------------------------------------------------
# constructor resolution


class Resolver:
    def __init__(self, tycons: Iterable[str], dcons: Iterable[str]) -> None:
        self.tycons = frozenset(tycons)
        self.dcons = frozenset(dcons)

    def pattern(self, p: Pattern) -> Pattern:
        if isinstance(p, PatVar):
            if p.name.uid == 0 and p.name.hint in self.dcons:
                return PatCon(p.name.hint)
            return p
        return PatCon(p.con, tuple((self.pattern(q), e) for q, e in p.args))

    def term(self, t: Term, bound: frozenset[Name] = frozenset()) -> Term:
        go = self.term
        match t:
            case Pos(p, a):
                return Pos(p, go(a, bound))
            case Var(x):
                if x not in bound and x.uid == 0:
                    if x.hint in self.tycons:
                        return TyCon(x.hint)
                    if x.hint in self.dcons:
                        return DataCon(x.hint)
                return t
            case App():
                head, args = _spine(t)
                inner = _peel_pos(head)
                rargs = tuple(Arg(a.eps, go(a.term, bound)) for a in args)
                if isinstance(inner, Var) and inner.name not in bound and inner.name.uid == 0:
                    if inner.name.hint in self.tycons:
                        return TyCon(inner.name.hint, rargs)
                    if inner.name.hint in self.dcons:
                        return DataCon(inner.name.hint, rargs)
                out = go(head, bound)
                for a in rargs:
                    out = App(out, a)
                return out
            case Lam(eps, b):
                return Lam(eps, Binder(b.bound, go(b.body, bound | {b.bound})))
            case Pi(eps, a, b):
                return Pi(eps, go(a, bound), Binder(b.bound, go(b.body, bound | {b.bound})))
            case TySigma(a, b):
                return TySigma(go(a, bound), Binder(b.bound, go(b.body, bound | {b.bound})))
            case Let(a, b):
                return Let(go(a, bound), Binder(b.bound, go(b.body, bound | {b.bound})))
            case LetPair(a, b2):
                inner_bound = bound | {b2.bound1, b2.bound2}
                return LetPair(go(a, bound), Binder2(b2.bound1, b2.bound2, go(b2.body, inner_bound)))
            case Ann(a, ty):
                return Ann(go(a, bound), go(ty, bound))
            case Prod(a, b):
                return Prod(go(a, bound), go(b, bound))
            case TyEq(a, b):
                return TyEq(go(a, bound), go(b, bound))
            case Subst(a, b):
                return Subst(go(a, bound), go(b, bound))
            case Contra(a):
                return Contra(go(a, bound))
            case TyCon(n, args):
                return TyCon(n, tuple(Arg(a.eps, go(a.term, bound)) for a in args))
            case DataCon(n, args):
                return DataCon(n, tuple(Arg(a.eps, go(a.term, bound)) for a in args))
            case Case(s, ms):
                out = []
                for m in ms:
                    pat = self.pattern(m.pattern)
                    out.append(Match(pat, go(m.body, bound | set(pattern_vars(pat)))))
                return Case(go(s, bound), tuple(out))
        return t

    def tele(self, tele: Telescope, bound: frozenset[Name] = frozenset()) -> tuple[Telescope, frozenset[Name]]:
        out = []
        for e in tele:
            if isinstance(e, Sig):
                out.append(Sig(e.name, e.eps, self.term(e.type, bound)))
                bound = bound | {e.name}
            else:
                out.append(Definition(e.name, self.term(e.term, bound)))
        return tuple(out), bound

    def decl(self, d: Decl) -> Decl:
        match d:
            case TypeSig(n, eps, ty, p):
                return TypeSig(n, eps, self.term(ty), p)
            case Def(n, a, p):
                return Def(n, self.term(a), p)
            case Data(tc, params, cons, p):
                params2, bound = self.tele(params)
                cons2 = tuple(ConstructorDef(c.name, self.tele(c.tele, bound)[0]) for c in cons)
                return Data(tc, params2, cons2, p)
        raise TypeError(d)


def _spine(t: Term) -> tuple[Term, list[Arg]]:
    args: list[Arg] = []
    while True:
        if isinstance(t, App):
            args.append(t.arg)
            t = t.fun
        elif isinstance(t, Pos) and isinstance(_peel_pos(t), App):
            t = t.term
        else:
            break
    args.reverse()
    return t, args


# ---------------------------------------------------------------------------
# entry points


def parse_imports(text: str, file: str = "<input>") -> tuple[str | None, list[str]]:
    """Read only the module header and import list."""
    p = Parser(text, file)
    name = None
    if p.is_("module"):
        p.advance()
        name = p.ident().text
        p.expect("where")
    imports = []
    while p.is_("import"):
        p.advance()
        imports.append(p.ident().text)
    return name, imports


def parse_module(
    text: str,
    file: str = "<input>",
    tycons: Iterable[str] = DEFAULT_TYCONS,
    dcons: Iterable[str] = DEFAULT_DCONS,
) -> ModuleAST:
    p = Parser(text, file)
    mod = p.module()
    tycons, dcons = set(tycons), set(dcons)
    for d in mod.decls:
        if isinstance(d, Data):
            tycons.add(d.tycon)
            dcons.update(c.name for c in d.constructors)
    r = Resolver(tycons, dcons)
    mod.decls = [r.decl(d) for d in mod.decls]
    return mod


def parse_term(
    text: str,
    file: str = "<input>",
    tycons: Iterable[str] = DEFAULT_TYCONS,
    dcons: Iterable[str] = DEFAULT_DCONS,
) -> Term:
    p = Parser(text, file)
    t = p.expr()
    p.finish()
    return Resolver(tycons, dcons).term(t)
