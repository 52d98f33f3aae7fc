import re

import pytest

from conftest import corpus_files, decl_aeq, tycons_dcons
from picheck.parser import Data, Def, ParseError, TypeSig, parse_imports, parse_module, parse_term, tokenize
from picheck.pretty import pretty_module, pretty_term
from picheck.syntax import (
    IRR,
    REL,
    App,
    Arg,
    Case,
    DataCon,
    Lam,
    Pi,
    Pos,
    Sig,
    Definition,
    TyCon,
    TyEq,
    TySigma,
    Var,
    aeq,
    nat_literal,
    strip,
)


def parse_file(path, text=None):
    text = path.read_text() if text is None else text
    tycons, dcons = tycons_dcons(text)
    return parse_module(text, str(path), tycons, dcons)


def test_identity_function():
    m = parse_module("module M where\nid : (x:Type) -> x -> x\nid = \\x y. y\n")
    sig, d = m.decls
    assert isinstance(sig, TypeSig) and sig.name.hint == "id"
    assert aeq(sig.type, parse_term("(a:Type) -> a -> a"))
    assert aeq(d.term, parse_term("\\a b. b"))
    assert isinstance(strip(d.term), Lam)


def test_dangling_lambda_is_parse_error():
    with pytest.raises(ParseError) as e:
        parse_module("bad = \\x\n", "bad.pi")
    assert e.value.pos.line == 1 and e.value.pos.column == 7


def test_empty_data_type():
    (d,) = parse_module("data Void : Type where {}\n").decls
    assert isinstance(d, Data) and d.tycon == "Void" and d.constructors == ()


def test_data_with_constraints():
    src = "data Vec (A : Type) (n : Nat) : Type where\n  Nil of [n = Zero]\n  Cons of [m:Nat] (A) (Vec A m) [n = Succ m]\n"
    (d,) = parse_module(src).decls
    assert [e.name.hint for e in d.params] == ["A", "n"]
    nil, cons = d.constructors
    assert isinstance(nil.tele[0], Definition) and strip(nil.tele[0].term) == DataCon("Zero")
    m, a, tail, c = cons.tele
    assert m.eps is IRR and a.eps is REL and a.name.hint == "_"
    assert isinstance(c, Definition) and c.name.hint == "n"
    assert strip(tail.type) == TyCon("Vec", tuple(strip(tail.type).params))


def test_constraint_needs_variable_on_left():
    with pytest.raises(ParseError):
        parse_module("data T (n : Nat) : Type where\n  K of [Succ n = 3]\n")


def test_numerals_become_nat_literals():
    assert strip(parse_term("3")) == nat_literal(3)


def test_application_with_irrelevant_arg():
    t = strip(parse_term("f [A] x"))
    assert isinstance(t, App) and t.arg.eps is REL
    assert t.fun.arg.eps is IRR


def test_arrow_forms():
    t = strip(parse_term("[x:Type] -> (y:x) -> x -> Type"))
    assert isinstance(t, Pi) and t.eps is IRR
    assert isinstance(t.bind.body, Pi) and t.bind.body.eps is REL


def test_equality_binds_looser_than_application():
    t = strip(parse_term("f a = g b"))
    assert isinstance(t, TyEq) and isinstance(t.lhs, App)


def test_sigma_and_pairs():
    t = strip(parse_term("{ x : Nat | x = x }"))
    assert isinstance(t, TySigma)


def test_if_is_case_on_bool():
    t = strip(parse_term("if b then 1 else 0"))
    assert isinstance(t, Case) and [m.pattern.con for m in t.matches] == ["True", "False"]


def test_layout_case_branches():
    src = "f = \\x. case x of\n  Zero -> True\n  Succ n -> False\ng = 1\n"
    f, g = parse_module(src).decls
    assert len(strip(f.term).bind.body.matches) == 2
    assert g.name.hint == "g"


def test_explicit_braces_case():
    t = strip(parse_term("case x of { Zero -> True; Succ n -> False }"))
    assert len(t.matches) == 2


def test_nested_case_layout():
    src = (
        "f = \\a b. case a of\n"
        "   True -> case b of\n"
        "      True -> 1\n"
        "      False -> 2\n"
        "   False -> 3\n"
    )
    (f,) = parse_module(src).decls
    outer = strip(f.term).bind.body.bind.body
    assert len(outer.matches) == 2
    assert len(outer.matches[0].body.matches) == 2


def test_comments_are_skipped():
    src = "-- leading\n{- block\n comment -}\nx : Bool -- trailing\nx = True\n"
    assert len(parse_module(src).decls) == 2


def test_tokens_carry_positions():
    toks = tokenize("a\n  bc")
    assert (toks[1].line, toks[1].col) == (2, 3)


def test_imports():
    assert parse_imports("module A where\nimport B\nimport C\nx = 1\n") == ("A", ["B", "C"])


def test_parse_error_has_position():
    with pytest.raises(ParseError) as e:
        parse_module("x : Bool\nx = (True\n", "e.pi")
    assert e.value.pos.file == "e.pi" and e.value.pos.line >= 2


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_positions_within_file(path):
    text = path.read_text()
    lines = text.split("\n")
    mod = parse_file(path, text)

    def walk(t):
        if isinstance(t, Pos):
            p = t.pos
            assert 1 <= p.line <= len(lines)
            assert 1 <= p.column <= len(lines[p.line - 1]) + 1
        for child in _children(t):
            walk(child)

    for d in mod.decls:
        if isinstance(d, TypeSig):
            walk(d.type)
        elif isinstance(d, Def):
            walk(d.term)


def _children(t):
    from dataclasses import fields, is_dataclass

    out = []
    if not is_dataclass(t):
        return out
    for f in fields(t):
        if f.name == "pos":
            continue
        v = getattr(t, f.name)
        stack = [v]
        while stack:
            v = stack.pop()
            if isinstance(v, (tuple, list)):
                stack.extend(v)
            elif is_dataclass(v) and not isinstance(v, type):
                if hasattr(v, "free_vars"):
                    out.append(v)
                else:
                    stack.extend(getattr(v, g.name) for g in fields(v))
    return out


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_pretty_round_trip(path):
    m1 = parse_file(path)
    printed = pretty_module(m1)
    m2 = parse_file(path, printed)
    assert len(m1.decls) == len(m2.decls)
    for a, b in zip(m1.decls, m2.decls):
        assert decl_aeq(a, b), (a, b)
    # printing is a fixpoint after one round
    assert pretty_module(m2) == printed


def _reindent(text: str, k: int) -> str:
    return "\n".join(" " * k + line if line.startswith(" ") else line for line in text.split("\n"))


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
@pytest.mark.parametrize("k", [1, 3])
def test_reindent_invariance(path, k):
    text = path.read_text()
    m1 = parse_file(path, text)
    m2 = parse_file(path, _reindent(text, k))
    for a, b in zip(m1.decls, m2.decls, strict=True):
        assert decl_aeq(a, b)


def test_pretty_term_shapes():
    assert pretty_term(parse_term("(x:Type) -> x -> x")) == "(x : Type) -> x -> x"
    assert pretty_term(parse_term("[x:Type] -> x")) == "[x : Type] -> x"
    assert pretty_term(parse_term("Succ (Succ Zero)")) == "2"
    assert pretty_term(parse_term("f [a] (g b)")) == "f [a] (g b)"
    assert pretty_term(parse_term("if b then 1 else 0")) == "if b then 1 else 0"


def test_pretty_avoids_capture():
    from picheck.syntax import Binder, Name, fresh

    x1, x2 = fresh(Name("x")), fresh(Name("x"))
    t = Lam(REL, Binder(x1, Lam(REL, Binder(x2, App(Var(x1), Arg(REL, Var(x2)))))))
    s = pretty_term(t)
    assert re.fullmatch(r"\\x (x\d)\. x \1", s), s
