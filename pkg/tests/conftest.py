import sys
import threading
from pathlib import Path

import pytest

from picheck.driver import DriverConfig, Loader, new_context
from picheck.environment import Context, Session
from picheck.parser import parse_term
from picheck.syntax import IRR, REL, Name, Sig, Term

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "pi"
REJECT = Path(__file__).resolve().parent / "reject"

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))
threading.stack_size(256 * 1024 * 1024)


def load(*modules: str, prelude: bool = True, session: Session | None = None) -> Context:
    """A context with the named corpus modules (and their imports) checked."""
    ctx = new_context(session, prelude)
    loader = Loader(DriverConfig(CORPUS / "Main.pi", [CORPUS], prelude=prelude), ctx)
    for m in modules:
        loader.load(CORPUS / f"{m}.pi")
    return ctx


def term(ctx: Context, src: str) -> Term:
    env = ctx.globals
    return parse_term(src, tycons=env.tycon_names(), dcons=env.dcon_names())


def local(ctx: Context, x: str, ty: str, irr: bool = False) -> Context:
    return ctx.extend(Sig(Name(x), IRR if irr else REL, term(ctx, ty)))


@pytest.fixture(scope="session")
def prelude_ctx() -> Context:
    return new_context()


@pytest.fixture(scope="session")
def corpus_ctx() -> Context:
    return load("Fin", "Beautiful", "Lec1")


def tele_term(tele, tail: Term) -> Term:
    """Read a telescope back as nested Pi types so it can be compared with aeq."""
    from picheck.syntax import Binder, Pi, TyEq, Var, fresh

    out = tail
    for e in reversed(tele):
        if isinstance(e, Sig):
            out = Pi(e.eps, e.type, Binder(e.name, out))
        else:
            out = Pi(IRR, TyEq(Var(e.name), e.term), Binder(fresh(Name("_")), out))
    return out


def decl_aeq(d1, d2) -> bool:
    from picheck.parser import Data, Def, TypeSig
    from picheck.syntax import TyCon, TyUnit, aeq

    if type(d1) is not type(d2):
        return False
    match d1:
        case TypeSig():
            return d1.name == d2.name and d1.eps == d2.eps and aeq(d1.type, d2.type)
        case Def():
            return d1.name == d2.name and aeq(d1.term, d2.term)
        case Data():
            if d1.tycon != d2.tycon or len(d1.constructors) != len(d2.constructors):
                return False
            if not aeq(tele_term(d1.params, TyUnit()), tele_term(d2.params, TyUnit())):
                return False
            for c1, c2 in zip(d1.constructors, d2.constructors):
                tail = TyCon(c1.name)
                if c1.name != c2.name:
                    return False
                if not aeq(tele_term(d1.params + c1.tele, tail), tele_term(d2.params + c2.tele, tail)):
                    return False
            return True
    return False


def corpus_files() -> list[Path]:
    return sorted(CORPUS.glob("*.pi"))


def tycons_dcons(text: str) -> tuple[set[str], set[str]]:
    """Constructor names a corpus file can see, for parsing it standalone."""
    import re

    tycons, dcons = {"Bool", "Nat"}, {"True", "False", "Zero", "Succ"}
    for f in corpus_files():
        src = f.read_text()
        tycons.update(re.findall(r"^data\s+(\w+)", src, re.M))
        dcons.update(re.findall(r"^\s+([A-Z]\w*)(?:\s+of\b|\s*$)", src, re.M))
    return tycons, dcons


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
