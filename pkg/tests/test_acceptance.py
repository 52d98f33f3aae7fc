"""Acceptance criteria. Each test records one PASS/FAIL line in the summary."""
import shutil
import subprocess
import sys
import time
from dataclasses import replace

import pytest

from conftest import ACCEPTANCE, CORPUS, REJECT, corpus_files, load, local, term
from gen import FreeVars, PatternGen, TypedGen, UntypedGen, to_term
from oracle import oracle_equal
from picheck.driver import check_source, new_context
from picheck.environment import CheckError, ErrorClass, Session, UnificationFailure, empty_context
from picheck.equal import ensure_tcon, equate, whnf
from picheck.syntax import (
    IRR,
    REL,
    Binder,
    Definition,
    Lam,
    Name,
    PatVar,
    Pos,
    Sig,
    SourcePos,
    TyCon,
    TyType,
    Var,
    aeq,
    fresh,
    fv,
    strip,
    subst,
    unbind,
)
from picheck.typecheck import check_type, declare_pat, instantiate_constructor, tc_arg_tele

PICHECK = [sys.executable, "-m", "picheck"]
PROPERTY_CASES = 10_000


def report(n: int, text: str, ok: bool) -> None:
    ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}")
    print(ACCEPTANCE[-1])
    assert ok, text


def cli(path, *args, timeout=None):
    cmd = PICHECK + [str(path), "--path", str(path.parent), "--path", str(CORPUS), *args]
    return subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)


def corpus_args(path):
    return ["--no-prelude"] if path.stem == "Lec4" else []


def error_class(stderr: str) -> str:
    return stderr.splitlines()[0].rsplit(": ", 1)[-1] if stderr else ""


# -- 1


def test_accept_corpus():
    files = corpus_files()
    slow, failed = [], []
    for f in files:
        t0 = time.perf_counter()
        r = cli(f, *corpus_args(f))
        dt = time.perf_counter() - t0
        if r.returncode != 0:
            failed.append(f"{f.name}: {r.stderr.strip()}")
        if dt >= 1.0:
            slow.append(f"{f.name} {dt:.2f}s")
    report(
        1,
        f"accept corpus: {len(files) - len(failed)}/{len(files)} files check, each under 1 s"
        + (f" (failed: {failed}; slow: {slow})" if failed or slow else ""),
        not failed and not slow and len(files) >= 11,
    )


# -- 2

REJECTS = {
    "IdPrime.pi": "IrrelevantUse",
    "PropRel.pi": "IrrelevantUse",
    "MissingFalse.pi": "NonExhaustive",
    "Beautiful4.pi": "TypeMismatch",
}


def _hooked_prod(**hook) -> CheckError | None:
    ctx = new_context(Session(**hook))
    try:
        check_source(ctx, (CORPUS / "Prod.pi").read_text(), str(CORPUS / "Prod.pi"))
    except CheckError as e:
        return e
    return None


def test_reject_corpus():
    got = {}
    for name, want in REJECTS.items():
        r = cli(REJECT / name)
        got[name] = (r.returncode, error_class(r.stderr))
    b4 = cli(REJECT / "Beautiful4.pi").stderr
    constraint_msg = "Constraint n = 3 is not satisfied: 4 is not equal to 3" in b4
    hooks = {}
    for label, hook in (("unfold off", {"unfold": False}), ("aeq only", {"aeq_only": True})):
        e = _hooked_prod(**hook)
        hooks[label] = e is not None and e.cls is ErrorClass.TypeMismatch and "should have a function type" in e.render()
    ok = all(got[n] == (1, w) for n, w in REJECTS.items()) and constraint_msg and all(hooks.values())
    report(2, f"reject corpus classes {got}; Beautiful 4 constraint message {constraint_msg}; prod hooks {hooks}", ok)


# -- 3


def test_equality_checks():
    ctx = load("Nat")
    results = {}
    try:
        equate(ctx, term(ctx, "plus 1 1"), term(ctx, "2"))
        results["plus 1 1 == 2"] = True
    except CheckError:
        results["plus 1 1 == 2"] = False
    c = local(ctx, "p", "[i:Nat] -> Nat")
    try:
        equate(c, term(c, "p [1]"), term(c, "p [2]"))
        results["p [1] == p [2]"] = True
    except CheckError:
        results["p [1] == p [2]"] = False
    try:
        equate(ctx, term(ctx, "Type"), term(ctx, "(x:Type) -> Type"))
        results["Type != (x:Type) -> Type"] = False
    except CheckError as e:
        results["Type != (x:Type) -> Type"] = e.cls is ErrorClass.TypeMismatch
    report(3, f"equality checks {results}", all(results.values()))


# -- 4


def test_oracle_agreement():
    ctx = load("Nat")
    free = FreeVars.make()
    c = ctx.extend_all(free.sigs())
    defs = dict(ctx.globals.defs)
    t0 = time.perf_counter()
    n = agree = equal = 0
    disagreements = []
    for seed in range(600):
        g = TypedGen(seed, free)
        ty = g.random_type()
        a, b = g.independent(ty) if seed % 3 == 0 else g.pair_of(ty)
        T = to_term(ty)
        check_type(c, a, T)
        check_type(c, b, T)
        expected = oracle_equal(defs, a, b)
        try:
            equate(c, a, b)
            actual = True
        except CheckError:
            actual = False
        n += 1
        equal += expected
        if actual == expected:
            agree += 1
        else:
            disagreements.append(seed)
    dt = time.perf_counter() - t0
    report(
        4,
        f"oracle agreement {agree}/{n} pairs ({2 * n} terms, {equal} equal, {n - equal} unequal) in {dt:.1f}s"
        + (f"; disagreeing seeds {disagreements[:10]}" if disagreements else ""),
        n >= 500 and agree == n and dt < 60 and 0 < equal < n,
    )


# -- 5


def _subst_aeq_laws(failures: list) -> int:
    g = UntypedGen(2024)
    x, y = Name("x"), Name("y")
    pos = SourcePos("p.pi", 1, 1)
    for i in range(PROPERTY_CASES):
        t = g.term()
        a = g.term(3)
        c = g.term(2)
        laws = {
            "reflexive": aeq(t, t),
            "positions": aeq(Pos(pos, t), t),
            "identity": aeq(subst(x, Var(x), t), t),
            "vacuous": x in fv(t) or aeq(subst(x, a, t), t),
            "fv": fv(subst(x, a, t)) <= (fv(t) - {x}) | fv(a),
            "rebind": aeq(Lam(REL, Binder(*unbind(Binder(x, t)))), Lam(REL, Binder(x, t))),
            "symmetric": aeq(t, a) == aeq(a, t),
            "composition": x in fv(c)
            or aeq(subst(y, c, subst(x, a, t)), subst(x, subst(y, c, a), subst(y, c, t))),
        }
        bad = [k for k, v in laws.items() if not v]
        if bad:
            failures.append((i, bad))
    return PROPERTY_CASES


def _whnf_idempotent(failures: list) -> int:
    ctx = load("Nat")
    free = FreeVars.make()
    c = ctx.extend_all(free.sigs())
    n = 0
    seed = 0
    while n < PROPERTY_CASES:
        g = TypedGen(seed, free)
        seed += 1
        for t in g.pair_of(g.random_type()):
            w = whnf(c, t)
            if not aeq(whnf(c, w), w):
                failures.append(seed)
            try:
                equate(c, t, w)
            except CheckError:
                failures.append(("equate", seed))
            n += 1
    return n


def _resurrect_idempotent(failures: list) -> int:
    import random

    rng = random.Random(99)
    for i in range(PROPERTY_CASES):
        ctx = empty_context()
        for _ in range(rng.randrange(8)):
            x = fresh(Name(rng.choice("abcxyz")))
            if rng.random() < 0.2:
                ctx = ctx.extend(Definition(x, TyType()))
            else:
                ctx = ctx.extend(Sig(x, rng.choice([REL, IRR]), TyType()))
        r = ctx.resurrect()
        rr = r.resurrect()
        ok = (
            rr.locals == r.locals
            and all(s.eps is REL for s in r.sigs.values())
            and [getattr(e, "name") for e in r.locals] == [e.name for e in ctx.locals]
            and dict(r.defs) == dict(ctx.defs)
        )
        if not ok:
            failures.append(i)
    return PROPERTY_CASES


def _constraint_round_trip(failures: list) -> int:
    ctx = load("Fin", "Beautiful")
    a0, n0 = fresh(Name("A")), fresh(Name("n"))
    base = ctx.extend(Sig(a0, REL, TyType())).extend(Sig(n0, REL, TyCon("Nat")))
    dts = ctx.globals.datatypes
    g = PatternGen(7)
    n = 0
    while n < PROPERTY_CASES:
        ty = g.scrutinee_type(a0, n0)
        pat = g.pattern(dts, ty, depth=3)
        if isinstance(pat, PatVar):
            continue
        try:
            delta, t = declare_pat(base, pat, REL, ty)
        except UnificationFailure:
            continue  # inaccessible: nothing to round-trip
        c = base.extend_all(delta)
        tycon, params = ensure_tcon(c, ty)
        dt = dts[tycon]
        ptele, ctele = instantiate_constructor(dt, dt.constructor(t.name))
        s = {e.name: p.term for e, p in zip(ptele, params)}
        try:
            tc_arg_tele(c, t.args, ctele, s)
            check_type(c, t, ty)
        except CheckError as e:
            failures.append((str(ty), str(pat), e.message))
        n += 1
    return n


@pytest.mark.parametrize(
    "name,suite",
    [
        ("subst/aeq laws", _subst_aeq_laws),
        ("whnf idempotence", _whnf_idempotent),
        ("resurrect idempotence", _resurrect_idempotent),
        ("declarePat/tcArgTele round trip", _constraint_round_trip),
    ],
)
def test_property_suites(name, suite):
    failures: list = []
    n = suite(failures)
    report(5, f"{name}: {n} cases, {len(failures)} failures" + (f" e.g. {failures[:3]}" if failures else ""),
           n >= PROPERTY_CASES and not failures)


# -- 6


def test_regularity_over_corpus():
    bad = []
    for f in corpus_files():
        r = cli(f, "--regularity", *corpus_args(f))
        if r.returncode != 0:
            bad.append(f"{f.name}: {r.stderr.strip()}")
    report(6, f"--regularity over {len(corpus_files())} corpus files, {len(bad)} failures {bad}", not bad)


# -- 7


def test_divergence_containment():
    lec1 = cli(CORPUS / "Lec1.pi")
    limited = cli(REJECT / "Loop.pi", "--step-limit", "10000", timeout=60)
    stepped = limited.returncode == 1 and error_class(limited.stderr) == "StepLimit"
    try:
        cli(REJECT / "Loop.pi", timeout=5)
        hung = False
    except subprocess.TimeoutExpired:
        hung = True
    report(
        7,
        f"loop definition checks: {lec1.returncode == 0}; forcing loop Bool with --step-limit 10000 "
        f"gives StepLimit: {stepped}; without a limit the watchdog fires: {hung}",
        lec1.returncode == 0 and stepped and hung,
    )
