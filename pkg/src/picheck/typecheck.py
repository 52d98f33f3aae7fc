"""Bidirectional type checking for terms, telescopes, patterns and modules."""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from picheck.environment import (
    CheckError,
    Context,
    Datatype,
    DeclInfo,
    ErrorClass,
    UnificationFailure,
)
from picheck.equal import ensure_pi, ensure_tcon, equate, unify, whnf
from picheck.parser import Data, Def, ModuleAST, TypeSig
from picheck.syntax import (
    IRR,
    REL,
    WILDCARD,
    Ann,
    App,
    Arg,
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
    aeq,
    freshen_tele,
    instantiate,
    pattern_vars,
    subst_tele as rename_tele,
    substitute,
    unbind,
    unbind_match,
    unbind_pair,
)

TYPE = TyType()


def infer_type(ctx: Context, a: Term) -> Term:
    return tc_term(ctx, a, None)


def check_type(ctx: Context, a: Term, ty: Term) -> None:
    tc_term(ctx, a, whnf(ctx, ty))


def check_stage(ctx: Context, eps: Epsilon) -> None:
    if eps is IRR:
        ctx.err(ErrorClass.IrrelevantUse, "Cannot access irrelevant variables in this context")


def tc_term(ctx: Context, a: Term, expected: Term | None) -> Term:
    """Infer (``expected is None``) or check ``a``. Returns its type."""
    while isinstance(a, Pos):
        ctx = ctx.at(a.pos, a.term)
        a = a.term
    if expected is not None:
        ty = _check(ctx, a, expected)
    else:
        ty = _infer(ctx, a)
        if ctx.session.regularity and not ctx.session.in_regularity:
            _check_regular(ctx, ty)
    return ty


def _check_regular(ctx: Context, ty: Term) -> None:
    session = ctx.session
    session.in_regularity = True
    try:
        check_type(ctx.resurrect(), ty, TYPE)
    except CheckError as e:
        raise ctx.error(
            ErrorClass.TypeMismatch, "Inferred type", ty, "is not a type:", e.message
        ) from e
    finally:
        session.in_regularity = False


def _scrutinee_var(ctx: Context, a: Term) -> Name | None:
    while isinstance(a, (Pos, Ann)):
        a = a.term
    if isinstance(a, Var) and ctx.is_local(a.name):
        return a.name
    return None


def _definable_var(ctx: Context, a: Term) -> Name | None:
    x = _scrutinee_var(ctx, a)
    if x is not None and ctx.lookup_def(x) is None:
        return x
    return None


def _pair_scrutinee(ctx: Context, a: Term) -> Name | None:
    """The variable a let-pair refines to ``(x, y)``, if any."""
    return _definable_var(ctx, a)


# ---------------------------------------------------------------------------
# inference


def _infer(ctx: Context, a: Term) -> Term:
    match a:
        case Var(x):
            eps, ty = ctx.lookup_ty(x)
            check_stage(ctx, eps)
            return ty
        case TyType():
            return TYPE
        case Pi(_, dom, b) | TySigma(dom, b):
            r = ctx.resurrect()
            check_type(r, dom, TYPE)
            x, body = unbind(b)
            check_type(r.extend(Sig(x, REL, dom)), body, TYPE)
            return TYPE
        case App(f, arg):
            fty = infer_type(ctx, f)
            eps, y, dom, cod = ensure_pi(ctx, fty)
            if arg.eps is not eps:
                ctx.err(
                    ErrorClass.IrrelevantUse,
                    f"Argument relevance mismatch: the function expects a {_describe(eps)} argument",
                )
            check_type(ctx.resurrect() if eps is IRR else ctx, arg.term, dom)
            return substitute(cod, {y: arg.term})
        case Ann(t, ty):
            check_type(ctx.resurrect(), ty, TYPE)
            check_type(ctx, t, ty)
            return ty
        case TyUnit():
            return TYPE
        case LitUnit():
            return TyUnit()
        case TyEq(lhs, rhs):
            ty = infer_type(ctx, lhs)
            check_type(ctx, rhs, ty)
            return TYPE
        case TyCon(name, args):
            dt = ctx.lookup_datatype(name)
            ptele, _ = freshen_tele(dt.params)
            tc_arg_tele(ctx, args, ptele)
            return TYPE
        case DataCon(name, args):
            owners = ctx.owners(name)
            if not owners:
                ctx.err(ErrorClass.UnknownConstructor, f"Unknown data constructor {name}")
            if len(owners) > 1:
                ctx.err(
                    ErrorClass.AmbiguousConstructor,
                    f"Ambiguous data constructor {name} (belongs to {', '.join(owners)});",
                    "add a type annotation",
                )
            dt = ctx.lookup_datatype(owners[0])
            if dt.params:
                ctx.err(
                    ErrorClass.AmbiguousConstructor,
                    f"Cannot infer the parameters of {dt.tycon} for {name};",
                    "add a type annotation",
                )
            _, ctele = instantiate_constructor(dt, dt.constructor(name))
            tc_arg_tele(ctx, args, ctele)
            return TyCon(dt.tycon)
        case Let(rhs, b):
            ty = infer_type(ctx, rhs)
            x, body = unbind(b)
            c = ctx.extend(Sig(x, REL, ty)).extend(Definition(x, rhs))
            return substitute(infer_type(c, body), {x: rhs})
        case LetPair():
            return _let_pair(ctx, a, None)
        case Case():
            return _infer_case(ctx, a)
        case Lam():
            ctx.err(ErrorClass.TypeMismatch, "Must have a type annotation to check", a)
    ctx.err(ErrorClass.TypeMismatch, "Must have a type annotation to check", a)


def _describe(eps: Epsilon) -> str:
    return "relevant" if eps is REL else "irrelevant"


# ---------------------------------------------------------------------------
# checking


def _check(ctx: Context, a: Term, expected: Term) -> Term:
    match a:
        case Lam(eps, b):
            if not isinstance(expected, Pi):
                ctx.err(
                    ErrorClass.TypeMismatch,
                    "Lambda expression should have a function type, not",
                    expected,
                )
            if eps is not expected.eps:
                ctx.err(
                    ErrorClass.IrrelevantUse,
                    f"Lambda binder is {_describe(eps)} but the function type expects a",
                    f"{_describe(expected.eps)} argument",
                )
            x, body = unbind(b)
            cod = instantiate(expected.bind, Var(x))
            check_type(ctx.extend(Sig(x, expected.eps, expected.domain)), body, cod)
            return expected
        case TrustMe():
            ctx.warn("Unmet obligation (TRUSTME) against", expected)
            return expected
        case Prod(x, y):
            if not isinstance(expected, TySigma):
                ctx.err(ErrorClass.TypeMismatch, "A pair should have a Sigma type, not", expected)
            check_type(ctx, x, expected.first)
            check_type(ctx, y, instantiate(expected.bind, x))
            return expected
        case LetPair():
            return _let_pair(ctx, a, expected)
        case Let(rhs, b):
            ty = infer_type(ctx, rhs)
            x, body = unbind(b)
            check_type(ctx.extend(Sig(x, REL, ty)).extend(Definition(x, rhs)), body, expected)
            return expected
        case Refl():
            if not isinstance(expected, TyEq):
                ctx.err(ErrorClass.NotEqualityType, "Refl should have an equality type, not", expected)
            equate(ctx, expected.lhs, expected.rhs)
            return expected
        case Subst(body, proof):
            return _subst(ctx, body, proof, expected)
        case Contra(proof):
            ty = whnf(ctx, infer_type(ctx, proof))
            if not isinstance(ty, TyEq):
                ctx.err(ErrorClass.NotEqualityType, "Expected an equality type but found", ty)
            lhs, rhs = whnf(ctx, ty.lhs), whnf(ctx, ty.rhs)
            if isinstance(lhs, DataCon) and isinstance(rhs, DataCon) and lhs.name != rhs.name:
                return expected
            ctx.err(
                ErrorClass.NoContradiction,
                "I can't tell that", lhs, "and", rhs, "are contradictory",
            )
        case DataCon(name, args) if isinstance(expected, TyCon):
            dt = ctx.lookup_datatype(expected.name)
            con = dt.constructor(name)
            if con is None:
                ctx.err(
                    ErrorClass.UnknownConstructor,
                    f"{name} is not a constructor of {dt.tycon}",
                )
            ptele, ctele = instantiate_constructor(dt, con)
            s = {e.name: p.term for e, p in zip(_sigs(ptele), expected.params)}
            tc_arg_tele(ctx, args, ctele, s)
            return expected
        case Case():
            return _check_case(ctx, a, expected)
    ty = infer_type(ctx, a)
    equate(ctx, ty, expected)
    return expected


def _let_pair(ctx: Context, a: LetPair, expected: Term | None) -> Term:
    sty = whnf(ctx, infer_type(ctx, a.scrutinee))
    if not isinstance(sty, TySigma):
        ctx.err(ErrorClass.TypeMismatch, "Scrutinee of let-pair must have a Sigma type, not", sty)
    x, y, body = unbind_pair(a.bind)
    c = ctx.extend(Sig(x, REL, sty.first)).extend(Sig(y, REL, instantiate(sty.bind, Var(x))))
    z = _pair_scrutinee(ctx, a.scrutinee)
    if z is not None:
        c = c.extend(Definition(z, Prod(Var(x), Var(y))))
    if expected is not None:
        check_type(c, body, expected)
        return expected
    ty = infer_type(c, body)
    if {x, y} & ty.free_vars:
        ctx.err(ErrorClass.EscapingVariable, "The type", ty, "mentions a pattern variable")
    return ty


def _subst(ctx: Context, body: Term, proof: Term, expected: Term) -> Term:
    ty = whnf(ctx, infer_type(ctx, proof))
    if not isinstance(ty, TyEq):
        ctx.err(ErrorClass.NotEqualityType, "Expected an equality type but found", ty)
    lhs, rhs = whnf(ctx, ty.lhs), whnf(ctx, ty.rhs)
    defs: list[Definition] = []
    if not aeq(lhs, rhs):
        x = _definable_var(ctx, lhs)
        if x is not None and x not in rhs.free_vars:
            defs.append(Definition(x, rhs))
        else:
            y = _definable_var(ctx, rhs)
            if y is not None and y not in lhs.free_vars:
                defs.append(Definition(y, lhs))
            else:
                ctx.err(
                    ErrorClass.TypeMismatch,
                    "Cannot subst by a proof of", ty,
                    "because neither side is a variable; name one side with let first",
                )
    p = _definable_var(ctx, proof)
    if p is not None:
        defs.append(Definition(p, Refl()))
    check_type(ctx.extend_all(defs), body, expected)
    return expected


# ---------------------------------------------------------------------------
# telescopes


def _sigs(tele: Telescope) -> list[Sig]:
    return [e for e in tele if isinstance(e, Sig)]


def instantiate_constructor(dt: Datatype, con: ConstructorDef) -> tuple[Telescope, Telescope]:
    """Freshen a datatype's parameter telescope and one constructor's telescope."""
    ptele, ren = freshen_tele(dt.params)
    ctele, _ = freshen_tele(rename_tele(con.tele, ren))
    return ptele, ctele


def tc_arg_tele(
    ctx: Context,
    args: Sequence[Arg],
    tele: Telescope,
    s: Mapping[Name, Term] | None = None,
) -> None:
    """Check arguments against a telescope, discharging its constraints.

    ``s`` maps telescope names already fixed (datatype parameters) to terms.
    """
    s = dict(s or {})
    i = 0
    for e in tele:
        if isinstance(e, Sig):
            if i >= len(args):
                ctx.err(ErrorClass.BadConstructorArity, "Too few arguments")
            a = args[i]
            i += 1
            if a.eps is not e.eps:
                ctx.err(
                    ErrorClass.IrrelevantUse,
                    f"Argument relevance mismatch: expected a {_describe(e.eps)} argument",
                )
            c = ctx.resurrect() if e.eps is IRR else ctx
            check_type(c, a.term, substitute(e.type, s))
            s[e.name] = a.term
        else:
            lhs, rhs = substitute(Var(e.name), s), substitute(e.term, s)
            try:
                equate(ctx, lhs, rhs)
            except CheckError as err:
                if err.cls is not ErrorClass.TypeMismatch:
                    raise
                ctx.err(
                    ErrorClass.TypeMismatch,
                    "Constraint", TyEq(Var(e.name), e.term), "is not satisfied:",
                    lhs, "is not equal to", rhs,
                )
    if i < len(args):
        ctx.err(ErrorClass.BadConstructorArity, "Too many arguments")


def do_subst(ctx: Context, s: Mapping[Name, Term], tele: Telescope) -> Telescope:
    """Substitute through a telescope.

    A constraint ``x = b`` whose variable is replaced by a term is rewritten
    into the definitions produced by unifying the two sides.
    """
    s = dict(s)
    flex = {e.name for e in tele if isinstance(e, Sig)}
    out: list = []
    c = ctx
    for e in tele:
        if isinstance(e, Sig):
            out.append(Sig(e.name, e.eps, substitute(e.type, s)))
            s.pop(e.name, None)
        else:
            rhs = substitute(e.term, s)
            if e.name in s:
                ds = unify(c, flex, s[e.name], rhs)
            else:
                ds = [Definition(e.name, rhs)]
            out.extend(ds)
            c = c.extend_all(ds)
    return tuple(out)


def subst_tele(ctx: Context, param_tele: Telescope, params: Sequence[Arg], con_tele: Telescope) -> Telescope:
    s = {e.name: p.term for e, p in zip(_sigs(param_tele), params)}
    return do_subst(ctx, s, con_tele)


# ---------------------------------------------------------------------------
# patterns


def declare_pat(ctx: Context, pat: Pattern, eps: Epsilon, ty: Term) -> tuple[Telescope, Term]:
    """Bind a pattern's variables. Returns their telescope and the pattern as a term."""
    if isinstance(pat, PatVar):
        return (Sig(pat.name, eps, ty),), Var(pat.name)
    tycon, params = ensure_tcon(ctx, ty)
    dt = ctx.lookup_datatype(tycon)
    con = dt.constructor(pat.con)
    if con is None:
        ctx.err(ErrorClass.UnknownConstructor, f"{pat.con} is not a constructor of {tycon}")
    ptele, ctele = instantiate_constructor(dt, con)
    tele = subst_tele(ctx, ptele, params, ctele)
    delta, args = _declare_pats(ctx, pat.args, eps, tele)
    return delta, DataCon(pat.con, tuple(args))


def _declare_pats(
    ctx: Context, pats: Sequence[tuple[Pattern, Epsilon]], eps: Epsilon, tele: Telescope
) -> tuple[Telescope, list[Arg]]:
    delta: list = []
    args: list[Arg] = []
    rest = tuple(tele)
    i = 0
    while rest:
        e, rest = rest[0], rest[1:]
        if isinstance(e, Definition):
            delta.append(e)
            ctx = ctx.extend(e)
            continue
        if i >= len(pats):
            ctx.err(ErrorClass.BadConstructorArity, "Too few arguments in pattern")
        p, pe = pats[i]
        i += 1
        if pe is not e.eps:
            ctx.err(
                ErrorClass.IrrelevantUse,
                f"Pattern relevance mismatch: expected a {_describe(e.eps)} sub-pattern",
            )
        sub_eps = IRR if IRR in (eps, e.eps) else REL
        d, t = declare_pat(ctx, p, sub_eps, e.type)
        delta.extend(d)
        ctx = ctx.extend_all(d)
        args.append(Arg(e.eps, t))
        rest = do_subst(ctx, {e.name: t}, rest)
    if i < len(pats):
        ctx.err(ErrorClass.BadConstructorArity, "Too many arguments in pattern")
    return tuple(delta), args


def _open_branch(ctx: Context, m) -> tuple[Pattern, Term]:
    pat, body = unbind_match(m)
    names = pattern_vars(pat)
    if len(set(names)) != len(names):
        ctx.err(ErrorClass.TypeMismatch, "Pattern variables must be distinct")
    return pat, body


def _check_case(ctx: Context, a: Case, expected: Term) -> Term:
    sty = infer_type(ctx, a.scrutinee)
    ensure_tcon(ctx, sty)
    svar = _definable_var(ctx, a.scrutinee)
    pats: list[Pattern] = []
    for m in a.matches:
        pat, body = _open_branch(ctx, m)
        pats.append(pat)
        try:
            delta, pterm = declare_pat(ctx, pat, REL, sty)
            c = ctx.extend_all(delta)
            flex = set(pattern_vars(pat)) | ({svar} if svar else set())
            refine = unify(c, flex, a.scrutinee, pterm)
        except UnificationFailure:
            ctx.warn("Skipping inaccessible branch", pattern_term_str(m.pattern))
            continue
        check_type(c.extend_all(refine), body, expected)
    exhaustivity_check(ctx, sty, pats)
    return expected


def _infer_case(ctx: Context, a: Case) -> Term:
    sty = infer_type(ctx, a.scrutinee)
    ensure_tcon(ctx, sty)
    pats: list[Pattern] = []
    result: Term | None = None
    for m in a.matches:
        pat, body = _open_branch(ctx, m)
        pats.append(pat)
        try:
            delta, _ = declare_pat(ctx, pat, REL, sty)
        except UnificationFailure:
            ctx.warn("Skipping inaccessible branch", pattern_term_str(m.pattern))
            continue
        ty = infer_type(ctx.extend_all(delta), body)
        if set(pattern_vars(pat)) & ty.free_vars:
            ctx.err(ErrorClass.EscapingVariable, "The type", ty, "mentions a pattern variable")
        if result is None:
            result = ty
        else:
            equate(ctx, ty, result)
    exhaustivity_check(ctx, sty, pats)
    if result is None:
        ctx.err(ErrorClass.TypeMismatch, "Cannot infer the type of a case with no branches")
    return result


def pattern_term_str(p: Pattern) -> str:
    from picheck.pretty import Printer

    return Printer().pattern(p)


# ---------------------------------------------------------------------------
# exhaustiveness


def exhaustivity_check(ctx: Context, scrut_ty: Term, pats: Iterable[Pattern]) -> None:
    missing = _uncovered(ctx, [scrut_ty], [[p] for p in pats])
    if missing is not None:
        ctx.err(ErrorClass.NonExhaustive, "Missing case for", pattern_term_str(missing[0]))


def _is_empty(ctx: Context, ty: Term) -> bool:
    w = whnf(ctx, ty)
    if not isinstance(w, TyCon) or w.name not in ctx.globals.datatypes:
        return False
    dt = ctx.lookup_datatype(w.name)
    for con in dt.constructors:
        ptele, ctele = instantiate_constructor(dt, con)
        try:
            subst_tele(ctx, ptele, w.params, ctele)
        except UnificationFailure:
            continue
        return False
    return True


def _uncovered(ctx: Context, tys: list[Term], rows: list[list[Pattern]]) -> list[Pattern] | None:
    """Return a pattern row not covered by ``rows``, or None when covered."""
    if not tys:
        return None if rows else []
    if not rows:
        if any(_is_empty(ctx, ty) for ty in tys):
            return None
        return [PatVar(WILDCARD) for _ in tys]
    ty, rest = tys[0], tys[1:]
    if all(isinstance(r[0], PatVar) for r in rows):
        w = _uncovered(ctx, rest, [r[1:] for r in rows])
        return None if w is None else [PatVar(WILDCARD)] + w
    tycon, params = ensure_tcon(ctx, ty)
    dt = ctx.lookup_datatype(tycon)
    for con in dt.constructors:
        ptele, ctele = instantiate_constructor(dt, con)
        try:
            tele = subst_tele(ctx, ptele, params, ctele)
        except UnificationFailure:
            continue
        c = ctx.extend_all(tele)
        sigs = _sigs(tele)
        arity = len(sigs)
        new_rows = []
        for r in rows:
            p = r[0]
            if isinstance(p, PatVar):
                new_rows.append([PatVar(WILDCARD)] * arity + r[1:])
            elif p.con == con.name and len(p.args) == arity:
                new_rows.append([q for q, _ in p.args] + r[1:])
        w = _uncovered(c, [e.type for e in sigs] + rest, new_rows)
        if w is not None:
            head = PatCon(con.name, tuple((q, e.eps) for q, e in zip(w[:arity], sigs)))
            return [head] + w[arity:]
    return None


# ---------------------------------------------------------------------------
# modules


def check_module(ctx: Context, mod: ModuleAST) -> Context:
    """Check each declaration in order, installing it into the global env."""
    env = ctx.globals
    for d in mod.decls:
        match d:
            case TypeSig(name, eps, ty, pos):
                c = _decl_ctx(ctx, DeclInfo(name, ty, None), pos)
                if name in env.sigs:
                    c.err(ErrorClass.TypeMismatch, f"Duplicate type signature for {name.hint}")
                check_type(c.resurrect(), ty, TYPE)
                env.add(Sig(name, eps, ty))
            case Def(name, term, pos):
                sig = env.sigs.get(name)
                c = _decl_ctx(ctx, DeclInfo(name, term, sig.type if sig else None), pos)
                if name in env.defs:
                    c.err(ErrorClass.TypeMismatch, f"Duplicate definition of {name.hint}")
                if sig is not None:
                    check_type(c, term, sig.type)
                else:
                    env.add(Sig(name, REL, infer_type(c, term)))
                env.add(Definition(name, term))
            case Data():
                _check_data(ctx, d)
    return ctx


def _decl_ctx(ctx: Context, info: DeclInfo, pos) -> Context:
    c = ctx.with_decl(info)
    return c.at(pos, None) if pos is not None else c


def _check_data(ctx: Context, d: Data) -> None:
    env = ctx.globals
    c = _decl_ctx(ctx, None, d.pos)
    if d.tycon in env.datatypes:
        c.err(ErrorClass.TypeMismatch, f"Duplicate data type {d.tycon}")
    names = [con.name for con in d.constructors]
    if len(set(names)) != len(names):
        c.err(ErrorClass.TypeMismatch, f"Duplicate constructor in {d.tycon}")
    ptele, ren = freshen_tele(d.params)
    cons = tuple(
        ConstructorDef(con.name, freshen_tele(rename_tele(con.tele, ren))[0]) for con in d.constructors
    )
    pc = c
    for e in ptele:
        if not isinstance(e, Sig) or e.eps is not REL:
            c.err(ErrorClass.IrrelevantUse, "Type constructor parameters must be relevant")
        check_type(pc.resurrect(), e.type, TYPE)
        pc = pc.extend(e)
    env.add(Datatype(d.tycon, ptele, cons))
    for con in cons:
        cc = pc
        for e in con.tele:
            if isinstance(e, Sig):
                check_type(cc.resurrect(), e.type, TYPE)
                cc = cc.extend(e)
            else:
                s = cc.lookup_sig(e.name)
                if s is None or not cc.is_local(e.name):
                    cc.err(
                        ErrorClass.NotInScope,
                        f"Constraint variable {e.name.hint} is not bound by the telescope",
                    )
                check_type(cc.resurrect(), e.term, s.type)
                cc = cc.extend(e)
