"""The checking context, error values and per-session state."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping, NoReturn, Union

from picheck.syntax import (
    IRR,
    REL,
    ConstructorDef,
    Definition,
    Epsilon,
    Name,
    Sig,
    SourcePos,
    Telescope,
    Term,
    aeq,
)


class ErrorClass(enum.Enum):
    NotInScope = "NotInScope"
    IrrelevantUse = "IrrelevantUse"
    TypeMismatch = "TypeMismatch"
    NotAFunction = "NotAFunction"
    NotATyCon = "NotATyCon"
    NotEqualityType = "NotEqualityType"
    NoContradiction = "NoContradiction"
    NonExhaustive = "NonExhaustive"
    BadConstructorArity = "BadConstructorArity"
    UnknownConstructor = "UnknownConstructor"
    AmbiguousConstructor = "AmbiguousConstructor"
    EscapingVariable = "EscapingVariable"
    UnificationFailure = "UnificationFailure"
    StepLimit = "StepLimit"
    ParseError = "ParseError"


Fragment = Union[str, Term]


def _show(f: Fragment) -> str:
    return f if isinstance(f, str) else str(f)


@dataclass(frozen=True)
class DeclInfo:
    """The top-level declaration being checked, for error trailers."""

    name: Name
    term: Term
    type: Term | None


class CheckError(Exception):
    def __init__(
        self,
        cls: ErrorClass,
        fragments: Iterable[Fragment],
        pos: SourcePos | None = None,
        term: Term | None = None,
        decl: DeclInfo | None = None,
    ) -> None:
        self.cls = cls
        self.fragments = list(fragments)
        self.pos = pos
        self.term = term
        self.decl = decl
        super().__init__(self.message)

    @property
    def message(self) -> str:
        return " ".join(_show(f) for f in self.fragments)

    def render(self) -> str:
        where = str(self.pos) if self.pos else "<unknown>"
        lines = [f"{where}: {self.cls.value}", f"  {self.message}"]
        if self.decl is not None:
            lines += ["  When checking the term", f"    {self.decl.term}"]
            if self.decl.type is not None:
                lines += ["  against the signature", f"    {self.decl.name.hint} : {self.decl.type}"]
        if self.term is not None and (self.decl is None or not aeq(self.term, self.decl.term)):
            lines += ["  In the expression", f"    {self.term}"]
        return "\n".join(lines)


class StepLimit(CheckError):
    def __init__(self, used: int, **kw) -> None:
        self.used = used
        super().__init__(ErrorClass.StepLimit, [f"Reduction step limit exceeded after {used} steps"], **kw)


class UnificationFailure(CheckError):
    def __init__(self, fragments: Iterable[Fragment], **kw) -> None:
        super().__init__(ErrorClass.UnificationFailure, fragments, **kw)


@dataclass
class StepBudget:
    limit: int | None = None
    used: int = 0

    def tick(self, n: int = 1) -> None:
        self.used += n
        if self.limit is not None and self.used > self.limit:
            self.used = self.limit
            raise StepLimit(self.used)


@dataclass
class Session:
    """Mutable state shared by one checking run."""

    budget: StepBudget = field(default_factory=StepBudget)
    regularity: bool = False
    # Test hooks: turn off definition unfolding, or all reduction.
    unfold: bool = True
    aeq_only: bool = False
    warnings: list[str] = field(default_factory=list)
    in_regularity: bool = False


@dataclass(frozen=True)
class Datatype:
    tycon: str
    params: Telescope
    constructors: tuple[ConstructorDef, ...]

    def constructor(self, name: str) -> ConstructorDef | None:
        for c in self.constructors:
            if c.name == name:
                return c
        return None


Entry = Union[Sig, Definition, Datatype]


class GlobalEnv:
    """Top-level entries from the prelude, imports and the current module."""

    def __init__(self) -> None:
        self.entries: list[Entry] = []
        self.sigs: dict[Name, Sig] = {}
        self.defs: dict[Name, Term] = {}
        self.datatypes: dict[str, Datatype] = {}
        self.owners: dict[str, list[str]] = {}

    def add(self, e: Entry) -> None:
        self.entries.append(e)
        match e:
            case Sig(name):
                self.sigs[name] = e
            case Definition(name, term):
                self.defs[name] = term
            case Datatype(tycon, _, cons):
                self.datatypes[tycon] = e
                for c in cons:
                    self.owners.setdefault(c.name, []).append(tycon)

    def tycon_names(self) -> set[str]:
        return set(self.datatypes)

    def dcon_names(self) -> set[str]:
        return set(self.owners)


_EMPTY: Mapping = MappingProxyType({})


@dataclass(frozen=True)
class Context:
    """An immutable view of Γ. Extension returns a new context."""

    globals: GlobalEnv
    session: Session = field(default_factory=Session)
    locals: tuple[Entry, ...] = ()
    sigs: Mapping[Name, Sig] = _EMPTY
    defs: Mapping[Name, Term] = _EMPTY
    pos: SourcePos | None = None
    term: Term | None = None
    decl: DeclInfo | None = None

    # -- lookup

    def lookup_sig(self, x: Name) -> Sig | None:
        s = self.sigs.get(x)
        if s is None:
            s = self.globals.sigs.get(x)
        return s

    def lookup_ty(self, x: Name) -> tuple[Epsilon, Term]:
        s = self.lookup_sig(x)
        if s is None:
            self.err(ErrorClass.NotInScope, f"The variable {x.hint} was not found")
        return s.eps, s.type

    def lookup_def(self, x: Name) -> Term | None:
        d = self.defs.get(x)
        if d is None:
            d = self.globals.defs.get(x)
        return d

    def is_local(self, x: Name) -> bool:
        return x in self.sigs

    def lookup_datatype(self, tycon: str) -> Datatype:
        dt = self.globals.datatypes.get(tycon)
        if dt is None:
            self.err(ErrorClass.NotInScope, f"The type constructor {tycon} was not found")
        return dt

    def owners(self, dcon: str) -> list[str]:
        return self.globals.owners.get(dcon, [])

    # -- extension

    def extend(self, e: Entry) -> "Context":
        match e:
            case Sig(name):
                return replace(self, locals=self.locals + (e,), sigs={**self.sigs, name: e})
            case Definition(name, term):
                return replace(self, locals=self.locals + (e,), defs={**self.defs, name: term})
        raise TypeError(f"cannot extend a local context with {e!r}")

    def extend_all(self, es: Iterable[Entry]) -> "Context":
        ctx = self
        for e in es:
            ctx = ctx.extend(e)
        return ctx

    def demote(self, x: Name, ty: Term) -> "Context":
        return self.extend(Sig(x, IRR, ty))

    def resurrect(self) -> "Context":
        if all(s.eps is REL for s in self.sigs.values()):
            return self
        locals_ = tuple(Sig(e.name, REL, e.type) if isinstance(e, Sig) else e for e in self.locals)
        sigs = {x: Sig(x, REL, s.type) for x, s in self.sigs.items()}
        return replace(self, locals=locals_, sigs=sigs)

    def at(self, pos: SourcePos, term: Term) -> "Context":
        return replace(self, pos=pos, term=term)

    def with_decl(self, decl: DeclInfo | None) -> "Context":
        return replace(self, decl=decl, term=None)

    # -- diagnostics

    def error(self, cls: ErrorClass, *fragments: Fragment) -> CheckError:
        return CheckError(cls, fragments, pos=self.pos, term=self.term, decl=self.decl)

    def err(self, cls: ErrorClass, *fragments: Fragment) -> NoReturn:
        raise self.error(cls, *fragments)

    def unification_failure(self, *fragments: Fragment) -> NoReturn:
        raise UnificationFailure(fragments, pos=self.pos, term=self.term, decl=self.decl)

    def warn(self, *fragments: Fragment) -> None:
        where = str(self.pos) if self.pos else "<unknown>"
        self.session.warnings.append(f"{where}: warning: " + " ".join(_show(f) for f in fragments))

    def tick(self, n: int = 1) -> None:
        try:
            self.session.budget.tick(n)
        except StepLimit as e:
            e.pos, e.term, e.decl = self.pos, self.term, self.decl
            raise


def empty_context(session: Session | None = None) -> Context:
    return Context(GlobalEnv(), session or Session())
