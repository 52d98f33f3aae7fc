"""Command-line driver: resolve imports, check modules, report results."""
from __future__ import annotations

import argparse
import sys
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, TextIO

from picheck.environment import CheckError, Context, GlobalEnv, Session, StepBudget
from picheck.parser import ModuleAST, ParseError, parse_imports, parse_module
from picheck.pretty import pretty_module
from picheck.typecheck import check_module

PRELUDE = "Prelude"


class DriverError(Exception):
    """Import resolution or I/O failure (exit status 2)."""


@dataclass
class DriverConfig:
    entry_file: Path
    search_paths: list[Path] = field(default_factory=list)
    step_limit: int | None = None
    regularity: bool = False
    prelude: bool = True

    def paths(self) -> list[Path]:
        return self.search_paths or [self.entry_file.parent]


def prelude_source() -> str:
    return resources.files("picheck").joinpath("Prelude.pi").read_text(encoding="utf-8")


def new_context(session: Session | None = None, prelude: bool = True) -> Context:
    ctx = Context(GlobalEnv(), session or Session())
    if prelude:
        check_source(ctx, prelude_source(), "Prelude.pi")
    return ctx


def check_source(ctx: Context, text: str, file: str = "<input>") -> ModuleAST:
    """Parse and check one module against the globals already in ``ctx``."""
    env = ctx.globals
    mod = parse_module(text, file, env.tycon_names(), env.dcon_names())
    check_module(ctx, mod)
    return mod


class Loader:
    def __init__(self, config: DriverConfig, ctx: Context) -> None:
        self.config = config
        self.ctx = ctx
        self.done: dict[str, ModuleAST] = {}
        if config.prelude:
            self.done[PRELUDE] = ModuleAST(PRELUDE)

    def find(self, name: str, importer: str) -> Path:
        for d in self.config.paths():
            p = d / f"{name}.pi"
            if p.is_file():
                return p
        raise DriverError(f"{importer}: cannot find module {name}")

    def read(self, path: Path) -> str:
        try:
            return path.read_text(encoding="utf-8")
        except OSError as e:
            raise DriverError(f"{path}: {e.strerror or e}") from e

    def load(self, path: Path, stack: tuple[str, ...] = ()) -> ModuleAST:
        key = path.stem
        if key in self.done:
            return self.done[key]
        if key in stack:
            cycle = " -> ".join(stack + (key,))
            raise DriverError(f"{path}: cyclic imports: {cycle}")
        text = self.read(path)
        _, imports = parse_imports(text, str(path))
        for imp in imports:
            if imp in self.done:
                continue
            self.load(self.find(imp, str(path)), stack + (key,))
        mod = check_source(self.ctx, text, str(path))
        self.done[key] = mod
        return mod


def run(config: DriverConfig, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    session = Session(budget=StepBudget(config.step_limit), regularity=config.regularity)
    status = 0
    try:
        ctx = new_context(session, config.prelude)
        mod = Loader(config, ctx).load(config.entry_file)
    except DriverError as e:
        _flush_warnings(session, err)
        print(str(e), file=err)
        return 2
    except ParseError as e:
        _flush_warnings(session, err)
        print(f"{e.pos}: ParseError\n  {e.message}", file=err)
        return 1
    except CheckError as e:
        _flush_warnings(session, err)
        print(e.render(), file=err)
        return 1
    _flush_warnings(session, err)
    out.write(pretty_module(mod))
    return status


def _flush_warnings(session: Session, err: TextIO) -> None:
    for w in session.warnings:
        print(w, file=err)
    session.warnings.clear()


def run_with_big_stack(fn: Callable[[], int], stack_mb: int = 512) -> int:
    """Run ``fn`` in a thread with a large stack so deep terms do not overflow."""
    result: list[int] = []
    failure: list[BaseException] = []

    def target() -> None:
        try:
            result.append(fn())
        except BaseException as e:  # re-raised in the caller
            failure.append(e)

    old_limit = sys.getrecursionlimit()
    old_size = threading.stack_size()
    sys.setrecursionlimit(max(old_limit, 200_000))
    threading.stack_size(stack_mb * 1024 * 1024)
    try:
        t = threading.Thread(target=target, daemon=True)
        t.start()
        t.join()
    finally:
        threading.stack_size(old_size)
        sys.setrecursionlimit(old_limit)
    if failure:
        raise failure[0]
    return result[0]


def _positive(s: str) -> int:
    n = int(s)
    if n <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="picheck", description="Type check a module written in a small dependently typed language.")
    p.add_argument("file", type=Path, help="module to check (FILE.pi)")
    p.add_argument("--path", action="append", type=Path, default=[], metavar="DIR",
                   help="directory to search for imports (repeatable)")
    p.add_argument("--step-limit", type=_positive, default=None, metavar="N",
                   help="abort with StepLimit after N reduction steps")
    p.add_argument("--regularity", action="store_true",
                   help="check that every inferred type is itself a type")
    p.add_argument("--no-prelude", action="store_true", help="do not load the bundled prelude")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    if args.file.suffix != ".pi":
        print(f"{args.file}: expected a .pi file", file=sys.stderr)
        return 2
    config = DriverConfig(
        entry_file=args.file,
        search_paths=list(args.path) or [args.file.parent],
        step_limit=args.step_limit,
        regularity=args.regularity,
        prelude=not args.no_prelude,
    )
    return run_with_big_stack(lambda: run(config))
