"""Command-line entry point and REPL.

::

    eql --kg laureates.kgt query "?x : award : Nobel Prize in Literature (date : ?y)"
    eql --kg laureates.kgt repl
    eql --kg awards.kgt card "George Bernard Shaw" --csv
    eql suggest-queue list
    eql lambda "(? : children) : place of birth : New York"
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from eql.ast import Name, Query
from eql.errors import EQLError, EQLSyntaxError, UnknownNameError
from eql.evaluator import PAGE_SIZE, evaluate
from eql.lambda_calc import to_lambda
from eql.parser import is_simplified, parse_query, parse_simplified, pretty_print
from eql.render import MODES, Renderer, card_csv, card_text
from eql.revision import SuggestionQueue
from eql.store import Store

KG_ENV = "EQL_KG_PATH"
JOURNAL_ENV = "EQL_JOURNAL"
DEFAULT_JOURNAL = "eql-suggestions.journal"


class CLIError(EQLError):
    pass


# -- helpers ----------------------------------------------------------------


def load_store(paths) -> Store:
    store = Store()
    for path in paths:
        path = Path(path)
        if not path.is_file():
            raise CLIError(f"no such graph file: {path}")
        report = store.load_graph(path)
        for line, msg in report.errors:
            print(f"{path}:{line}: {msg}", file=sys.stderr)
    return store


def graph_paths(args) -> list[str]:
    if args.kg:
        return list(args.kg)
    env = os.environ.get(KG_ENV, "")
    return [p for p in env.split(os.pathsep) if p]


def parse_text(text: str, store: Store | None) -> Query:
    if store is not None and is_simplified(text):
        return parse_simplified(text, store.lexicon())
    return parse_query(text)


def rename(node, old: str, new: str):
    """Copy of a syntax tree with every ``Name(old)`` replaced by ``Name(new)``."""
    if isinstance(node, Name):
        return Name(new) if node.text == old else node
    if isinstance(node, tuple):
        return tuple(rename(n, old, new) for n in node)
    if dataclasses.is_dataclass(node) and not isinstance(node, type):
        changes = {f.name: rename(getattr(node, f.name), old, new) for f in dataclasses.fields(node)}
        return dataclasses.replace(node, **changes)
    return node


def fuzzy_prompt(query: Query, store: Store, err: UnknownNameError) -> str:
    best = err.suggestions[0]

    def hook(text: str) -> str:
        if text == err.surface:
            return best.label
        ent = store.find(text)
        if ent is not None and store.get(ent).canonical_name.casefold() != text.casefold():
            return store.display_name(ent)
        return text

    shown = " ".join(pretty_print(query, name_hook=hook).split())
    return f'do not found "{err.surface}" , the query you actually want is "{shown}" (y/n)'


# -- session ----------------------------------------------------------------


@dataclass
class Session:
    store: Store
    mode: str = "table"
    page_size: int = PAGE_SIZE
    fuzzy: bool = True
    ascii_lambda: bool = False
    renderer: Renderer | None = None
    page_index: int = 0
    pending: tuple | None = None  # (query, surface, replacement)
    done: bool = False
    history: list[str] = field(default_factory=list)


def _more_hint(session: Session) -> str:
    return f"-- more rows: type 'more' for the next {session.page_size} --\n"


def run_query(session: Session, query: Query) -> str:
    """Evaluate and return the first page; a fuzzy miss sets up a y/n prompt."""
    session.pending = None
    session.renderer = None
    try:
        result = evaluate(query, session.store, fuzzy=session.fuzzy, page_size=session.page_size)
    except UnknownNameError as err:
        if not err.suggestions:
            raise
        session.pending = (query, err.surface, err.suggestions[0].text)
        return fuzzy_prompt(query, session.store, err) + "\n"
    session.renderer = Renderer(session.store, result, session.mode)
    session.page_index = 0
    text, more = session.renderer.page(0, session.page_size)
    text += session.renderer.footer()
    return text + (_more_hint(session) if more else "")


def repl_step(session: Session, line: str) -> str:
    """Handle one input line. Errors are rendered, never raised."""
    line = line.strip()
    if not line:
        return ""
    try:
        return _step(session, line)
    except EQLSyntaxError as exc:
        return f"syntax error: {exc}\n"
    except EQLError as exc:
        return f"error: {exc}\n"
    except (ValueError, TypeError, RecursionError) as exc:
        return f"error: {exc}\n"


def _step(session: Session, line: str) -> str:
    low = line.lower()
    if low in (":quit", ":q", ":exit"):
        session.done = True
        return ""
    if session.pending is not None and low in ("y", "yes", "n", "no"):
        query, old, new = session.pending
        session.pending = None
        if low.startswith("n"):
            return "cancelled\n"
        return run_query(session, rename(query, old, new))
    if low == "more":
        r = session.renderer
        if r is None:
            return "no active result\n"
        if (session.page_index + 1) * session.page_size >= len(r):
            return "no more rows\n"
        session.page_index += 1
        text, more = r.page(session.page_index, session.page_size)
        return text + (_more_hint(session) if more else "")
    if low.startswith(":mode"):
        parts = line.split()
        if len(parts) != 2 or parts[1] not in MODES:
            return f"usage: :mode {'|'.join(MODES)}\n"
        session.mode = parts[1]
        if session.renderer is not None:
            session.renderer = Renderer(session.store, session.renderer.result, session.mode)
        return f"mode {session.mode}\n"
    if low.startswith(":lambda "):
        term = to_lambda(parse_text(line[len(":lambda "):], session.store),
                         session.store, session.ascii_lambda)
        return f"{term}\n"
    if low.startswith(":card "):
        return card_text(session.store, session.store.knowledge_card(_entity(session.store, line[6:])))
    if low in (":help", ":h"):
        return ("enter a query, or: more | :mode table|csv|jsonl | :lambda <query> | "
                ":card <name> | :quit\n")
    if line.startswith(":"):
        return f"unknown command {line.split()[0]}\n"
    session.history.append(line)
    return run_query(session, parse_text(line, session.store))


def repl(session: Session, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    interactive = hasattr(stdin, "isatty") and stdin.isatty()
    buffer: list[str] = []
    while not session.done:
        if interactive:
            stdout.write("eql> " if not buffer else "...> ")
            stdout.flush()
        line = stdin.readline()
        if not line:
            break
        line = line.rstrip("\n")
        if line.endswith("\\") and not line.endswith("\\\\"):
            buffer.append(line[:-1])
            continue
        text = " ".join(buffer + [line])
        buffer = []
        stdout.write(repl_step(session, text))
        stdout.flush()
    return 0


def _entity(store: Store, name: str) -> str:
    res = store.resolve_name(name.strip())
    if res.entity_id is None:
        hint = f" (did you mean {res.suggestions[0].label!r}?)" if res.suggestions else ""
        raise CLIError(f"unknown entity {name.strip()!r}{hint}")
    return res.entity_id


# -- subcommands --------------------------------------------------------------


def _read_query(args) -> str:
    if args.file:
        return Path(args.file).read_text(encoding="utf-8")
    if args.text is None:
        raise CLIError("give a query or -f <file>")
    return args.text


def _open_queue(args, store: Store) -> SuggestionQueue:
    path = args.journal or os.environ.get(JOURNAL_ENV) or DEFAULT_JOURNAL
    return SuggestionQueue.open(store, path)


def _graph(args) -> Store:
    paths = graph_paths(args)
    store = load_store(paths)
    path = args.journal or os.environ.get(JOURNAL_ENV)
    if path and os.path.exists(path):
        SuggestionQueue.open(store, path)
    return store


def cmd_load(args, out) -> int:
    status = 0
    store = Store()
    for path in list(args.kg or []) + list(args.files):
        if not Path(path).is_file():
            raise CLIError(f"no such graph file: {path}")
        report = store.load_graph(Path(path))
        out.write(f"{path}: {report.statements} statements, {report.property_aliases} property aliases, "
                  f"{report.entity_aliases} entity aliases, {report.rules} rules\n")
        for line, msg in report.errors:
            out.write(f"{path}:{line}: {msg}\n")
            status = 1
    out.write(f"total: {len(store.entities)} entities, {len(store)} statements\n")
    return status


def cmd_query(args, out) -> int:
    store = _graph(args)
    query = parse_text(_read_query(args), store)

    def progress(n):
        print(f"... {n} rows", file=sys.stderr)

    try:
        result = evaluate(query, store, fuzzy=not args.no_fuzzy, progress=progress,
                          page_size=args.page_size)
    except UnknownNameError as err:
        if err.suggestions:
            raise CLIError(fuzzy_prompt(query, store, err)[: -len(" (y/n)")]) from None
        raise
    renderer = Renderer(store, result, args.mode)
    out.write(renderer.full() + renderer.footer())
    return 0


def cmd_repl(args, out) -> int:
    store = _graph(args)
    session = Session(store, args.mode, args.page_size, not args.no_fuzzy, args.ascii_lambda)
    return repl(session, stdout=out)


def cmd_card(args, out) -> int:
    store = _graph(args)
    card = store.knowledge_card(_entity(store, args.entity))
    out.write(card_csv(store, card) if args.csv else card_text(store, card))
    return 0


def cmd_lambda(args, out) -> int:
    paths = graph_paths(args)
    store = load_store(paths) if paths else None
    query = parse_text(_read_query(args), store)
    out.write(f"{to_lambda(query, store, args.ascii_lambda)}\n")
    return 0


def cmd_suggest(args, out) -> int:
    store = _graph_without_journal(args)
    queue = _open_queue(args, store)
    if args.action == "list":
        for rec in queue.list_queue(args.state):
            from eql.parser import format_suggestion

            dup = " duplicate" if rec.duplicate else ""
            out.write(f"{rec.id}\t{rec.state}{dup}\t{rec.submitted_at}\t{format_suggestion(rec.suggestion)}\n")
        return 0
    if args.action == "submit":
        text = _read_query(args)
        sid, ack = queue.submit(text)
        flag = " (duplicates an existing statement)" if queue.get(sid).duplicate else ""
        out.write(f"{ack}: id {sid}{flag}\n")
        return 0
    if args.id is None:
        raise CLIError(f"{args.action} needs a suggestion id")
    outcome = queue.review(args.id, args.action, args.note or "")
    out.write(outcome.message + "\n")
    if outcome.error:
        out.write(f"reason: {outcome.error}\n")
        return 1
    return 0


def _graph_without_journal(args) -> Store:
    return load_store(graph_paths(args))


# -- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eql", description="Query qualified knowledge graphs.")
    p.add_argument("--kg", action="append", metavar="FILE",
                   help=f"KGT graph file (repeatable; default from ${KG_ENV})")
    p.add_argument("--page-size", type=int, default=PAGE_SIZE, metavar="N")
    p.add_argument("--ascii-lambda", action="store_true", help="lambda output without λ ∃ ∧ ∨ ¬")
    p.add_argument("--no-fuzzy", action="store_true", help="do not suggest similar names")
    p.add_argument("--mode", choices=MODES, default="table", help="result rendering")
    p.add_argument("--journal", metavar="FILE",
                   help=f"suggestion journal (default ${JOURNAL_ENV} or ./{DEFAULT_JOURNAL})")
    sub = p.add_subparsers(dest="command", required=True)

    load = sub.add_parser("load", help="load graph files and report what they contain")
    load.add_argument("files", nargs="*")
    load.set_defaults(func=cmd_load)

    for name, func, helptext in (("query", cmd_query, "run one query"),
                                 ("lambda", cmd_lambda, "print a query as a lambda term")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("text", nargs="?")
        sp.add_argument("-f", "--file", metavar="FILE")
        sp.set_defaults(func=func)

    sub.add_parser("repl", help="interactive session").set_defaults(func=cmd_repl)

    card = sub.add_parser("card", help="knowledge card of an entity")
    card.add_argument("entity")
    card.add_argument("--csv", action="store_true")
    card.set_defaults(func=cmd_card)

    sq = sub.add_parser("suggest-queue", help="submit and review \\suggest requests")
    sq.add_argument("action", choices=("list", "submit", "approve", "reject"))
    sq.add_argument("id", nargs="?", type=int)
    sq.add_argument("--state", choices=("pending", "approved", "rejected"))
    sq.add_argument("--note", default="")
    sq.add_argument("--text", dest="text")
    sq.add_argument("-f", "--file", metavar="FILE")
    sq.set_defaults(func=cmd_suggest)
    return p


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.page_size < 1:
        parser.error("--page-size must be positive")
    try:
        return args.func(args, out)
    except EQLSyntaxError as exc:
        print(f"eql: syntax error: {exc}", file=sys.stderr)
    except (EQLError, OSError) as exc:
        print(f"eql: {exc}", file=sys.stderr)
    return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
