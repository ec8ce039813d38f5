"""The .cg model language.

    model M {
        obs node x [3];      # attributes: det, obs; bracket = domain size
        node y;
        x -> y;              # directed arc
        x -- y;              # undirected edge (not both!)
        plate p [N] {        # bracketed name = cardinality symbol
            node z;
        }
    }

`#` starts a line comment.  Parsing recovers after a bad statement so one
pass reports many errors; `resolve` turns an AST into a validated
PlateModel, reusing the statement spans for graph-level diagnostics.
Neither ever raises on arbitrary input text.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

from .core import ChainGraph, Edge, GraphError, NodeAttr, Violation
from .plates import Plate, PlateError, PlateModel, validate_plates
from .core import validate_chain_graph

MAX_PLATE_NESTING = 16

_KEYWORDS = frozenset({"model", "node", "plate", "det", "obs"})


@dataclass(frozen=True)
class SourceSpan:
    line: int  # 1-based, of the span start
    column: int  # 1-based
    start: int  # byte offset, inclusive
    end: int  # byte offset, exclusive

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError("span start after end")


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: SourceSpan | None = None

    def render(self, filename: str = "<model>") -> str:
        if self.span is None:
            return f"{filename}: {self.severity}: {self.message}"
        return f"{filename}:{self.span.line}:{self.span.column}: {self.severity}: {self.message}"


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class NodeDecl:
    name: str
    attrs: tuple[str, ...]  # subset of {"det", "obs"}, canonical order
    domain: int | None
    span: SourceSpan


@dataclass(frozen=True)
class EdgeDecl:
    u: str
    v: str
    directed: bool
    span: SourceSpan


@dataclass(frozen=True)
class PlateDecl:
    name: str
    symbol: str
    body: tuple["Stmt", ...]
    span: SourceSpan


Stmt = Union[NodeDecl, EdgeDecl, PlateDecl]


@dataclass(frozen=True)
class ModelAst:
    name: str
    statements: tuple[Stmt, ...]
    span: SourceSpan


@dataclass
class ParseResult:
    ast: ModelAst | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.ast is not None and not any(d.severity == "error" for d in self.diagnostics)


# -- lexer -------------------------------------------------------------------

_PUNCT = {"{": "lbrace", "}": "rbrace", "[": "lbracket", "]": "rbracket", ";": "semi"}


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | keyword | int | lbrace | rbrace | lbracket | rbracket | semi | arrow | line | eof
    value: str
    span: SourceSpan


def _lex(source: str, diags: list[Diagnostic]) -> list[_Token]:
    toks: list[_Token] = []
    line, col, byte = 1, 1, 0
    i, n = 0, len(source)

    def advance(ch: str) -> None:
        nonlocal line, col, byte
        byte += len(ch.encode("utf-8", "surrogatepass"))
        if ch == "\n":
            line, col = line + 1, 1
        else:
            col += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(ch)
            i += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                advance(source[i])
                i += 1
            continue
        L, c, b = line, col, byte
        if ch in _PUNCT:
            advance(ch)
            i += 1
            toks.append(_Token(_PUNCT[ch], ch, SourceSpan(L, c, b, byte)))
            continue
        if ch == "-":
            nxt = source[i + 1] if i + 1 < n else ""
            if nxt in (">", "-"):
                advance(ch)
                advance(nxt)
                i += 2
                kind = "arrow" if nxt == ">" else "line"
                toks.append(_Token(kind, "->" if nxt == ">" else "--", SourceSpan(L, c, b, byte)))
            else:
                advance(ch)
                i += 1
                diags.append(Diagnostic("error", "stray '-': expected '->' or '--'", SourceSpan(L, c, b, byte)))
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                advance(source[j])
                j += 1
            toks.append(_Token("int", source[i:j], SourceSpan(L, c, b, byte)))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                advance(source[j])
                j += 1
            word = source[i:j]
            if not word.isascii():
                diags.append(Diagnostic("error", f"non-ASCII identifier {word!r}", SourceSpan(L, c, b, byte)))
            else:
                kind = "keyword" if word in _KEYWORDS else "ident"
                toks.append(_Token(kind, word, SourceSpan(L, c, b, byte)))
            i = j
            continue
        advance(ch)
        i += 1
        diags.append(Diagnostic("error", f"unexpected character {ch!r}", SourceSpan(L, c, b, byte)))
    toks.append(_Token("eof", "", SourceSpan(line, col, byte, byte)))
    return toks


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, toks: list[_Token], diags: list[Diagnostic]) -> None:
        self.toks = toks
        self.pos = 0
        self.diags = diags

    @property
    def cur(self) -> _Token:
        return self.toks[self.pos]

    def bump(self) -> _Token:
        t = self.cur
        if t.kind != "eof":
            self.pos += 1
        return t

    def at_kw(self, word: str) -> bool:
        return self.cur.kind == "keyword" and self.cur.value == word

    def error(self, message: str, span: SourceSpan | None = None) -> None:
        self.diags.append(Diagnostic("error", message, span or self.cur.span))

    def expect(self, kind: str, what: str) -> _Token | None:
        if self.cur.kind == kind:
            return self.bump()
        got = self.cur.value or "end of input"
        self.error(f"expected {what}, found {got!r}")
        return None

    def expect_kw(self, word: str) -> bool:
        if self.at_kw(word):
            self.bump()
            return True
        got = self.cur.value or "end of input"
        self.error(f"expected '{word}', found {got!r}")
        return False

    def sync_statement(self) -> None:
        """Skip to just past the next ';' at brace depth 0 (or stop before
        an unmatched '}' / at end of input)."""
        depth = 0
        while True:
            k = self.cur.kind
            if k == "eof":
                return
            if k == "lbrace":
                depth += 1
            elif k == "rbrace":
                if depth == 0:
                    return
                depth -= 1
            elif k == "semi" and depth == 0:
                self.bump()
                return
            self.bump()

    def skip_block(self) -> None:
        """Consume a '{ ... }' without building anything (over-deep plates)."""
        if self.cur.kind != "lbrace":
            return
        depth = 0
        while self.cur.kind != "eof":
            k = self.bump().kind
            if k == "lbrace":
                depth += 1
            elif k == "rbrace":
                depth -= 1
                if depth == 0:
                    return

    def parse_model(self) -> ModelAst | None:
        first = self.cur.span
        if not self.expect_kw("model"):
            return None
        name_tok = self.expect("ident", "model name")
        if name_tok is None:
            return None
        if self.expect("lbrace", "'{'") is None:
            return None
        stmts = self.parse_statements(depth=0)
        closing = self.expect("rbrace", "'}'")
        if self.cur.kind != "eof":
            self.error("trailing input after model")
        end = (closing or self.toks[self.pos - 1] if self.pos else self.cur).span.end
        return ModelAst(name_tok.value, tuple(stmts), SourceSpan(first.line, first.column, first.start, end))

    def parse_statements(self, depth: int) -> list[Stmt]:
        out: list[Stmt] = []
        while True:
            k = self.cur.kind
            if k in ("rbrace", "eof"):
                return out
            stmt = self.parse_statement(depth)
            if stmt is not None:
                out.append(stmt)

    def parse_statement(self, depth: int) -> Stmt | None:
        t = self.cur
        if t.kind == "keyword" and t.value in ("det", "obs", "node"):
            return self.parse_node_decl()
        if t.kind == "keyword" and t.value == "plate":
            return self.parse_plate_decl(depth)
        if t.kind == "ident":
            return self.parse_edge_decl()
        self.error(f"expected a statement, found {t.value or 'end of input'!r}")
        self.sync_statement()
        return None

    def parse_node_decl(self) -> NodeDecl | None:
        start = self.cur.span
        attrs: list[str] = []
        while self.cur.kind == "keyword" and self.cur.value in ("det", "obs"):
            word = self.bump().value
            if word in attrs:
                self.error(f"duplicate attribute '{word}'", self.toks[self.pos - 1].span)
            else:
                attrs.append(word)
        if not self.expect_kw("node"):
            self.sync_statement()
            return None
        name = self.expect("ident", "node name")
        if name is None:
            self.sync_statement()
            return None
        domain: int | None = None
        if self.cur.kind == "lbracket":
            self.bump()
            size = self.expect("int", "domain size")
            if size is None or self.expect("rbracket", "']'") is None:
                self.sync_statement()
                return None
            domain = int(size.value)
            if domain < 1:
                self.error(f"domain size must be at least 1, got {domain}", size.span)
                self.sync_statement()
                return None
        semi = self.expect("semi", "';'")
        if semi is None:
            self.sync_statement()
            return None
        ordered = tuple(a for a in ("det", "obs") if a in attrs)
        return NodeDecl(name.value, ordered, domain, _join(start, semi.span))

    def parse_edge_decl(self) -> EdgeDecl | None:
        u = self.bump()  # ident, checked by caller
        if self.cur.kind not in ("arrow", "line"):
            got = self.cur.value or "end of input"
            self.error(f"expected '->' or '--' after {u.value!r}, found {got!r}")
            self.sync_statement()
            return None
        directed = self.bump().kind == "arrow"
        v = self.expect("ident", "edge endpoint")
        if v is None:
            self.sync_statement()
            return None
        semi = self.expect("semi", "';'")
        if semi is None:
            self.sync_statement()
            return None
        return EdgeDecl(u.value, v.value, directed, _join(u.span, semi.span))

    def parse_plate_decl(self, depth: int) -> PlateDecl | None:
        start = self.bump().span  # 'plate'
        name = self.expect("ident", "plate name")
        if name is None:
            self.sync_statement()
            return None
        if self.expect("lbracket", "'['") is None:
            self.sync_statement()
            return None
        symbol = self.expect("ident", "cardinality symbol")
        if symbol is None or self.expect("rbracket", "']'") is None:
            self.sync_statement()
            return None
        if depth + 1 > MAX_PLATE_NESTING:
            self.error(f"plates nested deeper than {MAX_PLATE_NESTING}", start)
            self.skip_block()
            return None
        if self.expect("lbrace", "'{'") is None:
            self.sync_statement()
            return None
        body = self.parse_statements(depth + 1)
        closing = self.expect("rbrace", "'}'")
        end = closing.span if closing else self.toks[max(self.pos - 1, 0)].span
        return PlateDecl(name.value, symbol.value, tuple(body), _join(start, end))


def _join(a: SourceSpan, b: SourceSpan) -> SourceSpan:
    return SourceSpan(a.line, a.column, a.start, max(a.end, b.end))


def parse(source: str) -> ParseResult:
    """Parse model text.  Never raises; errors are returned as diagnostics
    and parsing resumes at the next statement."""
    diags: list[Diagnostic] = []
    toks = _lex(source, diags)
    ast = _Parser(toks, diags).parse_model()
    return ParseResult(ast, diags)


# -- resolver ----------------------------------------------------------------


@dataclass
class ResolveResult:
    model: PlateModel | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.model is not None


def _walk(stmts: tuple[Stmt, ...], stack: tuple[str, ...]) -> Iterator[tuple[Stmt, tuple[str, ...]]]:
    for s in stmts:
        yield s, stack
        if isinstance(s, PlateDecl):
            yield from _walk(s.body, stack + (s.name,))


def resolve(ast: ModelAst) -> ResolveResult:
    diags: list[Diagnostic] = []
    node_spans: dict[str, SourceSpan] = {}
    attrs: dict[str, NodeAttr] = {}
    plate_members: dict[str, set[str]] = {}
    plate_decls: dict[str, PlateDecl] = {}
    plate_parent: dict[str, str | None] = {}
    plate_order: list[str] = []
    edge_decls: list[EdgeDecl] = []

    for stmt, stack in _walk(ast.statements, ()):
        if isinstance(stmt, NodeDecl):
            if stmt.name in attrs:
                diags.append(Diagnostic("error", f"duplicate node {stmt.name!r}", stmt.span))
                continue
            attrs[stmt.name] = NodeAttr(
                deterministic="det" in stmt.attrs,
                observed="obs" in stmt.attrs,
                domain_size=stmt.domain if stmt.domain is not None else 2,
            )
            node_spans[stmt.name] = stmt.span
            for plate_name in stack:
                plate_members[plate_name].add(stmt.name)
        elif isinstance(stmt, PlateDecl):
            if stmt.name in plate_decls:
                diags.append(Diagnostic("error", f"duplicate plate {stmt.name!r}", stmt.span))
                continue
            plate_decls[stmt.name] = stmt
            plate_members[stmt.name] = set()
            plate_parent[stmt.name] = stack[-1] if stack else None
            plate_order.append(stmt.name)
        else:
            edge_decls.append(stmt)

    seen_pairs: dict[frozenset[str], EdgeDecl] = {}
    edges: list[Edge] = []
    for d in edge_decls:
        bad = False
        for endpoint in (d.u, d.v):
            if endpoint not in attrs:
                diags.append(Diagnostic("error", f"unknown node {endpoint!r} in edge", d.span))
                bad = True
        if bad:
            continue
        if d.u == d.v:
            diags.append(Diagnostic("error", f"self loop on {d.u!r}", d.span))
            continue
        pair = frozenset((d.u, d.v))
        if pair in seen_pairs:
            diags.append(Diagnostic("error", f"duplicate edge between {d.u!r} and {d.v!r}", d.span))
            continue
        seen_pairs[pair] = d
        edges.append(Edge(d.u, d.v, d.directed))

    if not attrs:
        diags.append(Diagnostic("error", "model declares no nodes", ast.span))

    if any(d.severity == "error" for d in diags):
        return ResolveResult(None, diags)

    try:
        graph = ChainGraph(attrs, edges)
        model = PlateModel(
            graph,
            tuple(
                Plate(
                    name,
                    plate_decls[name].symbol,
                    frozenset(plate_members[name]),
                    plate_parent[name],
                )
                for name in plate_order
            ),
            name=ast.name,
        )
    except (GraphError, PlateError) as exc:
        diags.append(Diagnostic("error", str(exc), ast.span))
        return ResolveResult(None, diags)

    def span_for(v: Violation) -> SourceSpan:
        if v.edge is not None:
            for d in edge_decls:
                if {d.u, d.v} == set(v.edge):
                    return d.span
        for n in v.nodes:
            if n in node_spans:
                return node_spans[n]
        return ast.span

    report = validate_chain_graph(graph)
    plate_report = validate_plates(model)
    for violation in report.errors + plate_report.errors:
        diags.append(Diagnostic("error", violation.message, span_for(violation)))
    for text in report.warnings + plate_report.warnings:
        diags.append(Diagnostic("warning", text, ast.span))

    if any(d.severity == "error" for d in diags):
        return ResolveResult(None, diags)
    return ResolveResult(model, diags)


# -- printing and loading ----------------------------------------------------


def print_model(ast: ModelAst) -> str:
    """Canonical text for an AST; re-parsing it yields an equal AST."""

    lines: list[str] = [f"model {ast.name} {{"]

    def emit(stmts: tuple[Stmt, ...], indent: int) -> None:
        pad = "    " * indent
        for s in stmts:
            if isinstance(s, NodeDecl):
                head = " ".join((*s.attrs, "node", s.name))
                dom = f" [{s.domain}]" if s.domain is not None else ""
                lines.append(f"{pad}{head}{dom};")
            elif isinstance(s, EdgeDecl):
                op = "->" if s.directed else "--"
                lines.append(f"{pad}{s.u} {op} {s.v};")
            else:
                lines.append(f"{pad}plate {s.name} [{s.symbol}] {{")
                emit(s.body, indent + 1)
                lines.append(f"{pad}}}")

    emit(ast.statements, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_model(m: Union[PlateModel, ChainGraph], name: str | None = None) -> str:
    """Model text that resolves back to an equivalent model.

    Nodes keep their declaration order except that a plate's members are
    grouped into its block (they are contiguous for any parsed model).
    """
    if isinstance(m, ChainGraph):
        m = PlateModel(m, (), name=name or "G")
    g = m.graph
    lines: list[str] = [f"model {name or m.name} {{"]

    innermost: dict[str, str] = {}
    for v in g.node_names:
        chain = m.membership(v)
        if chain:
            innermost[v] = chain[-1].name
    children: dict[str | None, list[str]] = {}
    for p in m.plates:
        children.setdefault(p.parent, []).append(p.name)

    def node_line(v: str, pad: str) -> str:
        a = g.attr(v)
        words = [w for w, on in (("det", a.deterministic), ("obs", a.observed)) if on]
        words += ["node", v]
        dom = f" [{a.domain_size}]" if a.domain_size != 2 else ""
        return f"{pad}{' '.join(words)}{dom};"

    emitted: set[str] = set()

    def emit_plate(name_: str, indent: int) -> None:
        pad = "    " * indent
        p = m.plate(name_)
        lines.append(f"{pad}plate {p.name} [{p.symbol}] {{")
        for v in g.node_names:
            if innermost.get(v) == name_:
                lines.append(node_line(v, pad + "    "))
                emitted.add(v)
        for child in children.get(name_, []):
            emit_plate(child, indent + 1)
        lines.append(f"{pad}}}")

    opened: set[str] = set()
    for v in g.node_names:
        if v in innermost:
            root = m.membership(v)[0].name
            if root not in opened:
                opened.add(root)
                emit_plate(root, 1)
        elif v not in emitted:
            lines.append(node_line(v, "    "))
            emitted.add(v)
    for e in g.edges:
        op = "->" if e.directed else "--"
        lines.append(f"    {e.u} {op} {e.v};")
    lines.append("}")
    return "\n".join(lines) + "\n"


class ModelError(ValueError):
    """Raised by the throwing convenience loaders; carries rendered diagnostics."""

    def __init__(self, filename: str, diagnostics: list[Diagnostic]) -> None:
        self.filename = filename
        self.diagnostics = diagnostics
        super().__init__(
            "\n".join(d.render(filename) for d in diagnostics) or f"{filename}: invalid model"
        )


def parse_model(source: str, filename: str = "<model>") -> PlateModel:
    """Parse + resolve, raising ModelError on any error diagnostic."""
    parsed = parse(source)
    if parsed.ast is None or not parsed.ok:
        raise ModelError(filename, [d for d in parsed.diagnostics if d.severity == "error"])
    resolved = resolve(parsed.ast)
    if resolved.model is None:
        raise ModelError(filename, [d for d in resolved.diagnostics if d.severity == "error"])
    return resolved.model


def load_model(path: str | Path) -> PlateModel:
    p = Path(path)
    return parse_model(p.read_text(encoding="utf-8"), str(p))
