"""Python concrete-syntax-tree parser with byte spans and error recovery.

Builds trees whose node-type names follow the tree-sitter Python grammar
vocabulary (module, function_definition, identifier, elif_clause, ERROR,
anonymous keyword/punctuation tokens, ...), implemented on the stdlib
``ast`` and ``tokenize`` modules so the toolkit has no native-extension
dependency.

Construction happens in three layers:

1. lex the source into terminal tokens with absolute UTF-8 byte spans
   (``tokenize`` reports character columns; ``ast`` reports byte columns;
   both are normalized here);
2. build the named-node skeleton from ``ast``, synthesizing the structural
   nodes CPython's AST omits (parameters, block, elif_clause, else_clause,
   for_in_clause, decorator wrappers, ...). Regions that fail to parse are
   wrapped in ERROR nodes via a line-based recovery scan, so parsing never
   fails on text input;
3. attach every terminal token to the deepest node containing its span.
   A token whose span equals a childless named node (identifier, integer,
   string, pass_statement, ...) is absorbed by it; everything else becomes
   an anonymous leaf whose node type is its literal text.
"""

from __future__ import annotations

import ast
import io
import keyword
import tokenize
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

GRAMMAR_NAME = "python"
GRAMMAR_VERSION = "asctk-python-cst/1.0"


@dataclass
class SyntaxNode:
    """One tree node: grammar type name, half-open byte span, children."""

    node_type: str
    start_byte: int
    end_byte: int
    children: list["SyntaxNode"] = field(default_factory=list)
    is_named: bool = True

    def walk(self):
        """Yield this node and all descendants in preorder."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class SyntaxTree:
    root: SyntaxNode
    source_len: int

    def walk(self):
        return self.root.walk()


@dataclass(frozen=True)
class _Tok:
    kind: int
    text: str
    start_byte: int
    end_byte: int


def _line_byte_starts(lines: list[str]) -> list[int]:
    starts = [0]
    for line in lines:
        starts.append(starts[-1] + len(line.encode("utf-8")) + 1)  # +1 for '\n'
    return starts


def _lex(source: str, line_starts: list[int]) -> list[_Tok]:
    """Tolerant lexer: collects tokens, restarting after tokenize errors.

    Sources that ast.parse accepts always tokenize fully; restarts only
    matter near ERROR regions (unbalanced brackets, bad indents, unterminated
    strings), where best-effort terminals are still useful for the tree.
    """
    lines = source.split("\n")
    skip = {
        tokenize.NEWLINE,
        tokenize.NL,
        tokenize.INDENT,
        tokenize.DEDENT,
        tokenize.ENDMARKER,
        tokenize.ENCODING,
    }
    out: list[_Tok] = []
    max_end = -1
    start_line = 0  # 0-based line to resume lexing from
    while start_line < len(lines):
        text = "\n".join(lines[start_line:])
        last_row = 0  # local 1-based row of the last token seen this attempt
        try:
            for tok in tokenize.generate_tokens(io.StringIO(text).readline):
                last_row = max(last_row, tok.end[0])
                if tok.type in skip or not tok.string or tok.string.isspace():
                    continue
                srow, scol = tok.start
                erow, ecol = tok.end
                gs = start_line + srow - 1
                ge = start_line + erow - 1
                sb = line_starts[gs] + len(lines[gs][:scol].encode("utf-8"))
                eb = line_starts[ge] + len(lines[ge][:ecol].encode("utf-8"))
                if sb >= eb or sb < max_end:
                    continue
                out.append(_Tok(tok.type, tok.string, sb, eb))
                max_end = eb
        except (tokenize.TokenError, IndentationError, SyntaxError, ValueError):
            next_line = start_line + max(last_row, 1)
            start_line = max(next_line, start_line + 1)
            continue
        break
    return out


_LITERAL_NUMBER_FLOAT = ("float",)


def _classify(tok: _Tok) -> tuple[str, bool]:
    """Map a lexical token to (node_type, is_named) for leaf attachment."""
    if tok.kind == tokenize.NAME:
        if keyword.iskeyword(tok.text):
            return tok.text, False
        return "identifier", True
    if tok.kind == tokenize.NUMBER:
        low = tok.text.lower()
        if low.startswith(("0x", "0o", "0b")):
            return "integer", True
        if "." in low or "e" in low:
            return "float", True
        return "integer", True
    if tok.kind == tokenize.STRING:
        return "string", True
    if tok.kind == tokenize.COMMENT:
        return "comment", True
    return tok.text, False


class ParseEncodingError(ValueError):
    """Raised when byte input is not valid UTF-8."""


def parse(source: str | bytes) -> SyntaxTree:
    """Parse Python source into a concrete syntax tree with byte spans.

    Never fails on text input; syntactically invalid regions become ERROR
    nodes. Bytes input must be valid UTF-8.
    """
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseEncodingError(f"source is not valid UTF-8: {exc}") from exc
    lines = source.split("\n")
    line_starts = _line_byte_starts(lines)
    source_len = len(source.encode("utf-8"))
    tokens = _lex(source, line_starts)
    builder = _Builder(source, lines, line_starts, tokens)
    root = builder.build_module(source_len)
    return SyntaxTree(root=root, source_len=source_len)


# Named leaf kinds that absorb their own lexical token (span-equal rule).
# Everything childless and named absorbs, so no explicit set is needed; this
# comment documents the intent where the rule is applied.


class _Builder:
    def __init__(self, source: str, lines: list[str], line_starts: list[int], tokens: list[_Tok]):
        self.source = source
        self.lines = lines
        self.line_starts = line_starts
        self.tokens = tokens
        self.tok_starts = [t.start_byte for t in tokens]

    # -- byte-offset helpers -------------------------------------------------

    def _abs(self, line_offset: int, lineno: int, col: int) -> int:
        return self.line_starts[line_offset + lineno - 1] + col

    def _span(self, node: ast.AST, line_offset: int) -> tuple[int, int]:
        return (
            self._abs(line_offset, node.lineno, node.col_offset),
            self._abs(line_offset, node.end_lineno, node.end_col_offset),
        )

    # -- token searches ------------------------------------------------------

    def _token_at(self, byte: int) -> _Tok | None:
        i = bisect_left(self.tok_starts, byte)
        if i < len(self.tokens) and self.tokens[i].start_byte == byte:
            return self.tokens[i]
        return None

    def _find_after(self, text: str, lo: int, hi: int) -> _Tok | None:
        """First token equal to text with lo <= start and end <= hi."""
        i = bisect_left(self.tok_starts, lo)
        while i < len(self.tokens) and self.tokens[i].start_byte < hi:
            t = self.tokens[i]
            if t.text == text and t.end_byte <= hi:
                return t
            i += 1
        return None

    def _find_before(self, text: str, hi: int, lo: int) -> _Tok | None:
        """Last token equal to text with start >= lo and end <= hi."""
        i = bisect_right(self.tok_starts, hi) - 1
        while i >= 0 and self.tokens[i].start_byte >= lo:
            t = self.tokens[i]
            if t.text == text and t.end_byte <= hi:
                return t
            i -= 1
        return None

    def _match_paren(self, open_tok: _Tok) -> _Tok | None:
        """Find the OP token closing open_tok ('(' -> ')', etc.)."""
        close = {"(": ")", "[": "]", "{": "}"}[open_tok.text]
        depth = 0
        i = bisect_left(self.tok_starts, open_tok.start_byte)
        while i < len(self.tokens):
            t = self.tokens[i]
            if t.kind == tokenize.OP:
                if t.text == open_tok.text:
                    depth += 1
                elif t.text == close:
                    depth -= 1
                    if depth == 0:
                        return t
            i += 1
        return None

    # -- module assembly with error recovery ----------------------------------

    def build_module(self, source_len: int) -> SyntaxNode:
        root = SyntaxNode("module", 0, source_len)
        for segment in self._segment(0, len(self.lines)):
            kind = segment[0]
            if kind == "ast":
                _, mod, line_lo = segment
                for stmt in mod.body:
                    root.children.extend(self._stmt(stmt, line_lo))
            else:
                _, lo_byte, hi_byte = segment
                root.children.append(SyntaxNode("ERROR", lo_byte, hi_byte))
        self._attach_tokens(root)
        _finalize(root)
        return root

    def _try_parse(self, lo: int, hi: int) -> ast.Module | None:
        try:
            return ast.parse("\n".join(self.lines[lo:hi]))
        except (SyntaxError, ValueError, MemoryError, RecursionError):
            return None

    def _longest_prefix(self, lo: int, hi: int) -> tuple[ast.Module | None, int]:
        for k in range(hi, lo, -1):
            mod = self._try_parse(lo, k)
            if mod is not None:
                return mod, k
        return None, lo

    def _segment(self, lo: int, hi: int):
        """Split lines[lo:hi) into parseable modules and ERROR byte ranges."""
        segments = []
        while lo < hi:
            mod, k = self._longest_prefix(lo, hi)
            if k > lo:
                segments.append(("ast", mod, lo))
                lo = k
                continue
            j = lo + 1
            while j < hi and self._longest_prefix(j, hi)[1] == j:
                j += 1
            span = self._region_bytes(lo, j)
            if span is not None:
                segments.append(("error", *span))
            lo = j
        return segments

    def _region_bytes(self, line_lo: int, line_hi: int) -> tuple[int, int] | None:
        """Byte span of the non-whitespace content of a line region."""
        text = "\n".join(self.lines[line_lo:line_hi])
        stripped = text.strip()
        if not stripped:
            return None
        lead = text[: len(text) - len(text.lstrip())]
        start = self.line_starts[line_lo] + len(lead.encode("utf-8"))
        end = start + len(stripped.encode("utf-8"))
        return start, end

    # -- statement conversion --------------------------------------------------

    def _stmt(self, s: ast.stmt, off: int) -> list[SyntaxNode]:
        start, end = self._span(s, off)
        if isinstance(s, (ast.FunctionDef, ast.AsyncFunctionDef)):
            return [self._definition(s, off, self._function_def(s, off, start, end))]
        if isinstance(s, ast.ClassDef):
            return [self._definition(s, off, self._class_def(s, off, start, end))]
        if isinstance(s, ast.If):
            return [self._if_stmt(s, off, start, end)]
        if isinstance(s, (ast.For, ast.AsyncFor)):
            children = [
                self._expr(s.target, off),
                self._expr(s.iter, off),
                self._block(s.body, off),
            ]
            clause = self._else_clause(s.orelse, off, children[-1].end_byte)
            if clause:
                children.append(clause)
            return [SyntaxNode("for_statement", start, end, children)]
        if isinstance(s, ast.While):
            children = [self._expr(s.test, off), self._block(s.body, off)]
            clause = self._else_clause(s.orelse, off, children[-1].end_byte)
            if clause:
                children.append(clause)
            return [SyntaxNode("while_statement", start, end, children)]
        if isinstance(s, (ast.With, ast.AsyncWith)):
            children: list[SyntaxNode] = []
            for item in s.items:
                children.append(self._expr(item.context_expr, off))
                if item.optional_vars is not None:
                    children.append(self._expr(item.optional_vars, off))
            children.append(self._block(s.body, off))
            return [SyntaxNode("with_statement", start, end, children)]
        if isinstance(s, (ast.Try, getattr(ast, "TryStar", ast.Try))):
            return [self._try_stmt(s, off, start, end)]
        if isinstance(s, ast.Match):
            return [self._match_stmt(s, off, start, end)]
        if isinstance(s, ast.Return):
            kids = [self._expr(s.value, off)] if s.value else []
            return [SyntaxNode("return_statement", start, end, kids)]
        if isinstance(s, ast.Delete):
            return [SyntaxNode("delete_statement", start, end,
                               [self._expr(t, off) for t in s.targets])]
        if isinstance(s, ast.Assign):
            return [self._wrap_stmt(self._assign(s, off, start, end), start, end)]
        if isinstance(s, ast.AugAssign):
            inner = SyntaxNode("augmented_assignment", start, end,
                               [self._expr(s.target, off), self._expr(s.value, off)])
            return [self._wrap_stmt(inner, start, end)]
        if isinstance(s, ast.AnnAssign):
            kids = [self._expr(s.target, off), self._type(s.annotation, off)]
            if s.value is not None:
                kids.append(self._expr(s.value, off))
            inner = SyntaxNode("assignment", start, end, kids)
            return [self._wrap_stmt(inner, start, end)]
        if isinstance(s, ast.Raise):
            kids = [self._expr(e, off) for e in (s.exc, s.cause) if e is not None]
            return [SyntaxNode("raise_statement", start, end, kids)]
        if isinstance(s, ast.Assert):
            kids = [self._expr(s.test, off)]
            if s.msg is not None:
                kids.append(self._expr(s.msg, off))
            return [SyntaxNode("assert_statement", start, end, kids)]
        if isinstance(s, ast.Import):
            return [SyntaxNode("import_statement", start, end,
                               [self._alias(a, off) for a in s.names])]
        if isinstance(s, ast.ImportFrom):
            kids = [self._alias(a, off) for a in s.names if a.name != "*"]
            return [SyntaxNode("import_from_statement", start, end, kids)]
        if isinstance(s, ast.Global):
            return [SyntaxNode("global_statement", start, end)]
        if isinstance(s, ast.Nonlocal):
            return [SyntaxNode("nonlocal_statement", start, end)]
        if isinstance(s, ast.Expr):
            return [SyntaxNode("expression_statement", start, end,
                               [self._expr(s.value, off)])]
        if isinstance(s, ast.Pass):
            return [SyntaxNode("pass_statement", start, end)]
        if isinstance(s, ast.Break):
            return [SyntaxNode("break_statement", start, end)]
        if isinstance(s, ast.Continue):
            return [SyntaxNode("continue_statement", start, end)]
        # Unknown statement kind: emit a generic named node so spans stay valid.
        return [SyntaxNode(type(s).__name__.lower(), start, end)]

    def _wrap_stmt(self, inner: SyntaxNode, start: int, end: int) -> SyntaxNode:
        return SyntaxNode("expression_statement", start, end, [inner])

    def _assign(self, s: ast.Assign, off: int, start: int, end: int) -> SyntaxNode:
        # x = y = 1 nests right-associatively: assignment(x, assignment(y, 1)).
        value = self._expr(s.value, off)
        targets = [self._expr(t, off) for t in s.targets]
        node = value
        for target in reversed(targets):
            node = SyntaxNode("assignment", target.start_byte, end, [target, node])
        node.start_byte = start
        return node

    def _block(self, body: list[ast.stmt], off: int) -> SyntaxNode:
        first, _ = self._span(body[0], off)
        _, last = self._span(body[-1], off)
        children: list[SyntaxNode] = []
        for stmt in body:
            children.extend(self._stmt(stmt, off))
        return SyntaxNode("block", first, last, children)

    def _else_clause(self, orelse: list[ast.stmt], off: int, after: int) -> SyntaxNode | None:
        if not orelse:
            return None
        first_start, _ = self._span(orelse[0], off)
        tok = self._find_before("else", first_start, after)
        start = tok.start_byte if tok else first_start
        block = self._block(orelse, off)
        return SyntaxNode("else_clause", start, block.end_byte, [block])

    def _definition(self, s, off: int, definition: SyntaxNode) -> SyntaxNode:
        if not s.decorator_list:
            return definition
        decorators = []
        for dec in s.decorator_list:
            dstart, dend = self._span(dec, off)
            at = self._find_before("@", dstart, max(0, dstart - 256))
            decorators.append(
                SyntaxNode("decorator", at.start_byte if at else dstart, dend,
                           [self._expr(dec, off)])
            )
        start = decorators[0].start_byte
        return SyntaxNode("decorated_definition", start, definition.end_byte,
                          decorators + [definition])

    def _name_node(self, name: str, lo: int, hi: int) -> SyntaxNode:
        tok = self._find_after(name, lo, hi)
        if tok:
            return SyntaxNode("identifier", tok.start_byte, tok.end_byte)
        return SyntaxNode("identifier", lo, min(lo + len(name.encode("utf-8")), hi))

    def _function_def(self, s, off: int, start: int, end: int) -> SyntaxNode:
        name = self._name_node(s.name, start, end)
        children = [name]
        params = self._parameters(s.args, off, name.end_byte, end)
        if params is not None:
            children.append(params)
        if s.returns is not None:
            children.append(self._type(s.returns, off))
        children.append(self._block(s.body, off))
        return SyntaxNode("function_definition", start, end, children)

    def _class_def(self, s: ast.ClassDef, off: int, start: int, end: int) -> SyntaxNode:
        name = self._name_node(s.name, start, end)
        children = [name]
        if s.bases or s.keywords:
            lparen = self._find_after("(", name.end_byte, end)
            rparen = self._match_paren(lparen) if lparen else None
            args = [self._expr(b, off) for b in s.bases]
            args += [self._keyword_arg(k, off) for k in s.keywords]
            if lparen and rparen:
                children.append(
                    SyntaxNode("argument_list", lparen.start_byte, rparen.end_byte, args)
                )
            else:
                children.extend(args)
        children.append(self._block(s.body, off))
        return SyntaxNode("class_definition", start, end, children)

    def _parameters(self, args: ast.arguments, off: int, lo: int, hi: int) -> SyntaxNode | None:
        lparen = self._find_after("(", lo, hi)
        if lparen is None:
            return None
        rparen = self._match_paren(lparen)
        end = rparen.end_byte if rparen else hi
        return SyntaxNode("parameters", lparen.start_byte, end,
                          self._param_nodes(args, off, lparen.start_byte))

    def _param_nodes(self, args: ast.arguments, off: int, lo: int) -> list[SyntaxNode]:
        out: list[SyntaxNode] = []
        positional = list(args.posonlyargs) + list(args.args)
        defaults = list(args.defaults)
        # defaults align with the trailing positional parameters
        pad = [None] * (len(positional) - len(defaults))
        for arg, default in zip(positional, pad + defaults):
            out.append(self._param(arg, default, off))
        if args.vararg is not None:
            out.append(self._splat_param(args.vararg, off, "*", "list_splat_pattern", lo))
        for arg, default in zip(args.kwonlyargs, args.kw_defaults):
            out.append(self._param(arg, default, off))
        if args.kwarg is not None:
            out.append(self._splat_param(args.kwarg, off, "**", "dictionary_splat_pattern", lo))
        out.sort(key=lambda n: n.start_byte)
        return out

    def _param(self, arg: ast.arg, default: ast.expr | None, off: int) -> SyntaxNode:
        start, end = self._span(arg, off)
        name_end = start + len(arg.arg.encode("utf-8"))
        ident = SyntaxNode("identifier", start, name_end)
        if arg.annotation is None and default is None:
            return ident
        children = [ident]
        node_type = "identifier"
        if arg.annotation is not None:
            children.append(self._type(arg.annotation, off))
            node_type = "typed_parameter"
        if default is not None:
            dnode = self._expr(default, off)
            children.append(dnode)
            end = dnode.end_byte
            node_type = "typed_default_parameter" if arg.annotation else "default_parameter"
        return SyntaxNode(node_type, start, end, children)

    def _splat_param(self, arg: ast.arg, off: int, star: str, node_type: str, lo: int) -> SyntaxNode:
        start, end = self._span(arg, off)
        tok = self._find_before(star, start, lo)
        children = [SyntaxNode("identifier", start, start + len(arg.arg.encode("utf-8")))]
        if arg.annotation is not None:
            children.append(self._type(arg.annotation, off))
        return SyntaxNode(node_type, tok.start_byte if tok else start, end, children)

    def _type(self, annotation: ast.expr, off: int) -> SyntaxNode:
        start, end = self._span(annotation, off)
        return SyntaxNode("type", start, end, [self._expr(annotation, off)])

    def _if_stmt(self, s: ast.If, off: int, start: int, end: int) -> SyntaxNode:
        children = [self._expr(s.test, off), self._block(s.body, off)]
        orelse = s.orelse
        prev_end = children[-1].end_byte
        while orelse:
            nested = orelse[0]
            nstart, _ = self._span(nested, off)
            tok = self._token_at(nstart)
            if len(orelse) == 1 and isinstance(nested, ast.If) and tok and tok.text == "elif":
                cond = self._expr(nested.test, off)
                block = self._block(nested.body, off)
                children.append(
                    SyntaxNode("elif_clause", nstart, block.end_byte, [cond, block])
                )
                prev_end = block.end_byte
                orelse = nested.orelse
            else:
                clause = self._else_clause(orelse, off, prev_end)
                if clause:
                    children.append(clause)
                break
        return SyntaxNode("if_statement", start, end, children)

    def _try_stmt(self, s, off: int, start: int, end: int) -> SyntaxNode:
        children = [self._block(s.body, off)]
        for handler in s.handlers:
            hstart, hend = self._span(handler, off)
            kids: list[SyntaxNode] = []
            if handler.type is not None:
                kids.append(self._expr(handler.type, off))
            if handler.name:
                lo = kids[-1].end_byte if kids else hstart
                kids.append(self._name_node(handler.name, lo, hend))
            kids.append(self._block(handler.body, off))
            children.append(SyntaxNode("except_clause", hstart, hend, kids))
        if s.orelse:
            clause = self._else_clause(s.orelse, off, children[-1].end_byte)
            if clause:
                children.append(clause)
        if s.finalbody:
            fstart, _ = self._span(s.finalbody[0], off)
            tok = self._find_before("finally", fstart, children[-1].end_byte)
            block = self._block(s.finalbody, off)
            children.append(
                SyntaxNode("finally_clause", tok.start_byte if tok else fstart,
                           block.end_byte, [block])
            )
        return SyntaxNode("try_statement", start, end, children)

    def _match_stmt(self, s: ast.Match, off: int, start: int, end: int) -> SyntaxNode:
        children = [self._expr(s.subject, off)]
        for case in s.cases:
            pstart, pend = self._span(case.pattern, off)
            tok = self._find_before("case", pstart, children[-1].end_byte)
            cstart = tok.start_byte if tok else pstart
            kids = [SyntaxNode("case_pattern", pstart, pend,
                               self._pattern_exprs(case.pattern, off))]
            if case.guard is not None:
                kids.append(self._expr(case.guard, off))
            kids.append(self._block(case.body, off))
            children.append(SyntaxNode("case_clause", cstart, kids[-1].end_byte, kids))
        return SyntaxNode("match_statement", start, end, children)

    def _pattern_exprs(self, pattern: ast.AST, off: int) -> list[SyntaxNode]:
        out: list[SyntaxNode] = []
        for child in ast.iter_child_nodes(pattern):
            if isinstance(child, ast.expr):
                out.append(self._expr(child, off))
            else:
                out.extend(self._pattern_exprs(child, off))
        return out

    def _alias(self, a: ast.alias, off: int) -> SyntaxNode:
        start, end = self._span(a, off)
        if a.asname:
            name_end = start + len(a.name.encode("utf-8"))
            as_start = end - len(a.asname.encode("utf-8"))
            return SyntaxNode("aliased_import", start, end, [
                SyntaxNode("dotted_name", start, name_end),
                SyntaxNode("identifier", as_start, end),
            ])
        return SyntaxNode("dotted_name", start, end)

    # -- expression conversion --------------------------------------------------

    def _expr(self, e: ast.expr, off: int) -> SyntaxNode:
        start, end = self._span(e, off)
        if isinstance(e, ast.Name):
            return SyntaxNode("identifier", start, end)
        if isinstance(e, ast.Constant):
            return SyntaxNode(_constant_type(e.value), start, end)
        if isinstance(e, ast.JoinedStr):
            # f-string internals have unreliable spans before 3.12; atomic leaf
            return SyntaxNode("string", start, end)
        if isinstance(e, ast.BoolOp):
            values = [self._expr(v, off) for v in e.values]
            node = values[0]
            for right in values[1:]:
                node = SyntaxNode("boolean_operator", node.start_byte, right.end_byte,
                                  [node, right])
            return node
        if isinstance(e, ast.BinOp):
            return SyntaxNode("binary_operator", start, end,
                              [self._expr(e.left, off), self._expr(e.right, off)])
        if isinstance(e, ast.UnaryOp):
            kind = "not_operator" if isinstance(e.op, ast.Not) else "unary_operator"
            return SyntaxNode(kind, start, end, [self._expr(e.operand, off)])
        if isinstance(e, ast.Compare):
            kids = [self._expr(e.left, off)] + [self._expr(c, off) for c in e.comparators]
            return SyntaxNode("comparison_operator", start, end, kids)
        if isinstance(e, ast.Lambda):
            kids: list[SyntaxNode] = []
            params = self._lambda_parameters(e.args, off)
            if params is not None:
                kids.append(params)
            kids.append(self._expr(e.body, off))
            return SyntaxNode("lambda", start, end, kids)
        if isinstance(e, ast.IfExp):
            kids = [self._expr(e.body, off), self._expr(e.test, off), self._expr(e.orelse, off)]
            return SyntaxNode("conditional_expression", start, end, kids)
        if isinstance(e, ast.Dict):
            kids = []
            for key, value in zip(e.keys, e.values):
                vnode = self._expr(value, off)
                if key is None:
                    tok = self._find_before("**", vnode.start_byte, start)
                    kids.append(SyntaxNode("dictionary_splat",
                                           tok.start_byte if tok else vnode.start_byte,
                                           vnode.end_byte, [vnode]))
                else:
                    knode = self._expr(key, off)
                    kids.append(SyntaxNode("pair", knode.start_byte, vnode.end_byte,
                                           [knode, vnode]))
            return SyntaxNode("dictionary", start, end, kids)
        if isinstance(e, ast.Set):
            return SyntaxNode("set", start, end, [self._expr(x, off) for x in e.elts])
        if isinstance(e, ast.List):
            return SyntaxNode("list", start, end, [self._expr(x, off) for x in e.elts])
        if isinstance(e, ast.Tuple):
            return SyntaxNode("tuple", start, end, [self._expr(x, off) for x in e.elts])
        if isinstance(e, (ast.ListComp, ast.SetComp, ast.GeneratorExp)):
            names = {
                ast.ListComp: "list_comprehension",
                ast.SetComp: "set_comprehension",
                ast.GeneratorExp: "generator_expression",
            }
            kids = [self._expr(e.elt, off)]
            kids.extend(self._comp_clauses(e.generators, off, start))
            return SyntaxNode(names[type(e)], start, end, kids)
        if isinstance(e, ast.DictComp):
            knode = self._expr(e.key, off)
            vnode = self._expr(e.value, off)
            kids = [SyntaxNode("pair", knode.start_byte, vnode.end_byte, [knode, vnode])]
            kids.extend(self._comp_clauses(e.generators, off, start))
            return SyntaxNode("dictionary_comprehension", start, end, kids)
        if isinstance(e, ast.Await):
            return SyntaxNode("await", start, end, [self._expr(e.value, off)])
        if isinstance(e, ast.Yield):
            kids = [self._expr(e.value, off)] if e.value else []
            return SyntaxNode("yield", start, end, kids)
        if isinstance(e, ast.YieldFrom):
            return SyntaxNode("yield", start, end, [self._expr(e.value, off)])
        if isinstance(e, ast.Call):
            return self._call(e, off, start, end)
        if isinstance(e, ast.Attribute):
            attr_len = len(e.attr.encode("utf-8"))
            return SyntaxNode("attribute", start, end, [
                self._expr(e.value, off),
                SyntaxNode("identifier", end - attr_len, end),
            ])
        if isinstance(e, ast.Subscript):
            return SyntaxNode("subscript", start, end,
                              [self._expr(e.value, off), self._expr(e.slice, off)])
        if isinstance(e, ast.Slice):
            kids = [self._expr(x, off) for x in (e.lower, e.upper, e.step) if x is not None]
            return SyntaxNode("slice", start, end, kids)
        if isinstance(e, ast.Starred):
            inner = self._expr(e.value, off)
            tok = self._find_before("*", inner.start_byte, start)
            return SyntaxNode("list_splat", tok.start_byte if tok else start, end, [inner])
        if isinstance(e, ast.NamedExpr):
            return SyntaxNode("named_expression", start, end,
                              [self._expr(e.target, off), self._expr(e.value, off)])
        if isinstance(e, ast.FormattedValue):
            return SyntaxNode("interpolation", start, end)
        # Unknown expression kind: generic named node with correct span.
        return SyntaxNode(type(e).__name__.lower(), start, end)

    def _lambda_parameters(self, args: ast.arguments, off: int) -> SyntaxNode | None:
        nodes = self._param_nodes(args, off, 0)
        if not nodes:
            return None
        return SyntaxNode("lambda_parameters", nodes[0].start_byte, nodes[-1].end_byte, nodes)

    def _comp_clauses(self, generators, off: int, lo: int) -> list[SyntaxNode]:
        out = []
        for gen in generators:
            target = self._expr(gen.target, off)
            iter_node = self._expr(gen.iter, off)
            tok = self._find_before("for", target.start_byte, lo)
            cstart = tok.start_byte if tok else target.start_byte
            if gen.is_async:
                atok = self._find_before("async", cstart, lo)
                if atok:
                    cstart = atok.start_byte
            out.append(SyntaxNode("for_in_clause", cstart, iter_node.end_byte,
                                  [target, iter_node]))
            for cond in gen.ifs:
                cnode = self._expr(cond, off)
                itok = self._find_before("if", cnode.start_byte, iter_node.end_byte)
                out.append(SyntaxNode("if_clause",
                                      itok.start_byte if itok else cnode.start_byte,
                                      cnode.end_byte, [cnode]))
        return out

    def _keyword_arg(self, kw: ast.keyword, off: int) -> SyntaxNode:
        value = self._expr(kw.value, off)
        if kw.arg is None:
            tok = self._find_before("**", value.start_byte, max(0, value.start_byte - 64))
            return SyntaxNode("dictionary_splat",
                              tok.start_byte if tok else value.start_byte,
                              value.end_byte, [value])
        start, end = self._span(kw, off)
        name_end = start + len(kw.arg.encode("utf-8"))
        return SyntaxNode("keyword_argument", start, end, [
            SyntaxNode("identifier", start, name_end), value,
        ])

    def _call(self, e: ast.Call, off: int, start: int, end: int) -> SyntaxNode:
        func = self._expr(e.func, off)
        args = [self._expr(a, off) for a in e.args if not isinstance(a, ast.Starred)]
        args += [self._expr(a, off) for a in e.args if isinstance(a, ast.Starred)]
        args += [self._keyword_arg(k, off) for k in e.keywords]
        args.sort(key=lambda n: n.start_byte)
        lparen = self._find_after("(", func.end_byte, end)
        if lparen is not None:
            rparen = self._match_paren(lparen)
            arg_end = rparen.end_byte if rparen else end
            arg_list = SyntaxNode("argument_list", lparen.start_byte, arg_end, args)
        else:
            arg_list = SyntaxNode("argument_list", func.end_byte, end, args)
        return SyntaxNode("call", start, end, [func, arg_list])

    # -- token attachment --------------------------------------------------------

    def _attach_tokens(self, root: SyntaxNode) -> None:
        for tok in self.tokens:
            node = root
            descended = True
            while descended:
                descended = False
                for child in node.children:
                    if child.start_byte <= tok.start_byte and tok.end_byte <= child.end_byte:
                        node = child
                        descended = True
                        break
            if (
                node.is_named
                and not node.children
                and node.start_byte == tok.start_byte
                and node.end_byte == tok.end_byte
            ):
                continue  # the named leaf absorbs its own token
            node_type, is_named = _classify(tok)
            if (
                not keyword.iskeyword(tok.text)
                and tok.kind == tokenize.NAME
                and tok.text in ("match", "case")
                and node.node_type in ("match_statement", "case_clause")
                and tok.start_byte == node.start_byte
            ):
                node_type, is_named = tok.text, False  # soft keyword position
            node.children.append(
                SyntaxNode(node_type, tok.start_byte, tok.end_byte, is_named=is_named)
            )


def _constant_type(value) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    if value is None:
        return "none"
    if value is Ellipsis:
        return "ellipsis"
    if isinstance(value, (str, bytes)):
        return "string"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "float"
    if isinstance(value, complex):
        return "float"
    return "string"


def _finalize(node: SyntaxNode) -> None:
    """Sort children by span and normalize concatenated string literals."""
    node.children.sort(key=lambda n: (n.start_byte, -n.end_byte))
    for child in node.children:
        _finalize(child)
    if node.node_type == "string":
        strings = [c for c in node.children if c.node_type == "string"]
        if len(strings) >= 2:
            node.node_type = "concatenated_string"
