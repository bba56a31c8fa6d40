"""Tiny predicate-expression language used by ``derive_feature``.

Grammar (case-insensitive keywords)::

    expr       := or_expr
    or_expr    := and_expr ( OR and_expr )*
    and_expr   := not_expr ( AND not_expr )*
    not_expr   := NOT not_expr | atom
    atom       := '(' expr ')' | TRUE | FALSE | comparison
    comparison := column op literal
    op         := = | == | != | < | <= | > | >=
    literal    := number | "string" | 'string'

Column names are bare identifiers (letters, digits, ``_``, ``.``, ``-``) or
backtick-quoted. Ordering operators apply to numeric columns only; equality
against a quoted string applies to categorical columns only. Evaluation is
vectorized over a Dataset; any row with a missing value in *any* referenced
column yields a missing result.
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<op><=|>=|==|!=|=|<|>)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<string>"[^"]*"|'[^']*')
  | (?P<backtick>`[^`]+`)
  | (?P<number>-?\d+\.?\d*(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.\-]*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "not", "true", "false"}


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {source[pos]!r} at position {pos}")
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "ident" and text.lower() in _KEYWORDS:
                kind = text.lower()
            tokens.append(_Token(kind, text, pos))
        pos = m.end()
    tokens.append(_Token("eof", "", pos))
    return tokens


# --- AST nodes -------------------------------------------------------------


@dataclass
class _Bool:
    value: bool


@dataclass
class _Not:
    operand: object


@dataclass
class _BinaryBool:
    op: str  # "and" | "or"
    left: object
    right: object


@dataclass
class _Comparison:
    column: str
    op: str
    literal: object  # str for quoted strings, float for numbers


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.advance()
        if tok.kind != kind:
            raise ExpressionError(f"expected {kind} at position {tok.pos}, got {tok.text!r}")
        return tok

    def parse(self):
        node = self.or_expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise ExpressionError(f"unexpected trailing input at position {tok.pos}: {tok.text!r}")
        return node

    def or_expr(self):
        node = self.and_expr()
        while self.peek().kind == "or":
            self.advance()
            node = _BinaryBool("or", node, self.and_expr())
        return node

    def and_expr(self):
        node = self.not_expr()
        while self.peek().kind == "and":
            self.advance()
            node = _BinaryBool("and", node, self.not_expr())
        return node

    def not_expr(self):
        if self.peek().kind == "not":
            self.advance()
            return _Not(self.not_expr())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.kind == "lparen":
            self.advance()
            node = self.or_expr()
            self.expect("rparen")
            return node
        if tok.kind == "true":
            self.advance()
            return _Bool(True)
        if tok.kind == "false":
            self.advance()
            return _Bool(False)
        if tok.kind in ("ident", "backtick"):
            return self.comparison()
        raise ExpressionError(f"expected a predicate at position {tok.pos}, got {tok.text!r}")

    def comparison(self):
        tok = self.advance()
        column = tok.text[1:-1] if tok.kind == "backtick" else tok.text
        op_tok = self.expect("op")
        op = "==" if op_tok.text == "=" else op_tok.text
        lit = self.advance()
        if lit.kind == "string":
            literal = lit.text[1:-1]
        elif lit.kind == "number":
            literal = float(lit.text)
        else:
            raise ExpressionError(
                f"expected a string or number literal at position {lit.pos}, got {lit.text!r}"
            )
        return _Comparison(column, op, literal)


def parse(source):
    """Parse a predicate expression, returning an opaque AST."""
    if not source or not source.strip():
        raise ExpressionError("empty expression")
    return _Parser(_tokenize(source)).parse()


def referenced_columns(node):
    """All column names referenced by a parsed expression."""
    if isinstance(node, _Comparison):
        return {node.column}
    if isinstance(node, _Not):
        return referenced_columns(node.operand)
    if isinstance(node, _BinaryBool):
        return referenced_columns(node.left) | referenced_columns(node.right)
    return set()


def _eval_comparison(node, dataset):
    schema = dataset.schema_of(node.column)
    if schema.kind == "numeric":
        if not isinstance(node.literal, float):
            raise ExpressionError(
                f"column {node.column!r} is numeric; compare it to a number, "
                f"not {node.literal!r}"
            )
        x = dataset.values(node.column)
        with np.errstate(invalid="ignore"):
            if node.op == "==":
                return x == node.literal
            if node.op == "!=":
                return x != node.literal
            if node.op == "<":
                return x < node.literal
            if node.op == "<=":
                return x <= node.literal
            if node.op == ">":
                return x > node.literal
            return x >= node.literal
    # categorical column
    if node.op not in ("==", "!="):
        raise ExpressionError(
            f"ordering comparison {node.op!r} is not defined for categorical "
            f"column {node.column!r}"
        )
    if not isinstance(node.literal, str):
        raise ExpressionError(
            f"column {node.column!r} is categorical; compare it to a quoted "
            f"string, not {node.literal!r}"
        )
    codes = dataset.codes(node.column)
    cats = schema.categories
    code = cats.index(node.literal) if node.literal in cats else -2  # matches nothing
    eq = codes == code
    return eq if node.op == "==" else (codes != code) & (codes >= 0)


def evaluate(node, dataset):
    """Evaluate an expression to (truth: bool array, valid: bool array).

    ``valid`` is False on rows where any referenced column is missing; the
    truth value on those rows is unspecified and must be treated as missing.
    """
    cols = referenced_columns(node)
    for name in cols:
        dataset.schema_of(name)  # raises ExpressionError-adjacent if unknown
    valid = dataset.complete_mask(sorted(cols))

    def rec(n):
        if isinstance(n, _Bool):
            return np.full(dataset.n_rows, n.value, dtype=bool)
        if isinstance(n, _Not):
            return ~rec(n.operand)
        if isinstance(n, _BinaryBool):
            left = rec(n.left)
            right = rec(n.right)
            return (left & right) if n.op == "and" else (left | right)
        return _eval_comparison(n, dataset)

    return rec(node), valid
