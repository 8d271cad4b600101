"""Arithmetic mini-language for scalar fields on a chart.

Grammar (usual precedence, ``^`` right-associative and binding tighter than
unary minus)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('+' | '-') unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

Names are the chart variables ``x`` and ``y`` plus the constants ``pi`` and ``E``;
functions are ``sin cos tan exp log sqrt abs``. Parsed expressions become sympy
objects so fields can be differentiated exactly.
"""

from __future__ import annotations

import re

import sympy as sp

from .errors import ConfigError

X, Y = sp.symbols("x y", real=True)

FUNCTIONS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "abs": sp.Abs,
}
NAMES = {"x": X, "y": Y, "pi": sp.pi, "E": sp.E}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ConfigError(f"unexpected character {text[pos]!r} at {pos} in {text!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            want = value or "a token"
            raise ConfigError(f"expected {want} in {self.text!r}, got {tok[1]!r}")
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.i != len(self.tokens):
            raise ConfigError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = node * rhs if op == "*" else node / rhs
        return node

    def unary(self):
        if self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = self.unary()
            return -node if op == "-" else node
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return base ** self.unary()
        return base

    def atom(self):
        kind, tok = self.peek()
        if kind == "num":
            self.take()
            return sp.Float(tok) if any(c in tok for c in ".eE") else sp.Integer(tok)
        if kind == "name":
            self.take()
            if tok in FUNCTIONS:
                self.take("(")
                arg = self.expr()
                self.take(")")
                return FUNCTIONS[tok](arg)
            if tok in NAMES:
                return NAMES[tok]
            raise ConfigError(f"unknown name {tok!r} in {self.text!r}")
        if tok == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        raise ConfigError(f"unexpected {tok!r} in {self.text!r}")


def parse(text: str) -> sp.Expr:
    """Parse ``text`` into a sympy expression in ``x`` and ``y``."""
    if not isinstance(text, str) or not text.strip():
        raise ConfigError("empty expression")
    return sp.sympify(_Parser(text).parse())


def to_text(expr) -> str:
    """Render a sympy expression back into the mini-language."""
    expr = sp.sympify(expr)
    bad = expr.free_symbols - {X, Y}
    if bad:
        raise ConfigError(f"expression has foreign symbols {sorted(map(str, bad))}")
    allowed = {f.__name__ for f in FUNCTIONS.values()}
    for fn in expr.atoms(sp.Function):
        if fn.func.__name__ not in allowed:
            raise ConfigError(f"function {fn.func.__name__} not expressible")
    text = sp.sstr(expr, full_prec=True)
    return text.replace("**", "^").replace("Abs(", "abs(")
