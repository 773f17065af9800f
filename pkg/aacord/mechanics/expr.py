# file: aacord/mechanics/expr.py
"""Scalar expression DSL for integrals of motion, Casimirs and Hamiltonians.

Grammar (whitespace insignificant, ``^`` binds tightest, then unary minus,
then ``* /``, then ``+ -``; equal precedence associates to the left)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' ['-'] primary)*      exponent must fold to a constant
    primary := number | identifier | identifier '(' expr (',' expr)* ')' | '(' expr ')'

Functions: sin cos tan exp log sqrt atan2.
"""
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from aacord.utils.errors import (
    ExprDomainError,
    ExprSyntaxError,
    UnboundVariableError,
    UnknownFunctionError,
)

FUNCTIONS: Dict[str, int] = {
    "sin": 1,
    "cos": 1,
    "tan": 1,
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "atan2": 2,
}

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_UNARY_PRECEDENCE = 3


# ---------------------------------------------------------------------------
# Domain-checked primitives shared by the interpreter and compiled evaluators
# ---------------------------------------------------------------------------

def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise ExprDomainError("division by zero")
    return a / b


def _pow(a: float, b: float) -> float:
    if float(b).is_integer():
        if a == 0.0 and b < 0:
            raise ExprDomainError("0 raised to a negative power")
        try:
            return a ** int(b)
        except OverflowError as exc:
            raise ExprDomainError("overflow in power") from exc
    if a <= 0.0:
        raise ExprDomainError(f"non-integer power {b!r} of nonpositive base {a!r}")
    try:
        return a ** b
    except OverflowError as exc:
        raise ExprDomainError("overflow in power") from exc


def _log(a: float) -> float:
    if a <= 0.0:
        raise ExprDomainError(f"log of nonpositive value {a!r}")
    return math.log(a)


def _sqrt(a: float) -> float:
    if a < 0.0:
        raise ExprDomainError(f"sqrt of negative value {a!r}")
    return math.sqrt(a)


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError as exc:
        raise ExprDomainError(f"exp overflow at {a!r}") from exc


def _tan(a: float) -> float:
    return math.tan(a)


def _atan2(y: float, x: float) -> float:
    if x == 0.0 and y == 0.0:
        raise ExprDomainError("atan2(0, 0) is undefined")
    return math.atan2(y, x)


def _finite(value: float) -> float:
    if not math.isfinite(value):
        raise ExprDomainError(f"non-finite result {value!r}")
    return value


_CALLS: Dict[str, Callable[..., float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": _tan,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
    "atan2": _atan2,
}

_NAMESPACE = {
    "__builtins__": {},
    "_div": _div,
    "_pow": _pow,
    "_finite": _finite,
    **{f"_{name}": fn for name, fn in _CALLS.items()},
}


# ---------------------------------------------------------------------------
# Tree
# ---------------------------------------------------------------------------

class Expr:
    """Immutable expression node."""

    __slots__ = ()

    def evaluate(self, bindings: Mapping[str, float]) -> float:
        return _finite(self._eval(bindings))

    def _eval(self, bindings: Mapping[str, float]) -> float:
        raise NotImplementedError

    def derivative(self, var: str) -> "Expr":
        raise NotImplementedError

    def free_variables(self) -> Set[str]:
        out: Set[str] = set()
        self._collect(out)
        return out

    def _collect(self, out: Set[str]) -> None:
        pass

    def substitute(self, mapping: Mapping[str, "Expr"]) -> "Expr":
        raise NotImplementedError

    def pretty(self) -> str:
        return self._pretty(0)

    def _pretty(self, parent: int) -> str:
        raise NotImplementedError

    def _py(self, index: Mapping[str, int]) -> str:
        raise NotImplementedError

    def to_sympy(self):
        raise NotImplementedError

    def compile(self, variables: Sequence[str]) -> Callable[[Sequence[float]], float]:
        """Return ``f(z)`` evaluating this expression with ``z[i]`` bound to ``variables[i]``."""
        return compile_exprs([self], variables, scalar=True)

    def __str__(self) -> str:
        return self.pretty()

    def __repr__(self) -> str:
        return f"Expr({self.pretty()!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Const(Expr):
    value: float

    def _eval(self, bindings):
        return self.value

    def derivative(self, var):
        return ZERO

    def substitute(self, mapping):
        return self

    def _pretty(self, parent):
        text = _format_number(self.value)
        if self.value < 0 and parent > 0:
            return f"({text})"
        return text

    def _py(self, index):
        return f"({self.value!r})"

    def to_sympy(self):
        import sympy as sp
        if float(self.value).is_integer():
            return sp.Integer(int(self.value))
        return sp.Float(self.value)


@dataclass(frozen=True, eq=True, repr=False)
class Var(Expr):
    name: str

    def _eval(self, bindings):
        try:
            return float(bindings[self.name])
        except KeyError:
            raise UnboundVariableError(f"unbound variable '{self.name}'") from None

    def derivative(self, var):
        return ONE if self.name == var else ZERO

    def _collect(self, out):
        out.add(self.name)

    def substitute(self, mapping):
        return mapping.get(self.name, self)

    def _pretty(self, parent):
        return self.name

    def _py(self, index):
        try:
            return f"z[{index[self.name]}]"
        except KeyError:
            raise UnboundVariableError(f"unbound variable '{self.name}'") from None

    def to_sympy(self):
        import sympy as sp
        return sp.Symbol(self.name, real=True)


@dataclass(frozen=True, eq=True, repr=False)
class Neg(Expr):
    operand: Expr

    def _eval(self, bindings):
        return -self.operand._eval(bindings)

    def derivative(self, var):
        return neg(self.operand.derivative(var))

    def _collect(self, out):
        self.operand._collect(out)

    def substitute(self, mapping):
        return neg(self.operand.substitute(mapping))

    def _pretty(self, parent):
        text = "-" + self.operand._pretty(_UNARY_PRECEDENCE)
        return f"({text})" if parent > _UNARY_PRECEDENCE else text

    def _py(self, index):
        return f"(-{self.operand._py(index)})"

    def to_sympy(self):
        return -self.operand.to_sympy()


@dataclass(frozen=True, eq=True, repr=False)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def _eval(self, bindings):
        a = self.left._eval(bindings)
        b = self.right._eval(bindings)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return _div(a, b)
        return _pow(a, b)

    def derivative(self, var):
        u, v = self.left, self.right
        du = u.derivative(var)
        if self.op == "^":
            # exponent is a constant by construction
            c = v.value if isinstance(v, Const) else None
            if c is None:
                raise ExprSyntaxError("exponent must be constant", 0)
            return mul(mul(Const(c), power(u, Const(c - 1.0))), du)
        dv = v.derivative(var)
        if self.op == "+":
            return add(du, dv)
        if self.op == "-":
            return sub(du, dv)
        if self.op == "*":
            return add(mul(du, v), mul(u, dv))
        return div(sub(mul(du, v), mul(u, dv)), power(v, Const(2.0)))

    def _collect(self, out):
        self.left._collect(out)
        self.right._collect(out)

    def substitute(self, mapping):
        left = self.left.substitute(mapping)
        right = self.right.substitute(mapping)
        return _BUILDERS[self.op](left, right)

    def _pretty(self, parent):
        prec = _PRECEDENCE[self.op]
        if self.op == "^":
            base = self.left._pretty(prec)
            exponent = self.right
            if isinstance(exponent, Const) and exponent.value < 0:
                text = f"{base}^{_format_number(exponent.value)}"
            else:
                text = f"{base}^{exponent._pretty(prec + 1)}"
        else:
            # left-associative: the right operand needs parentheses at equal precedence
            text = f"{self.left._pretty(prec)} {self.op} {self.right._pretty(prec + 1)}"
        return f"({text})" if parent > prec else text

    def _py(self, index):
        a = self.left._py(index)
        b = self.right._py(index)
        if self.op == "/":
            return f"_div({a}, {b})"
        if self.op == "^":
            return f"_pow({a}, {b})"
        return f"({a} {self.op} {b})"

    def to_sympy(self):
        a = self.left.to_sympy()
        b = self.right.to_sympy()
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return a ** b


@dataclass(frozen=True, eq=True, repr=False)
class Call(Expr):
    name: str
    args: Tuple[Expr, ...]

    def _eval(self, bindings):
        return _CALLS[self.name](*(arg._eval(bindings) for arg in self.args))

    def derivative(self, var):
        if self.name == "atan2":
            y, x = self.args
            dy, dx = y.derivative(var), x.derivative(var)
            numerator = sub(mul(x, dy), mul(y, dx))
            return div(numerator, add(power(x, Const(2.0)), power(y, Const(2.0))))
        (u,) = self.args
        du = u.derivative(var)
        if isinstance(du, Const) and du.value == 0.0:
            return ZERO
        if self.name == "sin":
            outer = call("cos", u)
        elif self.name == "cos":
            outer = neg(call("sin", u))
        elif self.name == "tan":
            outer = add(ONE, power(call("tan", u), Const(2.0)))
        elif self.name == "exp":
            outer = self
        elif self.name == "log":
            return div(du, u)
        else:
            return div(du, mul(Const(2.0), self))
        return mul(outer, du)

    def _collect(self, out):
        for arg in self.args:
            arg._collect(out)

    def substitute(self, mapping):
        return Call(self.name, tuple(arg.substitute(mapping) for arg in self.args))

    def _pretty(self, parent):
        return f"{self.name}({', '.join(arg._pretty(0) for arg in self.args)})"

    def _py(self, index):
        return f"_{self.name}({', '.join(arg._py(index) for arg in self.args)})"

    def to_sympy(self):
        import sympy as sp
        args = [arg.to_sympy() for arg in self.args]
        if self.name == "atan2":
            return sp.atan2(*args)
        return getattr(sp, self.name)(*args)


ZERO = Const(0.0)
ONE = Const(1.0)


def _format_number(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


# ---------------------------------------------------------------------------
# Smart constructors: constant folding and 0/1 identities only
# ---------------------------------------------------------------------------

def _is(e: Expr, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


def neg(u: Expr) -> Expr:
    if isinstance(u, Const):
        return Const(-u.value)
    if isinstance(u, Neg):
        return u.operand
    return Neg(u)


def add(u: Expr, v: Expr) -> Expr:
    if isinstance(u, Const) and isinstance(v, Const):
        return Const(u.value + v.value)
    if _is(u, 0.0):
        return v
    if _is(v, 0.0):
        return u
    return BinOp("+", u, v)


def sub(u: Expr, v: Expr) -> Expr:
    if isinstance(u, Const) and isinstance(v, Const):
        return Const(u.value - v.value)
    if _is(v, 0.0):
        return u
    if _is(u, 0.0):
        return neg(v)
    return BinOp("-", u, v)


def mul(u: Expr, v: Expr) -> Expr:
    if isinstance(u, Const) and isinstance(v, Const):
        return Const(u.value * v.value)
    if _is(u, 0.0) or _is(v, 0.0):
        return ZERO
    if _is(u, 1.0):
        return v
    if _is(v, 1.0):
        return u
    if _is(u, -1.0):
        return neg(v)
    if _is(v, -1.0):
        return neg(u)
    return BinOp("*", u, v)


def div(u: Expr, v: Expr) -> Expr:
    if isinstance(u, Const) and isinstance(v, Const) and v.value != 0.0:
        return Const(u.value / v.value)
    if _is(u, 0.0):
        return ZERO
    if _is(v, 1.0):
        return u
    return BinOp("/", u, v)


def power(u: Expr, v: Expr) -> Expr:
    if _is(v, 1.0):
        return u
    if _is(v, 0.0):
        return ONE
    if isinstance(u, Const):
        return Const(_pow(u.value, v.value))
    return BinOp("^", u, v)


def call(name: str, *args: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise UnknownFunctionError(f"unknown function '{name}'")
    return Call(name, tuple(args))


_BUILDERS = {"+": add, "-": sub, "*": mul, "/": div, "^": power}


# ---------------------------------------------------------------------------
# Tokenizer and parser
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, IDENT, OP, LPAREN, RPAREN, COMMA, END
    text: str
    offset: int  # 1-based


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        start = i
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            while i < n and (text[i].isdigit() or text[i] == "."):
                i += 1
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and text[j].isdigit():
                    i = j
                    while i < n and text[i].isdigit():
                        i += 1
            literal = text[start:i]
            try:
                float(literal)
            except ValueError:
                raise ExprSyntaxError(f"malformed number '{literal}'", start + 1) from None
            tokens.append(Token("NUMBER", literal, start + 1))
            continue
        if ch.isalpha() or ch == "_":
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            tokens.append(Token("IDENT", text[start:i], start + 1))
            continue
        if ch in "+-/^":
            tokens.append(Token("OP", ch, start + 1))
        elif ch == "*":
            if i + 1 < n and text[i + 1] == "*":
                raise ExprSyntaxError("unknown operator '**' (use '^')", start + 1)
            tokens.append(Token("OP", ch, start + 1))
        elif ch == "(":
            tokens.append(Token("LPAREN", ch, start + 1))
        elif ch == ")":
            tokens.append(Token("RPAREN", ch, start + 1))
        elif ch == ",":
            tokens.append(Token("COMMA", ch, start + 1))
        else:
            raise ExprSyntaxError(f"unknown operator '{ch}'", start + 1)
        i += 1
    tokens.append(Token("END", "", n + 1))
    return tokens


class ExprParser:
    """Recursive-descent parser producing :class:`Expr` trees."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        token = self.peek()
        if token.kind != kind or (text is not None and token.text != text):
            wanted = text or kind.lower()
            got = token.text or "end of input"
            raise ExprSyntaxError(f"expected {wanted!r}, found {got!r}", token.offset)
        return self.advance()

    def parse(self) -> Expr:
        if not self.text.strip():
            raise ExprSyntaxError("empty expression", 1)
        tree = self.parse_expression()
        token = self.peek()
        if token.kind != "END":
            raise ExprSyntaxError(f"unexpected {token.text!r}", token.offset)
        return tree

    def parse_expression(self) -> Expr:
        left = self.parse_term()
        while self.peek().kind == "OP" and self.peek().text in "+-":
            op = self.advance().text
            left = BinOp(op, left, self.parse_term())
        return left

    def parse_term(self) -> Expr:
        left = self.parse_unary()
        while self.peek().kind == "OP" and self.peek().text in "*/":
            op = self.advance().text
            left = BinOp(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> Expr:
        if self.peek().kind == "OP" and self.peek().text == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_primary()
        while self.peek().kind == "OP" and self.peek().text == "^":
            self.advance()
            start = self.peek()
            negative = False
            if start.kind == "OP" and start.text == "-":
                self.advance()
                negative = True
            exponent = _fold(self.parse_primary())
            if not isinstance(exponent, Const):
                raise ExprSyntaxError("exponent must be a constant", start.offset)
            if negative:
                exponent = Const(-exponent.value)
            base = BinOp("^", base, exponent)
        return base

    def parse_primary(self) -> Expr:
        token = self.peek()
        if token.kind == "NUMBER":
            self.advance()
            return Const(float(token.text))
        if token.kind == "IDENT":
            self.advance()
            if self.peek().kind == "LPAREN":
                return self.parse_call(token)
            return Var(token.text)
        if token.kind == "LPAREN":
            self.advance()
            inner = self.parse_expression()
            self.expect("RPAREN")
            return inner
        got = token.text or "end of input"
        raise ExprSyntaxError(f"unexpected {got!r}", token.offset)

    def parse_call(self, name: Token) -> Expr:
        if name.text not in FUNCTIONS:
            raise UnknownFunctionError(
                f"unknown function '{name.text}' at offset {name.offset}"
            )
        self.expect("LPAREN")
        args = [self.parse_expression()]
        while self.peek().kind == "COMMA":
            self.advance()
            args.append(self.parse_expression())
        self.expect("RPAREN")
        if len(args) != FUNCTIONS[name.text]:
            raise ExprSyntaxError(
                f"{name.text} takes {FUNCTIONS[name.text]} argument(s), got {len(args)}",
                name.offset,
            )
        return Call(name.text, tuple(args))


def _fold(e: Expr) -> Expr:
    """Fold a constant subtree; used for exponents only."""
    if e.free_variables():
        return e
    return Const(e._eval({}))


# ---------------------------------------------------------------------------
# Module operations
# ---------------------------------------------------------------------------

def parse(text: str) -> Expr:
    return ExprParser(text).parse()


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    return e.evaluate(bindings)


def differentiate(e: Expr, var: str) -> Expr:
    return e.derivative(var)


def make_bindings(pairs: Iterable[Tuple[str, float]]) -> Dict[str, float]:
    """Build bindings from ordered pairs, rejecting duplicate identifiers."""
    out: Dict[str, float] = {}
    for name, value in pairs:
        if name in out:
            raise ValueError(f"duplicate binding for '{name}'")
        out[name] = float(value)
    return out


def compile_exprs(
    exprs: Sequence[Expr], variables: Sequence[str], scalar: bool = False
) -> Callable[[Sequence[float]], object]:
    """Compile expressions into one reentrant evaluator over ``variables``.

    Returns ``f(z) -> np.ndarray`` (or a float when ``scalar``). Domain
    violations raise :class:`ExprDomainError` exactly as :func:`evaluate`.
    """
    index = {name: i for i, name in enumerate(variables)}
    bodies = [f"_finite({e._py(index)})" for e in exprs]
    if scalar:
        source = f"lambda z: {bodies[0]}"
        return eval(source, dict(_NAMESPACE))
    source = f"lambda z: ({', '.join(bodies)}{',' if len(bodies) == 1 else ''})"
    raw = eval(source, dict(_NAMESPACE))
    size = len(exprs)

    def evaluator(z: Sequence[float]) -> np.ndarray:
        if size == 0:
            return np.zeros(0)
        return np.fromiter(raw(z), dtype=float, count=size)

    return evaluator
# end file
