"""Scalar expression parsing and second-order jet evaluation.

Expressions describe embeddings, conformal factors and normal speeds in run
configurations.  ``eval_jet`` propagates value, gradient and Hessian through the
tree in forward mode, vectorised over arrays of evaluation points.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ArityError",
    "ExprDomainError",
    "ExprAst",
    "JetValue",
    "parse_expr",
    "eval_jet",
    "eval_value",
]

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at byte offset {offset}")
        self.name = name
        self.offset = offset


class ArityError(ExprError):
    def __init__(self, name: str, got: int, offset: int):
        super().__init__(f"{name}() takes 1 argument, got {got} (byte offset {offset})")
        self.name = name
        self.offset = offset


class ExprDomainError(ExprError):
    def __init__(self, message: str, node_text: str, offset: int):
        super().__init__(f"{message} in {node_text!r} (byte offset {offset})")
        self.node_text = node_text
        self.offset = offset


# --------------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Node:
    start: int
    end: int


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str
    index: int


@dataclass(frozen=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node


@dataclass(frozen=True)
class ExprAst:
    """Parsed expression over an ordered tuple of declared variables."""

    root: Node
    variables: tuple[str, ...]
    source: str

    def text(self, node: Node) -> str:
        return self.source[node.start:node.end]

    def byte_offset(self, node: Node) -> int:
        return len(self.source[: node.start].encode())

    def uses(self, name: str) -> bool:
        return _uses(self.root, name)

    def __str__(self) -> str:
        return self.source


def _uses(node: Node, name: str) -> bool:
    if isinstance(node, Var):
        return node.name == name
    if isinstance(node, Neg):
        return _uses(node.operand, name)
    if isinstance(node, BinOp):
        return _uses(node.left, name) or _uses(node.right, name)
    if isinstance(node, Call):
        return _uses(node.arg, name)
    return False


def _is_constant(node: Node) -> bool:
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return _is_constant(node.operand)
    if isinstance(node, BinOp):
        return _is_constant(node.left) and _is_constant(node.right)
    if isinstance(node, Call):
        return _is_constant(node.arg)
    return True


# ------------------------------------------------------------------------ parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", len(text[:bad].encode()))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.variables = tuple(variables)
        self.tokens = _tokenize(text)
        self.i = 0

    def _offset(self, pos: int) -> int:
        return len(self.text[:pos].encode())

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", self._offset(pos))

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", self._offset(pos))
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = BinOp(node.start, rhs.end, op, node, rhs)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            node = BinOp(node.start, rhs.end, op, node, rhs)
        return node

    def unary(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "op" and val in ("-", "+"):
            self.take()
            operand = self.unary()
            if val == "+":
                return operand
            return Neg(pos, operand.end, operand)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            # right-associative; exponent may carry a sign
            exponent = self.unary()
            return BinOp(base.start, exponent.end, "^", base, exponent)
        return base

    def atom(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(pos, pos + len(val), float(val))
        if kind == "id":
            end = pos + len(val)
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise UnknownIdentifierError(val, self._offset(pos))
                self.take()
                args = [self.expr()]
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                close = self.peek()[2]
                self.expect(")")
                if len(args) != 1:
                    raise ArityError(val, len(args), self._offset(pos))
                return Call(pos, close + 1, val, args[0])
            if val in FUNCTIONS:
                raise ArityError(val, 0, self._offset(pos))
            if val in self.variables:
                return Var(pos, end, val, self.variables.index(val))
            if val in CONSTANTS:
                return Num(pos, end, CONSTANTS[val])
            raise UnknownIdentifierError(val, self._offset(pos))
        if kind == "op" and val == "(":
            node = self.expr()
            close = self.peek()[2]
            self.expect(")")
            return _respan(node, pos, close + 1)
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", self._offset(pos))


def _respan(node: Node, start: int, end: int) -> Node:
    # keep parenthesised spans so diagnostics quote what the user wrote
    kw = {k: getattr(node, k) for k in node.__dataclass_fields__}
    kw["start"], kw["end"] = start, end
    return type(node)(**kw)


def parse_expr(text: str, variables: Sequence[str]) -> ExprAst:
    """Parse ``text`` into an :class:`ExprAst` over ``variables``.

    Precedence from loosest to tightest: ``+ -``, ``* /``, unary sign, ``^``
    (right-associative).  Unknown identifiers and wrong call arity raise.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    if len(set(variables)) != len(tuple(variables)):
        raise ExprError(f"duplicate variable names in {tuple(variables)}")
    for name in variables:
        if name in FUNCTIONS:
            raise ExprError(f"variable name {name!r} shadows a function")
    root = _Parser(text, variables).parse()
    return ExprAst(root, tuple(variables), text)


# -------------------------------------------------------------------------- jets

ArrayLike = Union[float, np.ndarray]


def _pairs(nvar: int) -> tuple[np.ndarray, np.ndarray]:
    ii, jj = np.triu_indices(nvar)
    return ii, jj


@dataclass
class JetValue:
    """Value, gradient and packed Hessian of an expression.

    ``grad`` has shape ``(nvar, *shape)``.  ``hess`` holds the upper triangle
    (``i <= j``, row major) with shape ``(nvar*(nvar+1)//2, *shape)``, so each
    mixed partial exists exactly once.
    """

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    variables: tuple[str, ...] = field(default=())

    @property
    def nvar(self) -> int:
        return self.grad.shape[0]

    def _index(self, name_or_index) -> int:
        if isinstance(name_or_index, str):
            return self.variables.index(name_or_index)
        return int(name_or_index)

    def d(self, var) -> np.ndarray:
        return self.grad[self._index(var)]

    def d2(self, var1, var2) -> np.ndarray:
        i, j = sorted((self._index(var1), self._index(var2)))
        n = self.nvar
        k = i * n - i * (i - 1) // 2 + (j - i)
        return self.hess[k]

    def hessian_matrix(self) -> np.ndarray:
        """Full symmetric Hessian, shape ``(nvar, nvar, *shape)``."""
        n = self.nvar
        out = np.empty((n, n) + self.value.shape)
        ii, jj = _pairs(n)
        out[ii, jj] = self.hess
        out[jj, ii] = self.hess
        return out


def _const_jet(c: ArrayLike, nvar: int, shape) -> JetValue:
    value = np.broadcast_to(np.asarray(c, dtype=float), shape).copy()
    return JetValue(value, np.zeros((nvar,) + shape), np.zeros((nvar * (nvar + 1) // 2,) + shape))


def _compose(a: JetValue, f0, f1, f2) -> JetValue:
    ii, jj = _pairs(a.nvar)
    grad = f1 * a.grad
    hess = f1 * a.hess + f2 * a.grad[ii] * a.grad[jj]
    return JetValue(f0, grad, hess)


def _add(a: JetValue, b: JetValue, sign: float = 1.0) -> JetValue:
    return JetValue(a.value + sign * b.value, a.grad + sign * b.grad, a.hess + sign * b.hess)


def _mul(a: JetValue, b: JetValue) -> JetValue:
    ii, jj = _pairs(a.nvar)
    value = a.value * b.value
    grad = a.grad * b.value + a.value * b.grad
    hess = (
        a.hess * b.value
        + a.value * b.hess
        + a.grad[ii] * b.grad[jj]
        + a.grad[jj] * b.grad[ii]
    )
    return JetValue(value, grad, hess)


class _Evaluator:
    def __init__(self, ast: ExprAst, point: Mapping[str, ArrayLike]):
        missing = [v for v in ast.variables if v not in point]
        if missing:
            raise ExprError(f"no value given for variable(s) {missing}")
        self.ast = ast
        arrays = [np.asarray(point[v], dtype=float) for v in ast.variables]
        self.shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        self.inputs = [np.broadcast_to(a, self.shape) for a in arrays]
        self.nvar = len(arrays)

    def fail(self, message: str, node: Node):
        raise ExprDomainError(message, self.ast.text(node), self.ast.byte_offset(node))

    def run(self, node: Node) -> JetValue:
        nvar, shape = self.nvar, self.shape
        if isinstance(node, Num):
            return _const_jet(node.value, nvar, shape)
        if isinstance(node, Var):
            jet = _const_jet(self.inputs[node.index], nvar, shape)
            jet.grad[node.index] = 1.0
            return jet
        if isinstance(node, Neg):
            a = self.run(node.operand)
            return JetValue(-a.value, -a.grad, -a.hess)
        if isinstance(node, BinOp):
            return self.binop(node)
        if isinstance(node, Call):
            return self.call(node, self.run(node.arg))
        raise TypeError(node)  # pragma: no cover

    def binop(self, node: BinOp) -> JetValue:
        a = self.run(node.left)
        if node.op == "^":
            return self.power(node, a)
        b = self.run(node.right)
        if node.op == "+":
            return _add(a, b)
        if node.op == "-":
            return _add(a, b, -1.0)
        if node.op == "*":
            return _mul(a, b)
        if node.op == "/":
            if np.any(b.value == 0.0):
                self.fail("division by zero", node)
            inv = 1.0 / b.value
            return _mul(a, _compose(b, inv, -inv * inv, 2.0 * inv ** 3))
        raise TypeError(node.op)  # pragma: no cover

    def power(self, node: BinOp, a: JetValue) -> JetValue:
        b = self.run(node.right)
        x = a.value
        if _is_constant(node.right):
            p = b.value
            integral = np.all(p == np.round(p))
            if not integral and np.any(x < 0):
                self.fail("negative base with non-integer exponent", node)
            if np.any((x == 0) & ((p < 0) | (~np.equal(p, np.round(p)) & (p < 2)))):
                self.fail("power is not twice differentiable at zero base", node)
            with np.errstate(divide="ignore", invalid="ignore"):
                f0 = np.power(x, p)
                f1 = p * np.power(x, p - 1)
                f2 = p * (p - 1) * np.power(x, p - 2)
            # 0**(negative) never reaches here; p in {0, 1} make the lower
            # terms vanish identically
            f1 = np.where(p == 0, 0.0, f1)
            f2 = np.where((p == 0) | (p == 1), 0.0, f2)
            return _compose(a, f0, f1, f2)
        if np.any(x <= 0):
            self.fail("non-positive base with variable exponent", node)
        loga = _compose(a, np.log(x), 1.0 / x, -1.0 / x ** 2)
        prod = _mul(b, loga)
        e = np.exp(prod.value)
        return _compose(prod, e, e, e)

    def call(self, node: Call, a: JetValue) -> JetValue:
        x = a.value
        f = node.func
        if f == "sin":
            s, c = np.sin(x), np.cos(x)
            return _compose(a, s, c, -s)
        if f == "cos":
            s, c = np.sin(x), np.cos(x)
            return _compose(a, c, -s, -c)
        if f == "sinh":
            s, c = np.sinh(x), np.cosh(x)
            return _compose(a, s, c, s)
        if f == "cosh":
            s, c = np.sinh(x), np.cosh(x)
            return _compose(a, c, s, c)
        if f == "tanh":
            t = np.tanh(x)
            sech2 = 1.0 - t * t
            return _compose(a, t, sech2, -2.0 * t * sech2)
        if f == "exp":
            e = np.exp(x)
            return _compose(a, e, e, e)
        if f == "log":
            if np.any(x <= 0):
                self.fail("log of non-positive value", node)
            return _compose(a, np.log(x), 1.0 / x, -1.0 / x ** 2)
        if f == "sqrt":
            if np.any(x < 0):
                self.fail("sqrt of negative value", node)
            if np.any(x == 0):
                self.fail("sqrt is not differentiable at zero", node)
            s = np.sqrt(x)
            return _compose(a, s, 0.5 / s, -0.25 / (s * x))
        if f == "abs":
            if np.any((x == 0) & np.any(a.grad != 0, axis=0)):
                self.fail("abs is not differentiable at zero", node)
            sg = np.sign(x)
            return _compose(a, np.abs(x), sg, np.zeros_like(x))
        raise TypeError(f)  # pragma: no cover


def eval_jet(ast: ExprAst, point: Mapping[str, ArrayLike]) -> JetValue:
    """Evaluate ``ast`` with first and second partials at ``point``.

    ``point`` maps every declared variable to a float or an array; arrays
    broadcast against each other and the jet fields take the broadcast shape.
    """
    ev = _Evaluator(ast, point)
    with np.errstate(over="raise", invalid="raise"):
        try:
            jet = ev.run(ast.root)
        except FloatingPointError as exc:
            raise ExprDomainError(str(exc), ast.source, 0) from exc
    jet.variables = ast.variables
    return jet


def eval_value(ast: ExprAst, point: Mapping[str, ArrayLike]) -> np.ndarray:
    return eval_jet(ast, point).value
