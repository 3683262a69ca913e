"""
Closed expression grammar for forcing and initial conditions:
    x, y, pi, e, numbers, + - * / **, unary minus, sin cos exp
parsed with `ast` against a whitelist and evaluated with numpy.
"""
import ast

import numpy as np

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
CONSTANTS = {"pi": np.pi, "e": np.e}
VARIABLES = ("x", "y")

_BINARY = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


class Expression:
    __slots__ = ("source", "_tree")

    def __init__(self, source: str | float | int):
        self.source = str(source).strip()
        if not self.source:
            raise ExpressionError("empty expression")
        try:
            tree = ast.parse(self.source, mode="eval")
        except SyntaxError as e:
            raise ExpressionError(f"cannot parse {self.source!r}: {e.msg}") from e
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node: ast.AST):
        if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError(f"{self.source!r}: only {sorted(FUNCTIONS)} may be called")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{self.source!r}: {node.func.id} takes exactly one argument")
            self._check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id not in VARIABLES and node.id not in CONSTANTS:
                raise ExpressionError(f"{self.source!r}: unknown name {node.id!r}")
        elif isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError(f"{self.source!r}: only numeric literals are allowed")
        else:
            raise ExpressionError(f"{self.source!r}: unsupported syntax {type(node).__name__}")

    def _eval(self, node: ast.AST, x: np.ndarray, y: np.ndarray):
        if isinstance(node, ast.BinOp):
            return _BINARY[type(node.op)](self._eval(node.left, x, y), self._eval(node.right, x, y))
        if isinstance(node, ast.UnaryOp):
            operand = self._eval(node.operand, x, y)
            return -operand if isinstance(node.op, ast.USub) else operand
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](self._eval(node.args[0], x, y))
        if isinstance(node, ast.Name):
            if node.id == "x":
                return x
            if node.id == "y":
                return y
            return CONSTANTS[node.id]
        return float(node.value)

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        with np.errstate(all="raise"):
            try:
                value = self._eval(self._tree, x, y)
            except FloatingPointError as e:
                raise ExpressionError(f"{self.source!r}: {e}") from e
        return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()

    def __repr__(self):
        return f"Expression({self.source!r})"


def evaluate(source: str | float, x, y) -> np.ndarray:
    return Expression(source)(x, y)
