"""
Restricted arithmetic expressions for custom activations, densities and
test functions given as text in experiment configs.

parse_expr evaluates its input as Python, so the token stream is checked
before sympy sees it: numbers, the declared variables, pi, E, the functions
in ALLOWED_FUNCTIONS and the operators in ALLOWED_OPERATORS only. Attribute
access, subscripts, strings and keywords never reach the parser. The parsed
tree is checked once more and compiled to a numpy callable with lambdify.
"""

import io
import logging
import tokenize
import typing

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from ..errors import ConfigError

logger = logging.getLogger("expressions")

ALLOWED_FUNCTIONS: dict[str, typing.Any] = {
    "exp": sympy.exp,
    "tanh": sympy.tanh,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "sqrt": sympy.sqrt,
    "log": sympy.log,
    "abs": sympy.Abs,
    "Abs": sympy.Abs,
}

CONSTANTS: dict[str, typing.Any] = {"pi": sympy.pi, "E": sympy.E, "e": sympy.E}

ALLOWED_OPERATORS = frozenset(["+", "-", "*", "/", "**", "^", "(", ")", ","])

_LAYOUT_TOKENS = frozenset(
    [tokenize.NEWLINE, tokenize.NL, tokenize.INDENT, tokenize.DEDENT, tokenize.ENDMARKER]
)

_ALLOWED_HEADS = (
    sympy.Add,
    sympy.Mul,
    sympy.Pow,
    sympy.exp,
    sympy.tanh,
    sympy.sin,
    sympy.cos,
    sympy.log,
    sympy.Abs,
)


def _check_tokens(text: str, variables: typing.Sequence[str]) -> None:
    try:
        tokens = list(tokenize.generate_tokens(io.StringIO(text).readline))
    except (tokenize.TokenError, SyntaxError) as exc:
        raise ConfigError("cannot parse expression %r: %s" % (text, exc))

    names = set(variables) | set(CONSTANTS) | set(ALLOWED_FUNCTIONS)
    unknown = []
    for token in tokens:
        if token.type in _LAYOUT_TOKENS or token.type == tokenize.NUMBER:
            continue
        if token.type == tokenize.NAME:
            if token.string not in names:
                unknown.append(token.string)
            continue
        if token.type == tokenize.OP and token.string in ALLOWED_OPERATORS:
            continue
        raise ConfigError(
            "unsupported token %r at column %i in expression %r" % (token.string, token.start[1], text)
        )
    if unknown:
        raise ConfigError(
            "unknown names %s in expression %r (allowed variables: %s)"
            % (sorted(set(unknown)), text, ", ".join(variables))
        )


def _check_tree(expr: sympy.Basic, text: str) -> None:
    for node in sympy.preorder_traversal(expr):
        if node.is_Symbol or node.is_Number or node in (sympy.pi, sympy.E):
            continue
        if isinstance(node, _ALLOWED_HEADS):
            continue
        raise ConfigError("unsupported construct %r in expression %r" % (str(node), text))


def compile_expression(
    text: str, variables: typing.Sequence[str]
) -> tuple[typing.Callable[..., np.ndarray], sympy.Expr]:
    """
    returns (callable, sympy expression)

    the callable takes one array per variable, in the order given, and
    returns an array of their broadcast shape (constants are broadcast too)
    """
    if not isinstance(text, str) or not text.strip():
        raise ConfigError("empty expression")
    _check_tokens(text, variables)

    symbols = {name: sympy.Symbol(name, real=True) for name in variables}
    namespace: dict[str, typing.Any] = dict(CONSTANTS)
    namespace.update(ALLOWED_FUNCTIONS)
    namespace.update(symbols)

    try:
        expr = parse_expr(
            text,
            local_dict=namespace,
            global_dict={"Integer": sympy.Integer, "Float": sympy.Float,
                         "Rational": sympy.Rational, "Symbol": sympy.Symbol},
            transformations=standard_transformations + (convert_xor,),
            evaluate=True,
        )
    except Exception as exc:
        raise ConfigError("cannot parse expression %r: %s" % (text, exc))

    if not isinstance(expr, sympy.Expr):
        raise ConfigError("expression %r is not arithmetic" % (text,))

    unknown = {str(s) for s in expr.free_symbols} - set(variables)
    if unknown:
        raise ConfigError(
            "unknown names %s in expression %r (allowed variables: %s)"
            % (sorted(unknown), text, ", ".join(variables))
        )
    _check_tree(expr, text)

    ordered = [symbols[name] for name in variables]
    compiled = sympy.lambdify(ordered, expr, modules="numpy")
    logger.debug("compiled expression %r as %s" % (text, expr))

    def evaluate(*arrays):
        arrays = [np.asarray(a, dtype=float) for a in arrays]
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        return np.broadcast_to(np.asarray(compiled(*arrays), dtype=float), shape)

    return evaluate, expr
