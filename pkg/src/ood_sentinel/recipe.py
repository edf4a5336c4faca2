"""Composition-recipe DSL: parser, canonical renderer, dimension arithmetic.

Grammar (EBNF)::

    recipe      := add | append | term
    append      := "(" add_or_term ("," add_or_term)+ ")"
    add         := term ("+" term)+
    add_or_term := add | term
    term        := [integer] name
    name        := "pi" | "pibar" | "v"
    integer     := [1-9][0-9]*

Case-insensitive, whitespace ignored. A term's integer factor means
k-fold repetition (concatenation of k copies) of the base vector, append
concatenates its children, and add sums them elementwise after cyclic
tiling to the longest child. Nesting beyond an append of adds-or-terms
is rejected rather than given invented semantics.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import ConfigError, RecipeParseError


class TermKind(enum.Enum):
    V = "v"
    PI = "pi"
    PIBAR = "pibar"


@dataclass(frozen=True)
class Term:
    kind: TermKind
    factor: int = 1

    def __post_init__(self):
        if self.factor < 1:
            raise RecipeParseError("term factor must be >= 1", 0)


@dataclass(frozen=True)
class Add:
    children: tuple[Term, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise RecipeParseError("add needs at least 2 children", 0)
        if not all(isinstance(c, Term) for c in self.children):
            raise RecipeParseError("add children must be plain terms", 0)


@dataclass(frozen=True)
class Append:
    children: tuple[Union[Add, Term], ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise RecipeParseError("append needs at least 2 children", 0)
        if not all(isinstance(c, (Add, Term)) for c in self.children):
            raise RecipeParseError("append children must be adds or terms", 0)


Recipe = Union[Term, Add, Append]

_NAMES = {"v": TermKind.V, "pi": TermKind.PI, "pibar": TermKind.PIBAR}


class _Scanner:
    """Cursor over the raw text; positions index the original string."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self) -> str:
        ch = self.peek()
        self.pos += 1
        return ch

    def fail(self, message: str) -> RecipeParseError:
        return RecipeParseError(f"{message} (at position {self.pos})", self.pos)


def parse_recipe(text: str) -> Recipe:
    s = _Scanner(text)
    if s.peek() == "":
        raise s.fail("empty recipe")
    node = _parse_append(s) if s.peek() == "(" else _parse_add_or_term(s)
    if s.peek() != "":
        raise s.fail(f"unexpected {s.peek()!r} after recipe")
    return node


def _parse_append(s: _Scanner) -> Append:
    s.take()  # "("
    children = [_parse_add_or_term(s)]
    while s.peek() == ",":
        s.take()
        children.append(_parse_add_or_term(s))
    if len(children) < 2:
        raise s.fail("append needs at least 2 comma-separated parts")
    if s.peek() != ")":
        raise s.fail("expected ',' or ')'")
    s.take()
    return Append(tuple(children))


def _parse_add_or_term(s: _Scanner) -> Union[Add, Term]:
    first = _parse_term(s)
    if s.peek() != "+":
        return first
    children = [first]
    while s.peek() == "+":
        s.take()
        children.append(_parse_term(s))
    return Add(tuple(children))


def _parse_term(s: _Scanner) -> Term:
    ch = s.peek()
    factor = 1
    if ch.isdigit():
        if ch == "0":
            raise s.fail("factor must be a positive integer without leading zero")
        digits = ""
        while s.peek().isdigit():
            digits += s.take()
        factor = int(digits)
    name_start = s.pos
    name = ""
    while s.peek().isalpha():
        name += s.take().lower()
    if name not in _NAMES:
        s.pos = name_start
        shown = name if name else s.peek()
        raise s.fail(f"unknown term {shown!r}, expected one of pi, pibar, v")
    return Term(_NAMES[name], factor)


def render_recipe(recipe: Recipe) -> str:
    """Canonical text; parse_recipe(render_recipe(r)) == r."""
    if isinstance(recipe, Term):
        prefix = str(recipe.factor) if recipe.factor > 1 else ""
        return f"{prefix}{recipe.kind.value}"
    if isinstance(recipe, Add):
        return "+".join(render_recipe(c) for c in recipe.children)
    if isinstance(recipe, Append):
        return "(" + ",".join(render_recipe(c) for c in recipe.children) + ")"
    raise TypeError(f"not a recipe node: {recipe!r}")


def terms(recipe: Recipe) -> Iterator[Term]:
    """All terms of the recipe, left to right."""
    if isinstance(recipe, Term):
        yield recipe
    elif isinstance(recipe, Add):
        yield from recipe.children
    elif isinstance(recipe, Append):
        for child in recipe.children:
            yield from terms(child)
    else:
        raise TypeError(f"not a recipe node: {recipe!r}")


def uses(recipe: Recipe, kind: TermKind) -> bool:
    return any(t.kind is kind for t in terms(recipe))


def recipe_dimension(recipe: Recipe, dim_v: int, n_pi: int, n_pibar: int) -> int:
    """Length of the composed vector; pass 0 for dims that are unavailable."""
    bases = {TermKind.V: dim_v, TermKind.PI: n_pi, TermKind.PIBAR: n_pibar}

    def term_len(t: Term) -> int:
        base = bases[t.kind]
        if base <= 0:
            raise ConfigError(
                f"recipe uses {t.kind.value!r} but its base dimension is unknown"
            )
        return t.factor * base

    def node_len(node: Recipe) -> int:
        if isinstance(node, Term):
            return term_len(node)
        if isinstance(node, Add):
            return max(term_len(c) for c in node.children)
        return sum(node_len(c) for c in node.children)

    return node_len(recipe)
