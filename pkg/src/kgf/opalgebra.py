"""Free *-algebra over creation/annihilation symbols and its vacuum state.

Words are finite sequences of letters ``adag[i]`` / ``a[i]`` over registered
test functions, expressions are complex linear combinations of words, and
the only non-trivial relation is

    a[g] adag[f]  =  adag[f] a[g] + (f, g) * 1,

with same-kind letters commuting among themselves.  Vacuum expectation
values follow by rewriting every word into normal order (all creation
letters first) and keeping the coefficient of the identity word.

The two-point orientation that falls out of the commutator as written is
``<0| phi[f1] phi[f2] |0> = (f2, f1)``: the later insertion sits in the
conjugated slot.

Inner products enter as a table ``(i, j) -> (f_i, f_j)`` supplied by the
caller, so exact tables can be injected in tests and quadrature stays out
of the algebra.
"""

from __future__ import annotations

import enum
import io
import re
from dataclasses import dataclass

from .errors import (
    ExpressionSyntaxError,
    FunctionLookupError,
    InvalidInputError,
    MissingInnerProductError,
    SizeLimitError,
)
from .kernels import KernelSpec, WavePacket, inner_product

__all__ = [
    "LetterKind",
    "FunctionRegistry",
    "InnerProductTable",
    "OperatorExpression",
    "field_operator",
    "normal_order",
    "vacuum_expectation",
    "wick_vev",
    "excited_state_norm",
    "enumerate_pairings",
    "parse_expression",
    "parse_terms",
    "ParsedTerm",
]


#: Pairing enumeration is refused beyond this many insertions ((n-1)!! growth).
MAX_PAIRING_SIZE = 16


class LetterKind(enum.IntEnum):
    CREATE = 0
    ANNIHILATE = 1


CREATE = LetterKind.CREATE
ANNIHILATE = LetterKind.ANNIHILATE


def canonical_word(letters) -> tuple:
    """Sort same-kind runs by function index; licensed by [a,a]=[adag,adag]=0."""
    letters = tuple(letters)
    out = []
    run = []
    run_kind = None
    for kind, index in letters:
        if kind is not run_kind and run:
            out.extend(sorted(run))
            run = []
        run_kind = kind
        run.append((kind, index))
    out.extend(sorted(run))
    return tuple(out)


def _word_str(word) -> str:
    if not word:
        return "1"
    return " ".join(
        ("adag[%d]" if kind == CREATE else "a[%d]") % index for kind, index in word
    )


class FunctionRegistry:
    """Append-only list of test functions addressed by 1-based index.

    Packets are optional: a purely algebraic computation only needs names.
    Concurrent registration must be serialized by the caller (single
    writer); lookups are safe to share.
    """

    def __init__(self):
        self._names: list[str] = []
        self._packets: list[WavePacket | None] = []
        self._index_by_name: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._names)

    @property
    def names(self) -> tuple:
        return tuple(self._names)

    def register(self, name: str | None = None, packet: WavePacket | None = None) -> int:
        if name is None:
            name = f"f{len(self._names) + 1}"
        if name in self._index_by_name:
            raise InvalidInputError(f"function name {name!r} already registered")
        self._names.append(name)
        self._packets.append(packet)
        index = len(self._names)
        self._index_by_name[name] = index
        return index

    def ensure(self, name: str) -> int:
        """Index for ``name``, registering it on first appearance."""
        got = self._index_by_name.get(name)
        if got is not None:
            return got
        return self.register(name)

    def index_of(self, name: str) -> int:
        try:
            return self._index_by_name[name]
        except KeyError:
            raise FunctionLookupError(f"unknown function name {name!r}") from None

    def name_of(self, index: int) -> str:
        self._check_index(index)
        return self._names[index - 1]

    def packet(self, index: int) -> WavePacket:
        self._check_index(index)
        pkt = self._packets[index - 1]
        if pkt is None:
            raise FunctionLookupError(
                f"function {self._names[index - 1]!r} has no wave packet attached"
            )
        return pkt

    def _check_index(self, index: int):
        if not 1 <= index <= len(self._names):
            raise FunctionLookupError(f"function index {index} not registered")


class InnerProductTable:
    """Table (i, j) -> (f_i, f_j) used by the rewriting engine."""

    def __init__(self, entries: dict | None = None):
        self._entries = dict(entries or {})

    def __getitem__(self, pair) -> complex:
        try:
            return self._entries[pair]
        except KeyError:
            raise MissingInnerProductError(pair) from None

    def __contains__(self, pair) -> bool:
        return pair in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    @classmethod
    def from_kernel(cls, spec: KernelSpec, registry: FunctionRegistry,
                    check: bool = True) -> "InnerProductTable":
        """All pairwise inner products of the registered packets by quadrature."""
        entries = {}
        n = len(registry)
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                value = inner_product(spec, registry.packet(i), registry.packet(j),
                                      check=check)
                entries[(i, j)] = value
                if i != j:
                    entries[(j, i)] = value.conjugate()
        return cls(entries)

    @classmethod
    def from_csv(cls, lines) -> "InnerProductTable":
        """Parse rows ``i,j,re,im``.  Accepts a string or iterable of lines."""
        if isinstance(lines, str):
            lines = lines.splitlines()
        entries = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise InvalidInputError(
                    f"line {lineno}: expected 'i,j,re,im', got {line!r}"
                )
            try:
                i, j = int(parts[0]), int(parts[1])
                re_part, im_part = float(parts[2]), float(parts[3])
            except ValueError:
                if lineno == 1:
                    continue  # tolerate a header row
                raise InvalidInputError(
                    f"line {lineno}: expected 'i,j,re,im', got {line!r}"
                ) from None
            entries[(i, j)] = complex(re_part, im_part)
        return cls(entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for (i, j), value in sorted(self._entries.items()):
            buf.write(f"{i},{j},{value.real:.17g},{value.imag:.17g}\n")
        return buf.getvalue()


class OperatorExpression:
    """Complex linear combination of operator words.

    Terms live in a dict word -> coefficient; words are canonical tuples
    of (kind, index) letters.  Only exactly-zero coefficients are dropped
    when terms merge: magnitude-based pruning would silently zero
    computations whose natural scale is small.  Instances are treated as
    immutable: all arithmetic returns new expressions.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {}
        if terms:
            for word, coeff in terms.items():
                _accumulate(self.terms, canonical_word(word), complex(coeff))

    @classmethod
    def zero(cls) -> "OperatorExpression":
        return cls()

    @classmethod
    def identity(cls) -> "OperatorExpression":
        return cls({(): 1.0})

    @classmethod
    def create(cls, index: int) -> "OperatorExpression":
        return cls({((CREATE, index),): 1.0})

    @classmethod
    def annihilate(cls, index: int) -> "OperatorExpression":
        return cls({((ANNIHILATE, index),): 1.0})

    def __iter__(self):
        return iter(self.terms.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorExpression):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other) -> "OperatorExpression":
        if not isinstance(other, OperatorExpression):
            return NotImplemented
        merged = dict(self.terms)
        for word, coeff in other.terms.items():
            _accumulate(merged, word, coeff)
        return _wrap(merged)

    def __sub__(self, other) -> "OperatorExpression":
        if not isinstance(other, OperatorExpression):
            return NotImplemented
        return self + (-other)

    def __neg__(self) -> "OperatorExpression":
        return _wrap({w: -c for w, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, OperatorExpression):
            product: dict = {}
            for w1, c1 in self.terms.items():
                for w2, c2 in other.terms.items():
                    _accumulate(product, canonical_word(w1 + w2), c1 * c2)
            return _wrap(product)
        return self.scaled(other)

    def __rmul__(self, other):
        return self.scaled(other)

    def scaled(self, factor) -> "OperatorExpression":
        factor = complex(factor)
        return _wrap({w: c * factor for w, c in self.terms.items()})

    def adjoint(self) -> "OperatorExpression":
        """*-involution: reverse each word, swap kinds, conjugate coefficients."""
        out: dict = {}
        for word, coeff in self.terms.items():
            flipped = tuple(
                (CREATE if kind == ANNIHILATE else ANNIHILATE, index)
                for kind, index in reversed(word)
            )
            _accumulate(out, canonical_word(flipped), coeff.conjugate())
        return _wrap(out)

    def is_normal_ordered(self) -> bool:
        return all(_first_inversion(word, "leftmost") is None for word in self.terms)

    def max_word_length(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for word in sorted(self.terms, key=lambda w: (len(w), w)):
            coeff = self.terms[word]
            parts.append(f"({coeff.real:g}{coeff.imag:+g}j)*{_word_str(word)}")
        return " + ".join(parts)


def _accumulate(terms: dict, word: tuple, coeff: complex):
    total = terms.get(word, 0.0) + coeff
    if total == 0:
        terms.pop(word, None)
    else:
        terms[word] = total


def _wrap(terms: dict) -> OperatorExpression:
    expr = OperatorExpression.__new__(OperatorExpression)
    expr.terms = {w: c for w, c in terms.items() if c != 0}
    return expr


def field_operator(registry: FunctionRegistry, index: int) -> OperatorExpression:
    """adag[i] + a[i]: the smeared field at the registered function ``i``."""
    registry._check_index(index)
    return OperatorExpression.create(index) + OperatorExpression.annihilate(index)


def _first_inversion(word: tuple, strategy: str):
    """Position of an adjacent (a, adag) pair to rewrite, or None."""
    positions = range(len(word) - 1)
    if strategy == "rightmost":
        positions = reversed(positions)
    for p in positions:
        if word[p][0] == ANNIHILATE and word[p + 1][0] == CREATE:
            return p
    return None


def _normal_order_word(word: tuple, ip, strategy: str, cache: dict) -> dict:
    word = canonical_word(word)
    hit = cache.get(word)
    if hit is not None:
        return hit
    p = _first_inversion(word, strategy)
    if p is None:
        result = {word: 1.0 + 0.0j}
        cache[word] = result
        return result
    annihilate_letter, create_letter = word[p], word[p + 1]
    swapped = word[:p] + (create_letter, annihilate_letter) + word[p + 2:]
    reduced = word[:p] + word[p + 2:]
    contraction = complex(ip[(create_letter[1], annihilate_letter[1])])

    result: dict = {}
    for w, c in _normal_order_word(swapped, ip, strategy, cache).items():
        _accumulate(result, w, c)
    for w, c in _normal_order_word(reduced, ip, strategy, cache).items():
        _accumulate(result, w, c * contraction)
    cache[word] = result
    return result


def normal_order(expr: OperatorExpression, ip, strategy: str = "leftmost") -> OperatorExpression:
    """Rewrite ``expr`` so every word has all creation letters first.

    Repeatedly substitutes a[g] adag[f] -> adag[f] a[g] + (f, g).  The
    substitution order (``leftmost`` or ``rightmost`` innermost pair) does
    not change the canonical result.
    """
    if strategy not in ("leftmost", "rightmost"):
        raise InvalidInputError(f"unknown strategy {strategy!r}")
    cache: dict = {}
    out: dict = {}
    for word, coeff in expr.terms.items():
        for w, c in _normal_order_word(word, ip, strategy, cache).items():
            _accumulate(out, w, c * coeff)
    return _wrap(out)


def vacuum_expectation(expr: OperatorExpression, ip, strategy: str = "leftmost") -> complex:
    """<0| expr |0>: the identity-word coefficient after normal ordering."""
    ordered = normal_order(expr, ip, strategy=strategy)
    return ordered.terms.get((), 0.0 + 0.0j)


def enumerate_pairings(n: int):
    """All perfect matchings of positions 0..n-1 as lists of (p, q), p < q."""
    if n % 2 or n < 0:
        return []
    positions = list(range(n))

    def rec(remaining):
        if not remaining:
            yield []
            return
        first = remaining[0]
        for j in range(1, len(remaining)):
            partner = remaining[j]
            rest = remaining[1:j] + remaining[j + 1:]
            for tail in rec(rest):
                yield [(first, partner)] + tail

    return list(rec(positions))


def wick_vev(indices, ip) -> complex:
    """Sum over perfect matchings of products of two-point kernels.

    For a product phi[i1]...phi[in] the vacuum expectation value is the sum
    over matchings of positions, with each matched pair (p < q) worth
    ip(f_q, f_p).  Odd n gives 0, the empty product gives 1.
    """
    indices = list(indices)
    n = len(indices)
    if n > MAX_PAIRING_SIZE:
        raise SizeLimitError(
            f"refusing to enumerate pairings of {n} insertions (limit {MAX_PAIRING_SIZE})"
        )
    if n % 2:
        return 0.0 + 0.0j
    if n == 0:
        return 1.0 + 0.0j

    def rec(remaining):
        if not remaining:
            return 1.0 + 0.0j
        first = remaining[0]
        total = 0.0 + 0.0j
        for j in range(1, len(remaining)):
            partner = remaining[j]
            factor = complex(ip[(indices[partner], indices[first])])
            rest = remaining[1:j] + remaining[j + 1:]
            total += factor * rec(rest)
        return total

    return rec(list(range(n)))


def excited_state_norm(indices, ip) -> complex:
    """<0| a[f_n]..a[f_1] adag[f_1]..adag[f_n] |0> via the rewriting engine.

    Equals the permanent of the matrix M[p][q] = ip(f_p, f_q).
    """
    indices = list(indices)
    letters = [(ANNIHILATE, i) for i in reversed(indices)]
    letters += [(CREATE, i) for i in indices]
    expr = OperatorExpression({tuple(letters): 1.0})
    return vacuum_expectation(expr, ip)


# --- operator-string front end -------------------------------------------
#
# expression := term (('+'|'-') term)*
# term       := [complex-literal '*'] factor+
# factor     := ('phi'|'a'|'adag') '[' ident ']'
#
# Whitespace-insensitive; offsets in errors are 1-based.  The complex
# literal is a real decimal literal, an imaginary one with a 'j' suffix,
# or a parenthesized sum '(a+bj)'.

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?j?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<symbol>[+\-*\[\]()])"
    r")"
)

_FACTOR_KEYWORDS = ("phi", "a", "adag")


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | symbol | end
    text: str
    position: int  # 1-based offset of first character


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.lastgroup is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise ExpressionSyntaxError(
                f"unexpected character {text[bad_at]!r}", bad_at + 1
            )
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), match.start(kind) + 1))
        pos = match.end()
    tokens.append(_Token("end", "", len(text) + 1))
    return tokens


@dataclass(frozen=True)
class ParsedTerm:
    coefficient: complex
    factors: tuple  # of (keyword, ident) pairs in textual order

    @property
    def is_phi_product(self) -> bool:
        return all(kw == "phi" for kw, _ in self.factors)


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.cursor = 0

    def peek(self) -> _Token:
        return self.tokens[self.cursor]

    def advance(self) -> _Token:
        tok = self.tokens[self.cursor]
        self.cursor += 1
        return tok

    def expect_symbol(self, symbol: str) -> _Token:
        tok = self.peek()
        if tok.kind != "symbol" or tok.text != symbol:
            raise ExpressionSyntaxError(f"expected {symbol!r}", tok.position)
        return self.advance()

    def parse(self):
        terms = [(1.0, self.parse_term())]
        while True:
            tok = self.peek()
            if tok.kind == "symbol" and tok.text in "+-":
                self.advance()
                sign = 1.0 if tok.text == "+" else -1.0
                terms.append((sign, self.parse_term()))
            elif tok.kind == "end":
                break
            else:
                raise ExpressionSyntaxError(
                    f"expected '+', '-' or end of input, found {tok.text!r}",
                    tok.position,
                )
        return [
            ParsedTerm(sign * term.coefficient, term.factors)
            for sign, term in terms
        ]

    def parse_term(self) -> ParsedTerm:
        coeff = 1.0 + 0.0j
        tok = self.peek()
        if tok.kind == "number" or (tok.kind == "symbol" and tok.text == "("):
            coeff = self.parse_complex_literal()
            self.expect_symbol("*")
        factors = [self.parse_factor()]
        while self.peek().kind == "name":
            factors.append(self.parse_factor())
        return ParsedTerm(coeff, tuple(factors))

    def parse_factor(self):
        tok = self.peek()
        if tok.kind != "name":
            message = "expected a factor ('phi', 'a' or 'adag')"
            if tok.text:
                message += f", found {tok.text!r}"
            raise ExpressionSyntaxError(message, tok.position)
        self.advance()
        if tok.text not in _FACTOR_KEYWORDS:
            raise ExpressionSyntaxError(
                f"unknown factor keyword {tok.text!r}", tok.position
            )
        self.expect_symbol("[")
        ident = self.peek()
        if ident.kind != "name":
            raise ExpressionSyntaxError("expected a function name", ident.position)
        self.advance()
        self.expect_symbol("]")
        return (tok.text, ident.text)

    def parse_complex_literal(self) -> complex:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return _number_value(tok)
        self.expect_symbol("(")
        first = self.peek()
        if first.kind != "number":
            raise ExpressionSyntaxError("expected a number", first.position)
        self.advance()
        value = _number_value(first)
        tok = self.peek()
        if tok.kind == "symbol" and tok.text in "+-":
            self.advance()
            second = self.peek()
            if second.kind != "number" or not second.text.endswith("j"):
                raise ExpressionSyntaxError(
                    "expected an imaginary literal like '2j'", second.position
                )
            self.advance()
            imag = _number_value(second)
            value = value + imag if tok.text == "+" else value - imag
        self.expect_symbol(")")
        return value


def _number_value(tok: _Token) -> complex:
    if tok.text.endswith("j"):
        return complex(0.0, float(tok.text[:-1]))
    return complex(float(tok.text), 0.0)


def parse_terms(text: str) -> list:
    """Parse an operator string into (coefficient, factor list) terms."""
    return _Parser(text).parse()


def parse_expression(text: str, registry: FunctionRegistry) -> OperatorExpression:
    """Parse an operator string, auto-registering idents on first appearance."""
    parsed = parse_terms(text)
    total = OperatorExpression.zero()
    for term in parsed:
        expr = OperatorExpression.identity().scaled(term.coefficient)
        for keyword, ident in term.factors:
            index = registry.ensure(ident)
            if keyword == "phi":
                factor = field_operator(registry, index)
            elif keyword == "a":
                factor = OperatorExpression.annihilate(index)
            else:
                factor = OperatorExpression.create(index)
            expr = expr * factor
        total = total + expr
    return total
