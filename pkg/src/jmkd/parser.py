"""Text grammar for parameter-function bodies.

EBNF (whitespace ignored)::

    expr     = term , { ("+" | "-") , term } ;
    term     = unary , { ("*" | "/") , unary } ;
    unary    = "-" , unary | power ;
    power    = atom , [ "^" , exponent ] ;
    exponent = [ "-" ] , number , [ "^" , exponent ]
             | "(" , [ "-" ] , number , [ "/" , number ] , ")" , [ "^" , exponent ] ;
    atom     = number | identifier | func , "(" , expr , ")" | "(" , expr , ")" ;
    func     = "exp" | "log" | "sin" | "cos" ;
    number   = digit , { digit } , [ "." , digit , { digit } ] ;

``^`` binds tighter than unary minus (``-s^2`` is ``-(s^2)``) and is right
associative; exponents are numeric literals only.  Identifiers must be a
declared formal argument or a declared named constant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from . import expr as ex
from .expr import Expr

FUNCTIONS = {"exp": ex.exp, "log": ex.log, "sin": ex.sin, "cos": ex.cos}


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset


class LexicalError(ParseError):
    pass


class GrammarError(ParseError):
    """Syntax error (token sequence not derivable from the grammar)."""


class UnknownIdentifierError(ParseError):
    pass


class NonNumericExponentError(ParseError):
    pass


class UnsupportedNodeError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # num, id, op, end
    text: str
    offset: int


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


def tokenize(src: str) -> list[Token]:
    data = src.encode("utf-8")
    toks: list[Token] = []
    pos = 0
    text = src
    # offsets are byte offsets into the UTF-8 encoding
    char_to_byte = [len(text[:i].encode("utf-8")) for i in range(len(text) + 1)]
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:]
            stripped = len(rest) - len(rest.lstrip())
            if pos + stripped >= len(text):
                break
            raise LexicalError(f"unexpected character {text[pos + stripped]!r}", char_to_byte[pos + stripped])
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(Token(kind, m.group(kind), char_to_byte[start]))
        pos = m.end()
    toks.append(Token("end", "", len(data)))
    return toks


class _Parser:
    def __init__(self, src: str, formals: tuple[str, ...], constants: tuple[str, ...]):
        self.toks = tokenize(src)
        self.i = 0
        self.formals = formals
        self.constants = constants

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.text != text or t.kind == "end":
            raise GrammarError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.offset)
        return self.take()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise GrammarError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            t = self.term()
            terms.append(t if op == "+" else ex.neg(t))
        return ex.add(*terms)

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take()
            rhs = self.unary()
            if op.text == "*":
                e = ex.mul(e, rhs)
            else:
                if rhs == ex.ZERO:
                    raise GrammarError("division by literal zero", op.offset)
                e = ex.div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.take()
            return ex.neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            n = self.exponent()
            try:
                return ex.power(base, n)
            except ex.SingularPointError:
                raise GrammarError("zero raised to a negative power", self.tok.offset) from None
        return base

    def _number(self) -> Fraction:
        t = self.tok
        if t.kind != "num":
            if t.kind == "end":
                raise GrammarError("expected exponent, found end of input", t.offset)
            raise NonNumericExponentError(f"non-numeric exponent {t.text!r}", t.offset)
        self.take()
        return Fraction(t.text)

    def exponent(self) -> Fraction:
        start = self.tok
        if self.tok.kind == "op" and self.tok.text == "(":
            self.take()
            sign = -1 if self._maybe("-") else 1
            n = self._number()
            if self._maybe("/"):
                d = self._number()
                if d == 0:
                    raise GrammarError("zero denominator in exponent", start.offset)
                n = n / d
            self.expect(")")
            n = sign * n
        else:
            sign = -1 if self._maybe("-") else 1
            n = sign * self._number()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            m = self.exponent()
            if m.denominator != 1:
                raise NonNumericExponentError("exponent of an exponent must be an integer", start.offset)
            if n == 0 and m < 0:
                raise GrammarError("zero raised to a negative power", start.offset)
            n = n ** int(m)
        return n

    def _maybe(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.take()
            return True
        return False

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.take()
            return ex.const(Fraction(t.text))
        if t.kind == "id":
            self.take()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[t.text](arg)
            if t.text in self.formals:
                return ex.Var(t.text)
            if t.text in self.constants:
                return ex.NamedConst(t.text)
            raise UnknownIdentifierError(f"unknown identifier {t.text!r}", t.offset)
        if t.kind == "op" and t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "end":
            raise GrammarError("unexpected end of input", t.offset)
        raise GrammarError(f"unexpected {t.text!r}", t.offset)


def parse(src: str, formals=(), constants=()) -> Expr:
    """Parse ``src`` into an expression over ``formals`` and named ``constants``."""
    if not src or not src.strip():
        raise GrammarError("empty expression", 0)
    formals = tuple(formals)
    for f in formals:
        if f in FUNCTIONS:
            raise ValueError(f"formal {f!r} shadows a function name")
    return _Parser(src, formals, tuple(constants)).parse()


def parse_binding(name: str, body: str, formals, constants=()) -> ex.ParamBinding:
    return ex.ParamBinding(name, tuple(formals), parse(body, formals, constants))


# ---------------------------------------------------------------------------
# printing

# precedence levels: sum 1, product 2, unary minus 3, power 4, atom 5


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _exp_text(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"({_frac(q)})"


def to_text(e: Expr, strict: bool = True) -> str:
    """Canonical text of ``e``.

    With ``strict`` the output is guaranteed to re-parse to ``e``; nodes
    outside the grammar (antiderivatives, parameter calls) raise
    :class:`UnsupportedNodeError`.  ``strict=False`` renders them in a
    readable, non-parseable form for reports.
    """
    return _Printer(strict).text(e)


class _Printer:
    def __init__(self, strict: bool):
        self.strict = strict

    def text(self, e: Expr) -> str:
        return self._p(e)[0]

    def _wrap(self, e: Expr, level: int) -> str:
        s, prec = self._p(e)
        return f"({s})" if prec < level else s

    def _p(self, e: Expr) -> tuple[str, int]:
        if isinstance(e, ex.Const):
            v = e.value
            if v < 0:
                return "-" + _frac(-v), 3
            return _frac(v), (5 if v.denominator == 1 else 2)
        if isinstance(e, (ex.Var, ex.NamedConst)):
            return e.name, 5
        if isinstance(e, ex.Add):
            parts: list[str] = []
            for i, term in enumerate(e.terms):
                c, rest = ex._split_coeff(term)
                if isinstance(term, ex.Const):
                    c, rest = term.value, None
                negative = c < 0
                body = self._term(abs(c), rest)
                if i == 0:
                    parts.append(("-" if negative else "") + body)
                else:
                    parts.append((" - " if negative else " + ") + body)
            return "".join(parts), 1
        if isinstance(e, ex.Mul):
            c, rest = ex._split_coeff(e)
            if c < 0:
                return "-" + self._term(-c, rest, unary=True), 3
            return self._term(c, rest), 2
        if isinstance(e, (ex.Pow, ex.RPow)):
            return f"{self._wrap(e.base, 5)}^{_exp_text(Fraction(e.exp))}", 4
        if isinstance(e, ex._Unary):
            return f"{e.fname}({self._p(e.arg)[0]})", 5
        if self.strict:
            raise UnsupportedNodeError(f"{type(e).__name__} is not expressible in the grammar")
        if isinstance(e, ex.Call):
            args = ", ".join(self._p(a)[0] for a in e.args)
            if any(e.orders):
                return f"D{list(e.orders)}{e.name}({args})", 5
            return f"{e.name}({args})", 5
        if isinstance(e, ex.Antideriv):
            return f"int[{e.var}:{_frac(e.base)}..{e.var}]({self._p(e.integrand)[0]})", 5
        raise UnsupportedNodeError(type(e).__name__)

    def _term(self, c: Fraction, rest: Expr | None, unary: bool = False) -> str:
        """Text of ``c * rest`` with c >= 0, suitable after a +/- sign."""
        if rest is None:
            return _frac(c)
        if isinstance(rest, ex.Mul):
            factors = [self._wrap(f, 4) for f in rest.factors]
        else:
            factors = [self._wrap(rest, 4 if c != 1 or unary else 2)]
        if c != 1:
            factors.insert(0, _frac(c))
        return "*".join(factors)
