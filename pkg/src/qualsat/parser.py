"""Surface syntax for state formulas.

A document is an optional ``alphabet`` line followed by one formula.  State
operators are ``true``, ``false``, letters, ``!``, ``&``, ``|`` and the four
path quantifiers ``E( )``, ``A( )``, ``P>0( )``, ``P=1( )``.  Inside a
quantifier the path operators ``X``, ``G``, ``F`` and the right-associative
infix ``U`` become available, as do deterministic-automaton literals::

    auto{states q0 q1; init q0; acc q1; q0 -> q1 on 1*; ...}(phi1, phi2)

Precedence is ``!``/prefix operators, then ``U``, then ``&``, then ``|``.
``@delay`` names the reserved stall letter and is accepted wherever a letter
is.
"""

from __future__ import annotations

import re

from .errors import FormulaSyntaxError, UnknownLetterError
from .formulas import (
    DELAY_LETTER,
    BuchiWordAutomaton,
    PathFormula,
    StateFormula,
    alphabet_of,
    atom,
    bot,
    conj,
    disj,
    exists,
    forall,
    neg,
    path_and,
    path_automaton_literal,
    path_eventually,
    path_globally,
    path_next,
    path_not,
    path_or,
    path_state,
    path_until,
    prob_one,
    prob_pos,
    top,
)

_RESERVED = frozenset(
    ["true", "false", "E", "A", "X", "G", "F", "U", "P", "auto"]
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<probpos>P>0)
  | (?P<probone>P=1)
  | (?P<delay>@delay)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<pattern>[01*]+)
  | (?P<arrow>->)
  | (?P<sym>[!&|(){},;])
    """,
    re.VERBOSE,
)

_LETTER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class _Token:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind: str, text: str, line: int, column: int) -> None:
        self.kind = kind
        self.text = text
        self.line = line
        self.column = column


def _tokenize(text: str, line0: int = 1) -> list[_Token]:
    tokens: list[_Token] = []
    line, bol = line0, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - bol + 1
            )
        kind = m.lastgroup
        assert kind is not None
        if kind in ("ws", "comment"):
            for i in range(m.start(), m.end()):
                if text[i] == "\n":
                    line += 1
                    bol = i + 1
        else:
            tokens.append(_Token(kind, m.group(), line, m.start() - bol + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - bol + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> FormulaSyntaxError:
        tok = tok or self.peek()
        return FormulaSyntaxError(message, tok.line, tok.column)

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.text != text:
            shown = tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}", tok)
        return self.take()

    # ---------------------------------------------------------- state level

    def parse_state(self) -> StateFormula:
        out = self.state_or()
        tok = self.peek()
        if tok.kind != "eof":
            if tok.text in ("X", "G", "F", "U"):
                raise self.error(
                    f"path operator {tok.text!r} outside a path quantifier", tok
                )
            raise self.error(f"unexpected {tok.text!r} after formula", tok)
        return out

    def state_or(self) -> StateFormula:
        out = self.state_and()
        while self.peek().text == "|":
            self.take()
            out = disj(out, self.state_and())
        return out

    def state_and(self) -> StateFormula:
        out = self.state_unary()
        while self.peek().text == "&":
            self.take()
            out = conj(out, self.state_unary())
        return out

    def state_unary(self) -> StateFormula:
        tok = self.peek()
        if tok.text == "!":
            self.take()
            return neg(self.state_unary())
        if tok.text == "(":
            self.take()
            out = self.state_or()
            self.expect(")")
            return out
        if tok.text in ("X", "G", "F", "U"):
            raise self.error(
                f"path operator {tok.text!r} outside a path quantifier", tok
            )
        return self.state_atom()

    def state_atom(self) -> StateFormula:
        tok = self.take()
        if tok.kind == "probpos":
            return prob_pos(self.quantified_path())
        if tok.kind == "probone":
            return prob_one(self.quantified_path())
        if tok.kind == "delay":
            return atom(DELAY_LETTER)
        if tok.kind == "ident":
            if tok.text == "true":
                return top()
            if tok.text == "false":
                return bot()
            if tok.text == "E":
                return exists(self.quantified_path())
            if tok.text == "A":
                return forall(self.quantified_path())
            if tok.text == "auto":
                raise self.error(
                    "automaton literal outside a path quantifier", tok
                )
            if tok.text in _RESERVED:
                raise self.error(f"reserved word {tok.text!r}", tok)
            return atom(tok.text)
        shown = tok.text or "end of input"
        raise self.error(f"expected a formula, found {shown!r}", tok)

    def quantified_path(self) -> PathFormula:
        self.expect("(")
        out = self.path_or()
        self.expect(")")
        return out

    # ----------------------------------------------------------- path level

    def path_or(self) -> PathFormula:
        out = self.path_and()
        while self.peek().text == "|":
            self.take()
            out = path_or(out, self.path_and())
        return out

    def path_and(self) -> PathFormula:
        out = self.path_until()
        while self.peek().text == "&":
            self.take()
            out = path_and(out, self.path_until())
        return out

    def path_until(self) -> PathFormula:
        out = self.path_unary()
        if self.peek().text == "U":
            self.take()
            out = path_until(out, self.path_until())
        return out

    def path_unary(self) -> PathFormula:
        tok = self.peek()
        if tok.text == "!":
            self.take()
            return path_not(self.path_unary())
        if tok.text == "X":
            self.take()
            return path_next(self.path_unary())
        if tok.text == "G":
            self.take()
            return path_globally(self.path_unary())
        if tok.text == "F":
            self.take()
            return path_eventually(self.path_unary())
        if tok.text == "(":
            self.take()
            out = self.path_or()
            self.expect(")")
            return out
        if tok.kind == "ident" and tok.text == "auto":
            return self.automaton_literal()
        return path_state(self.state_atom())

    # ---------------------------------------------------- automaton literal

    def automaton_literal(self) -> PathFormula:
        head = self.expect("auto")
        self.expect("{")
        names = self.block_names("states")
        initial = self.block_names("init")
        if len(initial) != 1:
            raise self.error("init expects exactly one state", head)
        accepting = self.block_names("acc", allow_empty=True)
        rules: list[tuple[str, str, str, _Token]] = []
        while self.peek().text != "}":
            src = self.block_state_name(names)
            self.expect("->")
            dst = self.block_state_name(names)
            on = self.peek()
            if on.kind != "ident" or on.text != "on":
                raise self.error("expected 'on' in transition rule", on)
            self.take()
            pat = self.take()
            if pat.kind != "pattern":
                raise self.error("expected a 0/1/* pattern", pat)
            rules.append((src, dst, pat.text, pat))
            self.expect(";")
        self.expect("}")
        self.expect("(")
        args = [self.state_or()]
        while self.peek().text == ",":
            self.take()
            args.append(self.state_or())
        self.expect(")")
        for name in initial + accepting:
            if name not in names:
                raise self.error(f"undeclared automaton state {name!r}", head)
        arity = len(args)
        table: dict[tuple[str, int], str] = {}
        for src, dst, pattern, pat_tok in rules:
            if len(pattern) != arity:
                raise self.error(
                    f"pattern {pattern!r} has {len(pattern)} positions "
                    f"for {arity} arguments",
                    pat_tok,
                )
            for mask in self.expand_pattern(pattern):
                if (src, mask) in table:
                    raise self.error(
                        f"overlapping patterns for state {src!r}", pat_tok
                    )
                table[(src, mask)] = dst
        missing = [
            (src, mask)
            for src in names
            for mask in range(1 << arity)
            if (src, mask) not in table
        ]
        if missing:
            src, mask = missing[0]
            bits = format(mask, f"0{arity}b")[::-1] if arity else ""
            raise self.error(
                f"missing transition from {src!r} on {bits!r}", head
            )
        dba = BuchiWordAutomaton(
            states=tuple(names),
            initial=initial[0],
            accepting=frozenset(accepting),
            arity=arity,
            transitions=tuple(
                (src, mask, dst) for (src, mask), dst in sorted(table.items())
            ),
        )
        return path_automaton_literal(dba, tuple(args))

    def block_names(self, keyword: str, allow_empty: bool = False) -> list[str]:
        tok = self.peek()
        if tok.kind != "ident" or tok.text != keyword:
            raise self.error(f"expected {keyword!r}", tok)
        self.take()
        names: list[str] = []
        while self.peek().text != ";":
            name = self.take()
            if name.kind != "ident":
                raise self.error("expected a state name", name)
            if name.text in names:
                raise self.error(f"duplicate state name {name.text!r}", name)
            names.append(name.text)
        self.expect(";")
        if not names and not allow_empty:
            raise self.error(f"{keyword} expects at least one name", tok)
        return names

    def block_state_name(self, names: list[str]) -> str:
        tok = self.take()
        if tok.kind != "ident":
            raise self.error("expected a state name", tok)
        if tok.text not in names:
            raise self.error(f"undeclared automaton state {tok.text!r}", tok)
        return tok.text

    @staticmethod
    def expand_pattern(pattern: str) -> list[int]:
        masks = [0]
        for i, ch in enumerate(pattern):
            if ch == "*":
                masks = masks + [m | (1 << i) for m in masks]
            elif ch == "1":
                masks = [m | (1 << i) for m in masks]
        return masks


def _split_alphabet_line(text: str) -> tuple[tuple[str, ...] | None, str, int]:
    """Peel off a leading ``alphabet a b ...`` line.  Returns the declared
    letters (or None), the remaining formula text, and its starting line."""
    lines = text.split("\n")
    for i, raw in enumerate(lines):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if re.match(r"alphabet\b", stripped):
            body = stripped[len("alphabet"):].split("#", 1)[0]
            letters = body.split()
            if not letters:
                raise FormulaSyntaxError("empty alphabet declaration", i + 1, 1)
            seen: list[str] = []
            for name in letters:
                if not _LETTER_RE.match(name) or name in _RESERVED:
                    raise FormulaSyntaxError(
                        f"bad alphabet letter {name!r}", i + 1, 1
                    )
                if name in seen:
                    raise FormulaSyntaxError(
                        f"duplicate alphabet letter {name!r}", i + 1, 1
                    )
                seen.append(name)
            rest = "\n".join(lines[i + 1:])
            return tuple(seen), rest, i + 2
        break
    return None, text, 1


def parse_document(text: str) -> tuple[StateFormula, tuple[str, ...] | None]:
    """Parse a formula document.  When an alphabet is declared, every letter
    of the formula must belong to it; the delay letter is always allowed."""
    alphabet, body, line0 = _split_alphabet_line(text)
    tokens = _tokenize(body, line0)
    formula = _Parser(tokens).parse_state()
    if alphabet is not None:
        unknown = sorted(
            alphabet_of(formula) - frozenset(alphabet) - {DELAY_LETTER}
        )
        if unknown:
            raise UnknownLetterError(
                "letters not in the declared alphabet: " + " ".join(unknown)
            )
    return formula, alphabet


def parse(text: str) -> StateFormula:
    return parse_document(text)[0]
