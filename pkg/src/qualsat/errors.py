"""Exception hierarchy shared across the pipeline stages.

Every stage raises a subclass of QualsatError so the command-line driver can
tag failures with the stage that produced them and map them to exit codes.
"""

from __future__ import annotations


class QualsatError(Exception):
    """Base class for all errors raised by this package."""


class FormulaSyntaxError(QualsatError):
    """Surface-syntax error, carrying a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class UnknownLetterError(QualsatError):
    """A formula uses a letter outside the declared alphabet."""


class DelayLetterCollision(QualsatError):
    """The reserved delay letter already occurs in the formula alphabet."""


class UnsupportedShapeError(QualsatError):
    """A formula falls outside the fragment an operation supports."""


class UnsupportedPathFormula(UnsupportedShapeError):
    """A quantified path formula is not X/U/G over state formulas or an
    automaton literal; general nested path formulas need the automaton
    encoding."""


class AutomatonFormatError(QualsatError):
    """Malformed textual automaton or Markov chain input."""


class ProbSumError(AutomatonFormatError):
    """Per-state outgoing probabilities of a Markov chain do not sum to 1."""


class EmptyAfterNormalization(QualsatError):
    """Normalization deleted the initial state; the language is empty."""


class NotBuchiError(QualsatError):
    """The polynomial emptiness engine requires a Buchi sure condition."""


class BoundExceeded(QualsatError):
    """The experimental enumerator refuses instances above its size bound."""


class CapExceeded(QualsatError):
    """Materialization hit the product-state cap; carries the frontier size."""

    def __init__(self, cap: int, frontier: int) -> None:
        super().__init__(f"product state cap {cap} exceeded (frontier {frontier})")
        self.cap = cap
        self.frontier = frontier


class IndexOverflow(QualsatError):
    """An arrival index exceeded 2|Q|; this signals a bug, never valid
    input."""


class MalformedGuess(QualsatError):
    """A witness guess claims a play that is not positive and canonical."""


class RejectedGuess(QualsatError):
    """A guessed witness update violates the closure conditions; the
    corresponding product transition routes to the error sink."""


class AutomatonStructureError(QualsatError):
    """The automaton lacks a structural property an operation requires:
    completeness, limited choice, or single-letter local-loop freedom."""
