"""Exception types shared across the package."""


class ChainError(ValueError):
    """Malformed chain file or a generator that breaks a structural invariant."""


class ReducibleChainError(ChainError):
    """Operation needs an irreducible generator."""


class NumericalDegeneracy(ArithmeticError):
    """A solve or closed-form ratio could not be evaluated reliably.

    ``equation`` names the relation that broke down; the CLI echoes it in
    its one-line diagnostic.
    """

    def __init__(self, message, equation=None):
        super().__init__(message)
        self.equation = equation


class TabooGreenDivergence(NumericalDegeneracy):
    """The restricted generator is singular: some class never leaves ``S \\ H``."""


class DenominatorError(NumericalDegeneracy):
    """A ratio formula met a denominator at or below its safety threshold."""


class ProbabilityRangeError(NumericalDegeneracy):
    """A computed probability fell outside its admissible interval."""
