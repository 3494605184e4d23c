"""Exception hierarchy shared by every module.

Each class carries an ``exit_code`` so the CLI can map failures to distinct
process exit statuses without a lookup table of its own. The tens digit
names the category (10 data, 20 folds, 30 classifiers, 40 evaluation,
50 synthesis, 60 configuration, 70 parsing).
"""

from __future__ import annotations


class RareEventError(Exception):
    exit_code = 1


class DataError(RareEventError):
    """Malformed or inconsistent input data."""

    exit_code = 10


class AllMissingFeature(DataError):
    exit_code = 11


class LeadingGap(DataError):
    exit_code = 12


class TauTooLarge(DataError):
    exit_code = 13


class EmptyTrainingSet(DataError):
    exit_code = 14


class ShapeMismatch(DataError):
    exit_code = 15


class FoldError(RareEventError):
    exit_code = 20


class NoEvents(FoldError):
    exit_code = 21


class BetaNonPositive(FoldError):
    exit_code = 22


class KTooLarge(FoldError):
    exit_code = 23


class KTooSmall(FoldError):
    exit_code = 24


class BadFoldIndex(FoldError):
    exit_code = 25


class ClassifierError(RareEventError):
    exit_code = 30


class SingleClassTraining(ClassifierError):
    exit_code = 31


class DimensionMismatch(ClassifierError):
    exit_code = 32


class BadHyperparameter(ClassifierError):
    exit_code = 33


class EvaluationError(RareEventError):
    exit_code = 40


class EmptyClass(EvaluationError):
    exit_code = 41


class AllFoldsSkipped(EvaluationError):
    exit_code = 42


class InfeasiblePlacement(RareEventError):
    exit_code = 50


class ConfigError(RareEventError):
    exit_code = 60


class ParseError(RareEventError):
    exit_code = 70

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonUniformTicks(ParseError):
    exit_code = 71


class BadEventValue(ParseError):
    exit_code = 72
