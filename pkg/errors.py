from __future__ import annotations

from typing import Optional


class EngineError(Exception):
    """Base class for every error raised by the engine."""


# ---- lattice algebra
class AmbientMismatch(EngineError):
    pass


class SpanMismatch(EngineError):
    pass


class NotASublattice(EngineError):
    pass


class InfiniteQuotient(EngineError):
    pass


# ---- modular symbols / newforms
class LevelTooLarge(EngineError):
    pass


class GenusZero(EngineError):
    pass


class NotStarStable(EngineError):
    pass


class BoundExceeded(EngineError):
    pass


class PairDegenerate(EngineError):
    pass


class RankNotZero(EngineError):
    pass


class HypothesisUnverifiable(EngineError):
    pass


# ---- curves
class SchemaError(EngineError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class BadReduction(EngineError):
    pass


class AmbiguousMatch(EngineError):
    pass


# ---- harness
class ConfigError(EngineError):
    pass


class CacheCorrupt(EngineError):
    pass
