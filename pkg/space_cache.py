import logging
import os
from fractions import Fraction
from typing import Dict, List, Optional

import orjson

from errors import CacheCorrupt
from exactlinalg import int_rows, zz_matrix
from modsym import ManinSymbol, ModSymSpace, build_space, genus_x0

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

_SPACE_CACHE: Dict[int, ModSymSpace] = {}


def _enc(x: Fraction):
    x = Fraction(x)
    num, den = int(x.numerator), int(x.denominator)
    return num if den == 1 else f"{num}/{den}"


def _dec(x) -> Fraction:
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not a rational: {x!r}")


def dump_space(space: ModSymSpace) -> bytes:
    """Canonical JSON for a space and every Hecke matrix computed on it so far."""
    doc = {
        "format": FORMAT_VERSION,
        "level": space.level,
        "dimension": space.dimension,
        "symbols": [[int(s.c), int(s.d)] for s in space.symbols],
        "free_generators": list(space.free_generators),
        "relations": [[[k, _enc(x)] for k, x in row] for row in space.relation_table],
        "cusps": [[int(u), int(v)] for u, v in space.cusps],
        "boundary": [[[int(k), int(x)] for k, x in row] for row in space.boundary_data],
        "cuspidal_basis": [[_enc(x) for x in row] for row in space.cuspidal_basis],
        "star": [[int(x) for x in r] for r in space.star_rows],
        "winding": [_enc(x) for x in space._memo["winding"]] if "winding" in space._memo else None,
        "hecke": {str(n): int_rows(m) for n, m in sorted(space.hecke_cache().items())},
    }
    return orjson.dumps(doc, option=orjson.OPT_SORT_KEYS)


def load_space(blob: bytes, level: Optional[int] = None) -> ModSymSpace:
    try:
        doc = orjson.loads(blob)
        if doc.get("format") != FORMAT_VERSION:
            raise ValueError(f"format {doc.get('format')} is not {FORMAT_VERSION}")
        if level is not None and doc["level"] != level:
            raise ValueError(f"file holds level {doc['level']}")
        basis = tuple(tuple(_dec(x) for x in row) for row in doc["cuspidal_basis"])
        space = ModSymSpace(
            level=int(doc["level"]),
            symbols=tuple(ManinSymbol(int(c), int(d)) for c, d in doc["symbols"]),
            free_generators=tuple(int(j) for j in doc["free_generators"]),
            relation_table=tuple(tuple((int(k), _dec(x)) for k, x in row) for row in doc["relations"]),
            cusps=tuple((int(u), int(v)) for u, v in doc["cusps"]),
            boundary_data=tuple(tuple((int(k), int(x)) for k, x in row) for row in doc["boundary"]),
            cuspidal_basis=basis,
            star_rows=tuple(tuple(int(x) for x in r) for r in doc["star"]),
        )
        dim = space.dimension
        if dim != doc["dimension"] or dim != 2 * genus_x0(space.level):
            raise ValueError(f"dimension {dim} does not match the genus")
        if any(len(row) != space.raw_dimension for row in basis):
            raise ValueError("basis rows of the wrong length")
        if len(space.star_rows) != dim or len(space.relation_table) != len(space.symbols):
            raise ValueError("truncated tables")
        if doc["winding"] is not None:
            space._memo["winding"] = tuple(_dec(x) for x in doc["winding"])
        for n, rows in doc["hecke"].items():
            if len(rows) != dim:
                raise ValueError(f"T_{n} has the wrong shape")
            space.hecke_cache()[int(n)] = zz_matrix(rows, dim)
        return space
    except CacheCorrupt:
        raise
    except (orjson.JSONDecodeError, KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise CacheCorrupt(str(exc)) from exc


class SpaceStore:
    """
    Per-level spaces kept in process memory and, when a cache directory is
    configured, as one canonical JSON file per level on disk.
    """
    def __init__(self, cache_dir: Optional[str] = None, force_rebuild: bool = False):
        self.cache_dir = cache_dir if cache_dir is not None else os.getenv("MODVIS_CACHE_DIR", ".modvis_cache")
        self.force_rebuild = force_rebuild

    def path_for(self, N: int) -> str:
        return os.path.join(self.cache_dir, f"level_{N:05d}.v{FORMAT_VERSION}.json")

    def load(self, N: int) -> Optional[ModSymSpace]:
        path = self.path_for(N)
        if not self.cache_dir or not os.path.exists(path):
            return None
        with open(path, "rb") as fh:
            blob = fh.read()
        return load_space(blob, level=N)

    def save(self, space: ModSymSpace) -> None:
        if not self.cache_dir:
            return
        os.makedirs(self.cache_dir, exist_ok=True)
        path = self.path_for(space.level)
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(dump_space(space))
        os.replace(tmp, path)
        log.info("cached level %d (%d Hecke matrices)", space.level, len(space.hecke_cache()))

    def get(self, N: int) -> ModSymSpace:
        if not self.force_rebuild and N in _SPACE_CACHE:
            return _SPACE_CACHE[N]
        space = None
        if not self.force_rebuild:
            try:
                space = self.load(N)
                if space is not None:
                    log.info("cache hit for level %d", N)
            except CacheCorrupt as exc:
                log.warning("cache file for level %d is corrupt (%s); recomputing", N, exc)
        if space is None:
            space = build_space(N)
            self.save(space)
        _SPACE_CACHE[N] = space
        return space


def get_space(N: int, store: Optional[SpaceStore] = None) -> ModSymSpace:
    """Space at level N, memoized in process."""
    if N in _SPACE_CACHE:
        return _SPACE_CACHE[N]
    if store is None:
        space = build_space(N)
        _SPACE_CACHE[N] = space
        return space
    return store.get(N)


def cache_roundtrip(space: ModSymSpace, store: SpaceStore) -> ModSymSpace:
    """Write a space to the store and read it back."""
    store.save(space)
    out = store.load(space.level)
    if out is None:
        raise CacheCorrupt(f"level {space.level} missing after write")
    return out


def clear_memory_cache(levels: Optional[List[int]] = None) -> None:
    for N in list(levels if levels is not None else _SPACE_CACHE):
        _SPACE_CACHE.pop(N, None)
