"""Frozen high-precision reference values shipped with the package.

The Mittag-Leffler table was produced once by the extended-precision
oracle in ``tests/oracles.py`` (``tests/tools/make_ml_reference.py``) and
is read back here so that ``fracdiff verify`` needs no arbitrary-precision
library at run time.
"""

from __future__ import annotations

import csv
from functools import lru_cache
from importlib import resources

import numpy as np


@lru_cache(maxsize=None)
def load_ml_reference() -> dict[float, tuple[np.ndarray, np.ndarray]]:
    """``{alpha: (x, E_alpha(-x))}`` from the bundled table."""
    rows: dict[float, list[tuple[float, float]]] = {}
    with resources.files("fracdiff").joinpath("data/ml_reference.csv").open() as fh:
        for rec in csv.DictReader(fh):
            rows.setdefault(float(rec["alpha"]), []).append((float(rec["x"]), float(rec["E"])))
    return {a: (np.array([r[0] for r in v]), np.array([r[1] for r in v])) for a, v in rows.items()}
