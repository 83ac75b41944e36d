"""Block height fields with seeded, reproducible generation.

Two flavors: lab-style terrain parameterized by rugosity R_g (cell std =
0.125*R_g m, zero mean) and RL training terrain parameterized by sigma in cm
(mean 0.20 m).  Cells are square, 10 cm by default.

RNG streams: every generator call builds its own ``np.random.default_rng``
from ``np.random.SeedSequence(seed, spawn_key=(STREAM,))`` so that terrain
draws never interact with other modules' randomness.  Identical arguments
give bit-identical fields on every platform.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, TerrainBoundsError

_TERRAIN_STREAM = 17  # stream tag for terrain draws
_SCHEDULE_STREAM = 23  # stream tag for sigma redraws

DEFAULT_CELL_SIZE = 0.10
RUGOSITY_STD_M_PER_RG = 0.125  # cell-height std in metres per unit rugosity


@dataclass(frozen=True)
class HeightField:
    """Immutable grid of cell heights (row-major, metres)."""

    cell_size: float
    n_rows: int
    n_cols: int
    heights: np.ndarray  # shape (n_rows * n_cols,)
    origin: tuple[float, float] = (0.0, 0.0)
    rugosity: float = 0.0
    seed: int = 0

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=float)
        if h.size != self.n_rows * self.n_cols:
            raise ConfigurationError("heights length must equal n_rows * n_cols")
        if not np.all(np.isfinite(h)):
            raise ConfigurationError("heights must be finite")
        if self.cell_size <= 0:
            raise ConfigurationError("cell_size must be positive")
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "_grid", h.reshape(self.n_rows, self.n_cols))

    @property
    def width(self) -> float:
        """Extent along x (columns)."""
        return self.n_cols * self.cell_size

    @property
    def length(self) -> float:
        """Extent along y (rows)."""
        return self.n_rows * self.cell_size

    def to_json(self) -> str:
        doc = {
            "cell_size": self.cell_size,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "origin": list(self.origin),
            "seed": self.seed,
            "rugosity": self.rugosity,
            "heights": self.heights.tolist(),
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "HeightField":
        doc = json.loads(text)
        return HeightField(
            cell_size=doc["cell_size"],
            n_rows=doc["n_rows"],
            n_cols=doc["n_cols"],
            heights=np.asarray(doc["heights"], dtype=float),
            origin=tuple(doc["origin"]),
            rugosity=doc.get("rugosity", 0.0),
            seed=doc.get("seed", 0),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "height_m"])
        grid = self._grid
        for i in range(self.n_rows):
            for j in range(self.n_cols):
                w.writerow([i, j, repr(float(grid[i, j]))])
        return buf.getvalue()


def _dims(width: float, length: float, cell_size: float) -> tuple[int, int]:
    n_cols = int(math.ceil(width / cell_size))
    n_rows = int(math.ceil(length / cell_size))
    return n_rows, n_cols


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_TERRAIN_STREAM,)))


def generate_block_terrain(
    rugosity: float,
    width: float = 10.0,
    length: float = 3.0,
    seed: int = 0,
    cell_size: float = DEFAULT_CELL_SIZE,
) -> HeightField:
    """Lab-style terrain: zero-mean cell heights with std 0.125*R_g metres."""
    if rugosity < 0:
        raise ConfigurationError("rugosity must be >= 0")
    if width < 0.5 or length < 0.5:
        raise ConfigurationError("terrain must be at least 0.5 m on each side")
    n_rows, n_cols = _dims(width, length, cell_size)
    std = RUGOSITY_STD_M_PER_RG * rugosity
    if std == 0.0:
        heights = np.zeros(n_rows * n_cols)
    else:
        heights = _rng(seed).normal(0.0, std, size=n_rows * n_cols)
    return HeightField(
        cell_size=cell_size,
        n_rows=n_rows,
        n_cols=n_cols,
        heights=heights,
        rugosity=rugosity,
        seed=seed,
    )


def generate_rl_terrain(
    sigma_cm: float,
    width: float = 10.0,
    length: float = 3.0,
    seed: int = 0,
    cell_size: float = DEFAULT_CELL_SIZE,
) -> HeightField:
    """Training terrain: cell heights N(0.20 m, (sigma_cm/100)^2)."""
    if not 0.0 <= sigma_cm <= 12.0:
        raise ConfigurationError("sigma must lie in [0, 12] cm")
    if width < 0.5 or length < 0.5:
        raise ConfigurationError("terrain must be at least 0.5 m on each side")
    n_rows, n_cols = _dims(width, length, cell_size)
    if sigma_cm == 0.0:
        heights = np.full(n_rows * n_cols, 0.20)
    else:
        heights = _rng(seed).normal(0.20, sigma_cm / 100.0, size=n_rows * n_cols)
    return HeightField(
        cell_size=cell_size,
        n_rows=n_rows,
        n_cols=n_cols,
        heights=heights,
        seed=seed,
    )


def generate_flat_terrain(
    width: float = 10.0, length: float = 3.0, cell_size: float = DEFAULT_CELL_SIZE
) -> HeightField:
    return generate_block_terrain(0.0, width, length, seed=0, cell_size=cell_size)


def height_at(field: HeightField, x, y):
    """Piecewise-constant lookup; a point on a cell edge belongs to the
    higher-index cell (floor convention).  Accepts arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    j = np.floor((x - field.origin[0]) / field.cell_size).astype(int)
    i = np.floor((y - field.origin[1]) / field.cell_size).astype(int)
    bad = (i < 0) | (i >= field.n_rows) | (j < 0) | (j >= field.n_cols)
    if np.any(bad):
        raise TerrainBoundsError(f"query outside height field bounds")
    return field._grid[i, j]


def resample_schedule(
    step_counter: int,
    rng: np.random.Generator,
    every: int = 16,
    sigma_range: tuple[float, float] = (2.0, 8.0),
) -> Optional[float]:
    """Return a fresh sigma (cm) at every `every`-th step, else None."""
    if every < 1:
        raise ConfigurationError("resample period must be >= 1")
    if step_counter % every != 0:
        return None
    lo, hi = sigma_range
    return float(rng.uniform(lo, hi))


def schedule_rng(seed: int) -> np.random.Generator:
    """Dedicated RNG stream for the sigma redraw schedule."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_SCHEDULE_STREAM,)))
