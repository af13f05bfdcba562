"""Pick-target geometry: exclusion zones and largest-minimum-distance selection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist, squareform

BAND_WIDTH = 0.15
EDGE_MARGIN = 0.05


@dataclass(frozen=True)
class ObjectScene:
    """Object centres on a rectangular tray.

    ``tray`` and ``band`` are ``(xmin, ymin, xmax, ymax)``. Objects inside the
    band (boundary included) or closer than ``edge_margin`` to any tray side
    are never picked.
    """

    centers: np.ndarray
    tray: tuple
    band: tuple | None = None
    edge_margin: float = 0.0

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "tray", tuple(float(v) for v in self.tray))
        if self.band is not None:
            object.__setattr__(self, "band", tuple(float(v) for v in self.band))
        x0, y0, x1, y1 = self.tray
        if not (x1 > x0 and y1 > y0):
            raise ValueError("tray must have positive extent")
        if self.edge_margin < 0:
            raise ValueError("edge_margin must be >= 0")
        inside = (centers[:, 0] >= x0) & (centers[:, 0] <= x1) & (centers[:, 1] >= y0) & (centers[:, 1] <= y1)
        if not np.all(inside):
            raise ValueError("object centres must lie within the tray")

    @classmethod
    def with_defaults(cls, centers, tray, band_width: float = BAND_WIDTH, edge_margin: float = EDGE_MARGIN):
        """Central vertical band of ``band_width`` x tray width; margin as a fraction of the diagonal."""
        x0, y0, x1, y1 = (float(v) for v in tray)
        cx, half = 0.5 * (x0 + x1), 0.5 * band_width * (x1 - x0)
        band = (cx - half, y0, cx + half, y1) if band_width > 0 else None
        return cls(centers, tray, band, edge_margin * float(np.hypot(x1 - x0, y1 - y0)))

    def transformed(self, scale: float, shift) -> ObjectScene:
        """Uniformly scale (about the origin) then translate everything."""
        sx, sy = shift

        def rect(r):
            return None if r is None else (r[0] * scale + sx, r[1] * scale + sy, r[2] * scale + sx, r[3] * scale + sy)

        return ObjectScene(self.centers * scale + np.array([sx, sy]), rect(self.tray), rect(self.band), self.edge_margin * scale)

    def eligible(self) -> np.ndarray:
        x, y = self.centers[:, 0], self.centers[:, 1]
        x0, y0, x1, y1 = self.tray
        ok = np.minimum.reduce([x - x0, x1 - x, y - y0, y1 - y]) >= self.edge_margin
        if self.band is not None:
            bx0, by0, bx1, by1 = self.band
            ok &= ~((x >= bx0) & (x <= bx1) & (y >= by0) & (y <= by1))
        return ok

    def to_json(self) -> str:
        return json.dumps(
            {
                "centers": self.centers.tolist(),
                "tray": list(self.tray),
                "band": None if self.band is None else list(self.band),
                "edge_margin": self.edge_margin,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> ObjectScene:
        data = json.loads(text)
        if "centers" not in data or "tray" not in data:
            raise ValueError("scene needs 'centers' and 'tray'")
        if "band" in data or "edge_margin" in data:
            return cls(data["centers"], data["tray"], data.get("band"), float(data.get("edge_margin", 0.0)))
        return cls.with_defaults(data["centers"], data["tray"])

    @classmethod
    def load(cls, path) -> ObjectScene:
        return cls.from_json(Path(path).read_text())


def select_target(scene: ObjectScene) -> int | None:
    """Index of the eligible object farthest from its nearest eligible neighbour.

    Returns None when nothing is eligible; a lone eligible object is returned
    directly. Ties go to the lowest index.
    """
    idx = np.flatnonzero(scene.eligible())
    if idx.size == 0:
        return None
    if idx.size == 1:
        return int(idx[0])
    d = squareform(pdist(scene.centers[idx]))
    np.fill_diagonal(d, np.inf)
    return int(idx[np.argmax(d.min(axis=1))])
