"""Partitions of the unit sphere of frequency directions."""

from dataclasses import dataclass
import itertools

import numpy as np

from .._validation import ConfigError


def _icosahedron():
    g = (1 + 5 ** 0.5) / 2
    verts = []
    for a, b in itertools.product((-1, 1), repeat=2):
        verts += [(0, a, b * g), (a, b * g, 0), (b * g, 0, a)]
    verts = np.array(verts, dtype=float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    edge = np.min([np.linalg.norm(verts[0] - v) for v in verts[1:]])
    faces = [
        f for f in itertools.combinations(range(12), 3)
        if all(abs(np.linalg.norm(verts[i] - verts[j]) - edge) < 1e-9 for i, j in itertools.combinations(f, 2))
    ]
    return verts, faces


def _subdivide(verts, faces):
    verts = [tuple(v) for v in verts]
    index = {v: i for i, v in enumerate(verts)}

    def midpoint(i, j):
        m = np.array(verts[i]) + np.array(verts[j])
        m = tuple(m / np.linalg.norm(m))
        key = tuple(np.round(m, 12))
        if key not in index:
            index[key] = len(verts)
            verts.append(m)
        return index[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.array(verts), out


@dataclass(frozen=True)
class SphereBins:
    """Bins on ``S^{d-1}`` with unit-vector ``centers``; ``assign`` maps directions to bins."""

    centers: np.ndarray
    kind: str

    @property
    def dimension(self):
        return self.centers.shape[1]

    def __len__(self):
        return len(self.centers)

    @classmethod
    def points(cls):
        """``S^0 = {-1, +1}``."""
        return cls(np.array([[-1.0], [1.0]]), "points")

    @classmethod
    def arcs(cls, n=64):
        """``n`` equal arcs of the circle, bin 0 centred on angle 0."""
        ang = 2 * np.pi * np.arange(n) / n
        return cls(np.stack([np.cos(ang), np.sin(ang)], axis=1), f"arcs({n})")

    @classmethod
    def icosahedral(cls, subdivisions=1):
        """Faces of a subdivided icosahedron: 20 * 4**subdivisions near-equal-area bins."""
        verts, faces = _icosahedron()
        for _ in range(subdivisions):
            verts, faces = _subdivide(verts, faces)
        c = np.array([verts[list(f)].mean(axis=0) for f in faces])
        c /= np.linalg.norm(c, axis=1, keepdims=True)
        return cls(c, f"icosahedral({subdivisions})")

    @classmethod
    def default(cls, dim):
        """Default binning by frequency-space dimension (1, 2 or 3)."""
        if dim == 1:
            return cls.points()
        if dim == 2:
            return cls.arcs(64)
        if dim == 3:
            return cls.icosahedral(1)
        raise ConfigError(f"no sphere binning for dimension {dim}", "bins")

    def assign(self, vectors):
        """Bin index of each nonzero row of ``vectors``."""
        v = np.asarray(vectors, dtype=float)
        if v.shape[-1] != self.dimension:
            raise ConfigError("direction dimension does not match the bins", "bins")
        if self.kind == "points":
            return (v[..., 0] > 0).astype(int)
        if self.kind.startswith("arcs"):
            n = len(self)
            ang = np.arctan2(v[..., 1], v[..., 0])
            return np.floor((ang + np.pi / n) / (2 * np.pi / n)).astype(int) % n
        out = np.empty(v.shape[:-1], dtype=int)
        flat = v.reshape(-1, self.dimension)
        res = out.reshape(-1)
        for s in range(0, len(flat), 65536):
            res[s:s + 65536] = np.argmax(flat[s:s + 65536] @ self.centers.T, axis=1)
        return out

    def nearest(self, direction):
        """Bin containing a single direction."""
        d = np.asarray(direction, dtype=float)
        return int(self.assign(d[None, :] / np.linalg.norm(d))[0])
