"""Boundary-free sampling of typical Poisson-Voronoi cells.

Sites are drawn from a homogeneous Poisson process on growing balls around
the origin and consumed in increasing distance. Once every site within R is
processed and the farthest cell vertex sits at distance rho with
2 * rho <= R, no unseen site can cut the cell, so the result is distributed
exactly as the cell of the origin in the infinite process.

Each cell owns an independent substream keyed by (seed, cell_index), so a
batch is bit-reproducible no matter how it is split across workers.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import _kernel as _k
from .geometry import CellConstructionError, ConvexPolytope, _from_flat

MAX_GROWTH_ROUNDS = 30
_SEED_MASK = (1 << 64) - 1

CSV_COLUMNS = ("cell_id", "volume", "surface_area", "faces", "vertices")


def default_initial_radius(lam):
    """Two mean inter-site spacings; one or two growth rounds then suffice."""
    return 2.0 * float(lam) ** (-1.0 / 3.0)


@dataclass(frozen=True)
class SimulationConfig:
    """Batch description: intensity, size, seed and region-growth tuning."""

    lam: float
    n_cells: int
    seed: int = 0
    initial_radius: float | None = None
    growth_factor: float = 1.5
    threads: int | None = None

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ValueError("intensity must be positive")
        if self.n_cells < 1:
            raise ValueError("need at least one cell")
        if self.growth_factor <= 1.0:
            raise ValueError("growth factor must exceed 1")
        if self.initial_radius is not None and self.initial_radius <= 0.0:
            raise ValueError("initial radius must be positive")

    def resolved_radius(self):
        if self.initial_radius is not None:
            return float(self.initial_radius)
        return default_initial_radius(self.lam)


@dataclass
class FeatureSample:
    """Columnar features of n independent typical cells at one intensity."""

    lam: float
    seed: int
    volumes: np.ndarray
    surface_areas: np.ndarray
    face_counts: np.ndarray
    vertex_counts: np.ndarray

    def __post_init__(self):
        self.volumes = np.asarray(self.volumes, dtype=float)
        self.surface_areas = np.asarray(self.surface_areas, dtype=float)
        self.face_counts = np.asarray(self.face_counts, dtype=np.int64)
        self.vertex_counts = np.asarray(self.vertex_counts, dtype=np.int64)
        ns = {len(self.volumes), len(self.surface_areas),
              len(self.face_counts), len(self.vertex_counts)}
        if len(ns) != 1:
            raise ValueError("feature columns must share one length")
        if self.volumes.size:
            if np.min(self.volumes) <= 0.0 or np.min(self.surface_areas) <= 0.0:
                raise ValueError("cell volumes and surface areas must be positive")
            if np.min(self.face_counts) < 4:
                raise ValueError("a bounded cell has at least 4 faces")

    @property
    def n(self):
        return len(self.volumes)

    def column(self, feature):
        """Feature column by name: volume, surface or faces."""
        try:
            return {"volume": self.volumes,
                    "surface": self.surface_areas,
                    "faces": self.face_counts}[feature]
        except KeyError:
            raise ValueError(f"unknown feature {feature!r}") from None

    def header(self):
        return {"lambda": self.lam, "seed": self.seed, "n": self.n,
                "software_version": __version__}

    def to_csv(self, path):
        """Write one header comment line, the column names, then the rows."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# " + json.dumps(self.header()) + "\n")
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for i in range(self.n):
                fh.write(f"{i},{self.volumes[i]:.17g},{self.surface_areas[i]:.17g},"
                         f"{self.face_counts[i]},{self.vertex_counts[i]}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
            if not first.startswith("#"):
                raise ValueError("missing dataset header line")
            head = json.loads(first[1:])
            names = fh.readline().strip().split(",")
            if tuple(names) != CSV_COLUMNS:
                raise ValueError(f"unexpected columns {names}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[0] != head["n"]:
            raise ValueError("row count does not match header")
        return cls(lam=float(head["lambda"]), seed=int(head["seed"]),
                   volumes=data[:, 1], surface_areas=data[:, 2],
                   face_counts=data[:, 3].astype(np.int64),
                   vertex_counts=data[:, 4].astype(np.int64))

    def to_json(self, path):
        doc = self.header()
        doc["columns"] = {
            "cell_id": list(range(self.n)),
            "volume": self.volumes.tolist(),
            "surface_area": self.surface_areas.tolist(),
            "faces": self.face_counts.tolist(),
            "vertices": self.vertex_counts.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        cols = doc["columns"]
        return cls(lam=float(doc["lambda"]), seed=int(doc["seed"]),
                   volumes=np.array(cols["volume"], dtype=float),
                   surface_areas=np.array(cols["surface_area"], dtype=float),
                   face_counts=np.array(cols["faces"], dtype=np.int64),
                   vertex_counts=np.array(cols["vertices"], dtype=np.int64))

    @classmethod
    def read(cls, path):
        """Load a dataset, sniffing CSV vs JSON from the first byte."""
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.read(1)
        return cls.from_json(path) if first == "{" else cls.from_csv(path)


def cell_rng(seed, cell_index):
    """Independent substream for one cell of a batch."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(seed & _SEED_MASK, int(cell_index))))


def sample_poisson_shell(lam, r_in, r_out, rng):
    """Homogeneous Poisson points on the shell r_in <= r < r_out.

    The count is Poisson with mean lam * (4/3) pi (r_out^3 - r_in^3);
    radii come from the inverse CDF on r^3 and directions are uniform on
    the sphere.
    """
    if not 0.0 <= r_in <= r_out:
        raise ValueError("need 0 <= r_in <= r_out")
    mean = lam * (4.0 / 3.0) * np.pi * (r_out ** 3 - r_in ** 3)
    n = rng.poisson(mean)
    if n == 0:
        return np.empty((0, 3))
    r3 = r_in ** 3 + rng.random(n) * (r_out ** 3 - r_in ** 3)
    radii = np.cbrt(r3)
    direc = rng.standard_normal((n, 3))
    norms = np.sqrt(np.einsum("ij,ij->i", direc, direc))
    direc /= np.maximum(norms, 1e-300)[:, None]
    return radii[:, None] * direc


class _CellBuilder:
    """Reusable double buffers plus the shell-growth driving loop."""

    def __init__(self):
        self.a = _k.alloc_buffers()
        self.b = _k.alloc_buffers()

    def build(self, lam, rng, initial_radius, growth_factor,
              min_radius=0.0, early_stop=True):
        """Grow the sampling ball until the cell is provably final.

        Each round restarts from a fresh seed cube of half-width R and
        re-clips every site inside the ball of radius R, so the result
        only depends on the final region. min_radius forces extra growth
        before the first build attempt (used by the security-radius
        audit). Returns (nv, nf, in_a, region_radius).
        """
        radius = initial_radius
        points = sample_poisson_shell(lam, 0.0, radius, rng)
        for _ in range(MAX_GROWTH_ROUNDS):
            if radius >= min_radius:
                dists = np.sqrt(np.einsum("ij,ij->i", points, points))
                order = np.argsort(dists, kind="stable")
                status, nv, nf, in_a, _rho = _k.build_cell(
                    points[order], dists[order], radius,
                    self.a[0], self.a[1], self.a[2],
                    self.b[0], self.b[1], self.b[2],
                    _k.ON_PLANE_EPS, early_stop)
                if status == _k.BUILD_OK:
                    return nv, nf, in_a, radius
                if status < 0:
                    from .geometry import _raise_status

                    _raise_status(status)
            grown = radius * growth_factor
            points = np.concatenate(
                [points, sample_poisson_shell(lam, radius, grown, rng)])
            radius = grown
        raise CellConstructionError(
            f"cell not final after {MAX_GROWTH_ROUNDS} growth rounds")

    def features(self, nv, nf, in_a):
        verts, fv, fl = self.a if in_a else self.b
        vol, area = _k.measure(verts, nv, fv, fl, nf, 0.0, 0.0, 0.0)
        return vol, area, nf, nv

    def polytope(self, nv, nf, in_a):
        verts, fv, fl = self.a if in_a else self.b
        return _from_flat(verts, nv, fv, fl, nf, np.zeros(3))


def typical_cell(lam, rng, initial_radius=None, growth_factor=1.5) -> ConvexPolytope:
    """One typical cell: the Voronoi cell of the origin added to the process.

    The construction is exact (free of boundary effects): the region grows
    until the security-radius rule proves no unseen site can matter.
    """
    if lam <= 0.0:
        raise ValueError("intensity must be positive")
    builder = _CellBuilder()
    r0 = default_initial_radius(lam) if initial_radius is None else initial_radius
    nv, nf, in_a, _ = builder.build(lam, rng, r0, growth_factor)
    return builder.polytope(nv, nf, in_a)


def typical_cell_length_1d(lam, rng):
    """Length of the origin's cell for a 1D Poisson process of intensity lam.

    Half the gap to the nearest site on each side; each half-gap is
    exponential with rate 2 * lam.
    """
    if lam <= 0.0:
        raise ValueError("intensity must be positive")
    return 0.5 * (rng.exponential(1.0 / lam) + rng.exponential(1.0 / lam))


def sample_lengths_1d(lam, n, rng):
    """Vectorized draw of n independent 1D typical-cell lengths."""
    if lam <= 0.0:
        raise ValueError("intensity must be positive")
    return 0.5 * (rng.exponential(1.0 / lam, n) + rng.exponential(1.0 / lam, n))


def _simulate_range(lam, seed, start, stop, initial_radius, growth_factor):
    """Worker: cells [start, stop) of the batch keyed by (seed, index)."""
    n = stop - start
    vols = np.empty(n)
    areas = np.empty(n)
    nfs = np.empty(n, np.int64)
    nvs = np.empty(n, np.int64)
    builder = _CellBuilder()
    for i in range(n):
        rng = cell_rng(seed, start + i)
        nv, nf, in_a, _ = builder.build(lam, rng, initial_radius, growth_factor)
        vols[i], areas[i], nfs[i], nvs[i] = builder.features(nv, nf, in_a)
    return vols, areas, nfs, nvs


def resolve_threads(threads=None):
    """Explicit argument, then VORONOI_THREADS, then machine parallelism."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("VORONOI_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def simulate_batch(cfg: SimulationConfig) -> FeatureSample:
    """Measure cfg.n_cells independent typical cells.

    Deterministic for a given seed: per-cell substreams make serial and
    parallel runs produce identical columns.
    """
    n = cfg.n_cells
    workers = min(resolve_threads(cfg.threads), n)
    r0 = cfg.resolved_radius()
    if workers <= 1:
        parts = [_simulate_range(cfg.lam, cfg.seed, 0, n, r0, cfg.growth_factor)]
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_simulate_range, cfg.lam, cfg.seed,
                            int(bounds[w]), int(bounds[w + 1]),
                            r0, cfg.growth_factor)
                for w in range(workers) if bounds[w + 1] > bounds[w]
            ]
            parts = [f.result() for f in futures]
    return FeatureSample(
        lam=cfg.lam,
        seed=cfg.seed,
        volumes=np.concatenate([p[0] for p in parts]),
        surface_areas=np.concatenate([p[1] for p in parts]),
        face_counts=np.concatenate([p[2] for p in parts]),
        vertex_counts=np.concatenate([p[3] for p in parts]),
    )
