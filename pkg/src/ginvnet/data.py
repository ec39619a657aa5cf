"""Dataset generators for polynomial regression and quadrangle areas.

Random numbers come from numpy's Philox counter-based bit generator seeded
with the dataset seed, so a (seed, counts) pair fixes every byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .invariants import benchmark_polynomial, eval_poly

GENERATOR_ID = "numpy.Philox"
DEFAULT_SEED = 444
POLY_COUNTS = (16, 480, 4800)
ROBUST_POLY_COUNTS = (160, 480, 4800)
AREA_COUNTS = (256, 256, 1024)
DEFAULT_MC_SAMPLES = 100_000
SPLITS = ("train", "val", "test")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class Split:
    inputs: np.ndarray  # (count, n, n_in)
    targets: np.ndarray  # (count,)
    exact: np.ndarray | None = None  # shoelace areas for the quadrangle task

    def __len__(self):
        return len(self.targets)


@dataclass
class Dataset:
    task: str
    seed: int
    train: Split
    val: Split
    test: Split
    meta: dict = field(default_factory=dict)

    @property
    def counts(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.val), len(self.test))

    def split(self, name: str) -> Split:
        return {"train": self.train, "val": self.val, "test": self.test}[name]


def gen_poly_dataset(poly_name: str, counts=POLY_COUNTS, seed: int = DEFAULT_SEED) -> Dataset:
    """Uniform points in ``[0, 1]^5`` labelled by a benchmark polynomial."""
    poly = benchmark_polynomial(poly_name)
    rng = make_rng(seed)
    splits = []
    for c in counts:
        x = rng.random((c, poly.n_vars))
        splits.append(Split(x[:, :, None], eval_poly(poly, x)))
    return Dataset("poly", seed, *splits, meta={"poly": poly_name})


@dataclass(frozen=True)
class QuadrangleConfig:
    center_low: float = 0.6
    center_high: float = 1.4
    radius_low: float = 0.2
    radius_high: float = 0.5
    disturbance: float = 0.1
    min_radius: float = 1e-3
    max_tries: int = 1000


def is_convex(q: np.ndarray) -> bool:
    """All turns share one sign and no vertex repeats."""
    q = np.asarray(q, dtype=np.float64)
    e = np.roll(q, -1, axis=0) - q
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    if np.any(np.all(np.abs(e) == 0, axis=1)):
        return False
    return bool(np.all(cross > 0) or np.all(cross < 0))


def gen_quadrangle(rng: np.random.Generator, cfg: QuadrangleConfig = QuadrangleConfig(),
                   n: int = 4) -> np.ndarray:
    """One convex polygon with ``n`` counter-clockwise vertices, shape ``(n, 2)``."""
    for _ in range(cfg.max_tries):
        center = rng.uniform(cfg.center_low, cfg.center_high, size=2)
        angles = rng.uniform(0.0, 2 * math.pi / n, size=n) + 2 * math.pi * np.arange(n) / n
        r = rng.uniform(cfg.radius_low, cfg.radius_high)
        radii = np.maximum(r + rng.uniform(-cfg.disturbance, cfg.disturbance, size=n), cfg.min_radius)
        q = np.abs(center + radii[:, None] * np.stack([np.cos(angles), np.sin(angles)], axis=1))
        if is_convex(q):
            return q
    raise RuntimeError(f"no convex quadrangle after {cfg.max_tries} tries")


def shoelace_area(q) -> float:
    q = np.asarray(q, dtype=np.float64)
    x, y = q[:, 0], q[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def mc_area(q, samples: int, rng: np.random.Generator) -> float:
    """Hit fraction of uniform points in the bounding box, times the box area."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    q = np.asarray(q, dtype=np.float64)
    lo, hi = q.min(axis=0), q.max(axis=0)
    u = rng.random((2, samples))
    px = lo[0] + (hi[0] - lo[0]) * u[0]
    py = lo[1] + (hi[1] - lo[1]) * u[1]
    # inside when every edge sees the point on the same side (either orientation)
    pos = np.ones(samples, dtype=bool)
    neg = np.ones(samples, dtype=bool)
    for (ax, ay), (bx, by) in zip(q, np.roll(q, -1, axis=0)):
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        pos &= cross >= 0
        neg &= cross <= 0
    return float(np.count_nonzero(pos | neg) / samples * np.prod(hi - lo))


def gen_area_dataset(counts=AREA_COUNTS, seed: int = DEFAULT_SEED,
                     mc_samples: int = DEFAULT_MC_SAMPLES,
                     cfg: QuadrangleConfig = QuadrangleConfig()) -> Dataset:
    rng = make_rng(seed)
    splits = []
    for c in counts:
        quads = np.stack([gen_quadrangle(rng, cfg) for _ in range(c)]) if c else np.zeros((0, 4, 2))
        mc = np.array([mc_area(q, mc_samples, rng) for q in quads])
        exact = np.array([shoelace_area(q) for q in quads])
        splits.append(Split(quads, mc, exact))
    return Dataset("area", seed, *splits, meta={"mc_samples": mc_samples})


# .ginvds files ----------------------------------------------------------------
_MAGIC = "GINVDS1"


def save_dataset(ds: Dataset, path) -> None:
    """One JSON header line, then float64 little-endian records per split.

    Each record is the flattened input followed by the target (and the
    shoelace area for the quadrangle task).
    """
    first = ds.train
    header = {
        "format": _MAGIC,
        "task": ds.task,
        "seed": ds.seed,
        "counts": list(ds.counts),
        "generator": GENERATOR_ID,
        "item_shape": list(first.inputs.shape[1:]),
        "has_exact": first.exact is not None,
        "meta": ds.meta,
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for name in SPLITS:
            s = ds.split(name)
            cols = [s.inputs.reshape(len(s), -1), s.targets[:, None]]
            if s.exact is not None:
                cols.append(s.exact[:, None])
            fh.write(np.ascontiguousarray(np.hstack(cols), dtype="<f8").tobytes())


def load_dataset(path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != _MAGIC:
            raise ValueError(f"{path}: not a .ginvds file")
        body = fh.read()
    shape = tuple(header["item_shape"])
    width = int(np.prod(shape)) + 1 + int(header["has_exact"])
    rows = np.frombuffer(body, dtype="<f8").reshape(-1, width)
    splits, start = [], 0
    for c in header["counts"]:
        block = rows[start:start + c]
        start += c
        splits.append(Split(
            block[:, :-1 - int(header["has_exact"])].reshape((c,) + shape).copy(),
            block[:, width - 1 - int(header["has_exact"])].copy(),
            block[:, -1].copy() if header["has_exact"] else None,
        ))
    return Dataset(header["task"], header["seed"], *splits, meta=header.get("meta", {}))


def export_csv(ds: Dataset, split: str = "train") -> str:
    s = ds.split(split)
    flat = s.inputs.reshape(len(s), -1)
    cols = [f"input_{i}" for i in range(flat.shape[1])] + ["target"]
    if s.exact is not None:
        cols.append("shoelace_target")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for k in range(len(s)):
        row = [repr(float(v)) for v in flat[k]] + [repr(float(s.targets[k]))]
        if s.exact is not None:
            row.append(repr(float(s.exact[k])))
        w.writerow(row)
    return buf.getvalue()
