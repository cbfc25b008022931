"""Synthetic surface models with known bare-earth truth.

Noise is drawn from numpy's PCG64 bit generator seeded with ``seed`` and is
added to the surface only, never to the truth terrain.

Scene files are plain ``key = value`` lines; ``#`` starts a comment::

    rows = 64
    cols = 64
    base = constant 100
    feature = box 28 28 8 8 5
    feature = spike 10 50 3
    noise_sigma = 0.0
    seed = 0

``base`` is one of ``constant z``, ``ramp zx zy`` (meters per cell along
columns and rows) or ``sinusoid amplitude period`` (period in cells).
``box r0 c0 h w height`` covers rows r0..r0+h-1 and columns c0..c0+w-1.
Where features overlap, the tallest one sets the surface.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import FeatureOutOfBounds, SpecParseError
from .raster import Grid


@dataclass(frozen=True)
class Constant:
    z: float


@dataclass(frozen=True)
class Ramp:
    zx: float
    zy: float


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float
    period: float


@dataclass(frozen=True)
class Box:
    r0: int
    c0: int
    h: int
    w: int
    height: float


@dataclass(frozen=True)
class Spike:
    r: int
    c: int
    height: float


Base = Union[Constant, Ramp, Sinusoid]
Feature = Union[Box, Spike]


@dataclass(frozen=True)
class SceneSpec:
    rows: int
    cols: int
    base: Base = Constant(0.0)
    features: tuple[Feature, ...] = field(default_factory=tuple)
    noise_sigma: float = 0.0
    seed: int = 0
    cell_size: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"scene must have at least one cell, got {self.rows}x{self.cols}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be non-negative, got {self.noise_sigma}")


def base_surface(base: Base, rows: int, cols: int) -> np.ndarray:
    r, c = np.mgrid[0:rows, 0:cols].astype(np.float64)
    if isinstance(base, Constant):
        return np.full((rows, cols), float(base.z))
    if isinstance(base, Ramp):
        return base.zx * c + base.zy * r
    if isinstance(base, Sinusoid):
        k = 2.0 * np.pi / base.period
        return base.amplitude * np.sin(k * c) * np.sin(k * r)
    raise TypeError(f"unknown base surface {base!r}")


def _footprint(feature: Feature, rows: int, cols: int) -> tuple[slice, slice]:
    if isinstance(feature, Box):
        r0, c0, r1, c1 = feature.r0, feature.c0, feature.r0 + feature.h, feature.c0 + feature.w
        if feature.h < 1 or feature.w < 1:
            raise FeatureOutOfBounds(f"{feature} has an empty footprint")
    elif isinstance(feature, Spike):
        r0, c0, r1, c1 = feature.r, feature.c, feature.r + 1, feature.c + 1
    else:
        raise TypeError(f"unknown feature {feature!r}")
    if r0 < 0 or c0 < 0 or r1 > rows or c1 > cols:
        raise FeatureOutOfBounds(f"{feature} does not fit in a {rows}x{cols} grid")
    return slice(r0, r1), slice(c0, c1)


def generate(spec: SceneSpec) -> tuple[Grid, Grid, np.ndarray]:
    """Return ``(dsm, truth_dtm, truth_mask)``; mask is 0 on features, 1 elsewhere."""
    truth = base_surface(spec.base, spec.rows, spec.cols)
    raised = np.zeros_like(truth)
    mask = np.ones_like(truth)
    for feature in spec.features:
        rs, cs = _footprint(feature, spec.rows, spec.cols)
        raised[rs, cs] = np.maximum(raised[rs, cs], feature.height)
        mask[rs, cs] = 0.0
    dsm = truth + raised
    if spec.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        dsm = dsm + rng.normal(0.0, spec.noise_sigma, size=dsm.shape)
    return (
        Grid(dsm, spec.cell_size),
        Grid(truth, spec.cell_size),
        mask,
    )


_BASES = {"constant": (Constant, 1), "ramp": (Ramp, 2), "sinusoid": (Sinusoid, 2)}
_FEATURES = {"box": (Box, (int, int, int, int, float)), "spike": (Spike, (int, int, float))}


def _parse_numbers(words, kinds, lineno):
    if len(words) != len(kinds):
        raise SpecParseError(f"line {lineno}: expected {len(kinds)} numbers, got {len(words)}")
    try:
        return [kind(word) for kind, word in zip(kinds, words)]
    except ValueError as exc:
        raise SpecParseError(f"line {lineno}: {exc}") from None


def parse_scene(text: str) -> SceneSpec:
    fields: dict = {"features": []}
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        words = value.split()
        if key != "feature":
            if key in seen:
                raise SpecParseError(f"line {lineno}: duplicate key {key!r}")
            seen.add(key)
        if key in ("rows", "cols", "seed"):
            (fields[key],) = _parse_numbers(words, (int,), lineno)
        elif key in ("noise_sigma", "cell_size"):
            (fields[key],) = _parse_numbers(words, (float,), lineno)
        elif key == "base":
            if not words or words[0] not in _BASES:
                raise SpecParseError(f"line {lineno}: unknown base {value!r}")
            cls, nargs = _BASES[words[0]]
            fields["base"] = cls(*_parse_numbers(words[1:], (float,) * nargs, lineno))
        elif key == "feature":
            if not words or words[0] not in _FEATURES:
                raise SpecParseError(f"line {lineno}: unknown feature {value!r}")
            cls, kinds = _FEATURES[words[0]]
            fields["features"].append(cls(*_parse_numbers(words[1:], kinds, lineno)))
        else:
            raise SpecParseError(f"line {lineno}: unknown key {key!r}")
    for required in ("rows", "cols"):
        if required not in fields:
            raise SpecParseError(f"missing required key {required!r}")
    try:
        return SceneSpec(**fields)
    except ValueError as exc:
        raise SpecParseError(str(exc)) from None


def format_scene(spec: SceneSpec) -> str:
    """Inverse of :func:`parse_scene`."""
    base = spec.base
    if isinstance(base, Constant):
        base_line = f"constant {base.z!r}"
    elif isinstance(base, Ramp):
        base_line = f"ramp {base.zx!r} {base.zy!r}"
    else:
        base_line = f"sinusoid {base.amplitude!r} {base.period!r}"
    lines = [
        f"rows = {spec.rows}",
        f"cols = {spec.cols}",
        f"cell_size = {spec.cell_size!r}",
        f"base = {base_line}",
    ]
    for ft in spec.features:
        if isinstance(ft, Box):
            lines.append(f"feature = box {ft.r0} {ft.c0} {ft.h} {ft.w} {ft.height!r}")
        else:
            lines.append(f"feature = spike {ft.r} {ft.c} {ft.height!r}")
    lines += [f"noise_sigma = {spec.noise_sigma!r}", f"seed = {spec.seed}"]
    return "\n".join(lines) + "\n"


def random_scene(seed: int, max_size: int = 96) -> SceneSpec:
    """A reproducible mixed scene (base, boxes, spikes, optional noise)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = int(rng.integers(1, max_size + 1)) if rng.random() < 0.1 else int(rng.integers(8, max_size + 1))
    cols = int(rng.integers(8, max_size + 1))
    kind = rng.integers(3)
    if kind == 0:
        base: Base = Constant(float(rng.uniform(0, 500)))
    elif kind == 1:
        base = Ramp(float(rng.uniform(-0.05, 0.05)), float(rng.uniform(-0.05, 0.05)))
    else:
        base = Sinusoid(float(rng.uniform(0.5, 5.0)), float(rng.uniform(16, 64)))
    features: list[Feature] = []
    for _ in range(int(rng.integers(0, 5))):
        h = int(rng.integers(1, max(2, rows // 4) + 1))
        w = int(rng.integers(1, max(2, cols // 4) + 1))
        h, w = min(h, rows), min(w, cols)
        r0 = int(rng.integers(0, rows - h + 1))
        c0 = int(rng.integers(0, cols - w + 1))
        features.append(Box(r0, c0, h, w, float(rng.uniform(1, 20))))
    for _ in range(int(rng.integers(0, 4))):
        features.append(
            Spike(int(rng.integers(0, rows)), int(rng.integers(0, cols)), float(rng.uniform(1, 10)))
        )
    sigma = float(rng.choice([0.0, 0.01, 0.05]))
    return SceneSpec(rows, cols, base, tuple(features), sigma, seed)
