"""Sample generators for the two case-study uncertainties, plus CSV sample I/O.

Every sampler is a pure function of ``(params, count, seed)``: a fresh
``numpy.random.Generator`` is built per call, so repeated calls with the same
arguments return bit-identical arrays.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

KMH_TO_MS = 1000.0 / 3600.0


class InvalidIntervalError(ValueError):
    pass


class DegenerateTruncationError(ValueError):
    pass


class InvalidMixtureError(ValueError):
    pass


class SampleFileError(ValueError):
    pass


@dataclass(frozen=True)
class TruncGauss:
    """Gaussian ``N(mu, sigma)`` restricted to ``[lo, hi]``."""

    mu: float
    sigma: float
    lo: float
    hi: float

    def check(self) -> None:
        if not self.lo < self.hi:
            raise InvalidIntervalError(f"lo={self.lo} must be < hi={self.hi}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.sigma == 0:
            if not self.lo <= self.mu <= self.hi:
                raise DegenerateTruncationError(
                    f"point mass at {self.mu} lies outside [{self.lo}, {self.hi}]")
            return
        if _std_interval_mass(*self._std_bounds()) <= 0.0:
            raise DegenerateTruncationError(
                f"N({self.mu}, {self.sigma}) has no mass on [{self.lo}, {self.hi}]")

    def _std_bounds(self) -> tuple[float, float]:
        return (self.lo - self.mu) / self.sigma, (self.hi - self.mu) / self.sigma

    def pdf(self, x):
        """Density of the truncated distribution (used by the test oracles)."""
        x = np.asarray(x, dtype=float)
        lo_s, hi_s = self._std_bounds()
        mass = _std_interval_mass(lo_s, hi_s)
        z = (x - self.mu) / self.sigma
        dens = np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.sigma * mass)
        return np.where((x >= self.lo) & (x <= self.hi), dens, 0.0)


def _std_interval_mass(a: float, b: float) -> float:
    # evaluate in whichever tail keeps the difference away from 1 - 1
    if a > 0:
        return float(special.ndtr(-a) - special.ndtr(-b))
    return float(special.ndtr(b) - special.ndtr(a))


def _trunc_gauss(dist: TruncGauss, count: int, rng: np.random.Generator) -> np.ndarray:
    dist.check()
    if dist.sigma == 0:
        rng.random(count)  # keep stream consumption independent of sigma
        return np.full(count, float(dist.mu))
    a, b = dist._std_bounds()
    u = rng.random(count)
    # inverse CDF on the truncated interval, mirrored into the lower tail when
    # the interval sits above the mean so ndtri keeps its precision
    if a > 0:
        ca, cb = special.ndtr(-b), special.ndtr(-a)
        z = -special.ndtri(ca + u * (cb - ca))
    else:
        ca, cb = special.ndtr(a), special.ndtr(b)
        z = special.ndtri(ca + u * (cb - ca))
    x = dist.mu + dist.sigma * z
    return np.clip(x, dist.lo, dist.hi)


def sample_trunc_gauss(dist: TruncGauss, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` values from ``dist`` by inverse-CDF sampling."""
    _check_count(count)
    return _trunc_gauss(dist, count, np.random.default_rng(seed))


@dataclass(frozen=True)
class SampleSet:
    """2D state samples in meters, shape ``(count, 2)``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (count, 2), got {pts.shape}")
        if len(pts) < 1:
            raise ValueError("a SampleSet needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CaseIParams:
    """Kinematic fan: ``pos = prev_pos + (cos h, sin h) * v * dt``.

    Speed is in km/h and heading in degrees; both are converted at the
    sampler boundary.
    """

    speed: TruncGauss = TruncGauss(190.0, 5.0, 165.0, 220.0)
    heading: TruncGauss = TruncGauss(10.0, 30.0, -50.0, 70.0)
    dt: float = 1.0
    prev_pos: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class Mixture1D:
    weights: tuple[float, float]
    means: tuple[float, float]
    sigmas: tuple[float, float]

    def check(self) -> None:
        w = self.weights
        if len(w) != 2 or len(self.means) != 2 or len(self.sigmas) != 2:
            raise InvalidMixtureError("a two-component mixture needs two of each parameter")
        if not all(0.0 < wi < 1.0 for wi in w) or abs(sum(w) - 1.0) > 1e-12:
            raise InvalidMixtureError(f"mixture weights {w} must lie in (0,1) and sum to 1")
        if any(s < 0 for s in self.sigmas):
            raise InvalidMixtureError(f"mixture sigmas {self.sigmas} must be >= 0")

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        self.check()
        pick = rng.random(count) >= self.weights[0]
        z = rng.standard_normal(count)
        mu = np.where(pick, self.means[1], self.means[0])
        sd = np.where(pick, self.sigmas[1], self.sigmas[0])
        return mu + sd * z

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for wi, m, s in zip(self.weights, self.means, self.sigmas):
            out += wi * np.exp(-0.5 * ((x - m) / s) ** 2) / (math.sqrt(2 * math.pi) * s)
        return out


def _default_x_mixture() -> Mixture1D:
    return Mixture1D((0.5, 0.5), (0.0, 50.0), (4.0, 12.0))


def _default_y_mixture() -> Mixture1D:
    return Mixture1D((0.5, 0.5), (0.0, 50.0), (4.0, 12.0))


@dataclass(frozen=True)
class BimodalParams:
    """Independent two-component Gaussian mixtures for the x and y marginals."""

    x: Mixture1D = field(default_factory=_default_x_mixture)
    y: Mixture1D = field(default_factory=_default_y_mixture)


def sample_fan(params: CaseIParams, count: int, seed: int) -> SampleSet:
    """Propagate one step of the kinematic model with uncertain speed and heading."""
    _check_count(count)
    if not params.dt > 0:
        raise ValueError(f"dt must be positive, got {params.dt}")
    rng = np.random.default_rng(seed)
    v = _trunc_gauss(params.speed, count, rng) * KMH_TO_MS
    theta = np.deg2rad(_trunc_gauss(params.heading, count, rng))
    step = v * params.dt
    x0, y0 = params.prev_pos
    pts = np.column_stack([x0 + np.cos(theta) * step, y0 + np.sin(theta) * step])
    return SampleSet(pts)


def sample_bimodal(params: BimodalParams, count: int, seed: int) -> SampleSet:
    _check_count(count)
    params.x.check()
    params.y.check()
    rng = np.random.default_rng(seed)
    xs = params.x.sample(count, rng)
    ys = params.y.sample(count, rng)
    return SampleSet(np.column_stack([xs, ys]))


def _check_count(count: int) -> None:
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")


def load_samples(path) -> SampleSet:
    """Read a ``x,y`` CSV file. Parse errors name the 1-based file line."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"sample file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SampleFileError(f"{path}: empty file") from None
        if [h.strip().lower() for h in header] != ["x", "y"]:
            raise SampleFileError(f"{path}: line 1: expected header 'x,y', got {header!r}")
        pts = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            line = reader.line_num
            if len(row) != 2:
                raise SampleFileError(f"{path}: line {line}: expected 2 fields, got {len(row)}")
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                raise SampleFileError(f"{path}: line {line}: cannot parse {row!r}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise SampleFileError(f"{path}: line {line}: non-finite coordinate")
            pts.append((x, y))
    if not pts:
        raise SampleFileError(f"{path}: no data rows")
    return SampleSet(np.array(pts, dtype=float))


def save_samples(samples: SampleSet, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in samples.points:
            writer.writerow([repr(float(x)), repr(float(y))])
