"""Toy barrel muon-spectrometer images for prompt vs displaced multi-muon decays.

Geometry is parametric: a sector of the transverse plane holds concentric
tube layers; a tube column is an angular bin of the sector. A neutral parent
of random mass and momentum flies radially inside the sector, decays at a
class-dependent radius into massless muons (isotropic in the rest frame),
and each muon follows a circular arc in a uniform field. A tube fires where
a track crosses its layer, after Gaussian smearing across tubes. Random
background flips tubes independently. The binary layer x tube grid is then
integrated horizontally down to the output width.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from .images import EventImage, Label, pool_sum


def _default_radii() -> tuple[float, ...]:
    # three stations (inner/middle/outer) of tightly packed layers, metres
    inner = 4.95 + 0.03 * np.arange(8)
    middle = 7.00 + 0.03 * np.arange(6)
    outer = 9.50 + 0.03 * np.arange(6)
    return tuple(float(r) for r in np.concatenate([inner, middle, outer]))


@dataclass(frozen=True)
class DetectorConfig:
    n_layers: int = 20
    n_tubes: int = 333
    layer_radii: tuple[float, ...] = field(default_factory=_default_radii)
    sector_width: float = 2 * np.pi / 16
    smear_sigma: float = 0.5
    occupancy: float = 0.02
    # curvature (1/m) = bending * charge / pT (GeV)
    bending: float = 0.15
    output_cols: int = 100

    def __post_init__(self):
        object.__setattr__(self, "layer_radii", tuple(float(r) for r in self.layer_radii))
        r = np.asarray(self.layer_radii)
        if r.size != self.n_layers:
            raise ConfigurationError(f"{r.size} layer radii given for {self.n_layers} layers")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ConfigurationError("layer radii must be positive and strictly ascending")
        if not 0 <= self.occupancy < 1:
            raise ConfigurationError("occupancy must be in [0, 1)")
        if self.smear_sigma < 0 or not 0 < self.sector_width <= 2 * np.pi:
            raise ConfigurationError("invalid smearing or sector width")
        if self.n_tubes < 1 or not 1 <= self.output_cols <= self.n_tubes:
            raise ConfigurationError("need 1 <= output_cols <= n_tubes")


@dataclass(frozen=True)
class GunConfig:
    mass_range: tuple[float, float] = (0.5, 5.0)
    momentum_range: tuple[float, float] = (10.0, 50.0)
    n_muons_range: tuple[int, int] = (2, 10)
    normal_radius_cm: tuple[float, float] = (0.0, 20.0)
    anomalous_radius_cm: tuple[float, float] = (250.0, 450.0)
    # parent azimuth is uniform in +-direction_spread * sector_width / 2
    direction_spread: float = 0.5

    def __post_init__(self):
        for name in ("mass_range", "momentum_range", "n_muons_range", "normal_radius_cm", "anomalous_radius_cm"):
            lo, hi = getattr(self, name)
            object.__setattr__(self, name, (lo, hi))
            if lo > hi or lo < 0:
                raise ConfigurationError(f"{name} must be an ordered non-negative range, got {(lo, hi)}")
        if self.mass_range[0] <= 0 or self.momentum_range[0] <= 0:
            raise ConfigurationError("mass and momentum ranges must be positive")
        if self.n_muons_range[0] < 1:
            raise ConfigurationError("need at least one muon")
        if not 0 <= self.direction_spread <= 1:
            raise ConfigurationError("direction_spread must be in [0, 1]")

    def radius_range_cm(self, label: Label) -> tuple[float, float]:
        return self.normal_radius_cm if Label(label) is Label.NORMAL else self.anomalous_radius_cm


def rambo(n: int, mass: float, rng: np.random.Generator) -> np.ndarray:
    """Massless n-body phase-space momenta (E, px, py, pz) in the rest frame."""
    c = 2 * rng.random(n) - 1
    phi = 2 * np.pi * rng.random(n)
    q0 = -np.log(rng.random(n) * rng.random(n))
    s = np.sqrt(1 - c**2)
    q = np.stack([q0, q0 * s * np.cos(phi), q0 * s * np.sin(phi), q0 * c], axis=1)
    total = q.sum(axis=0)
    m_q = np.sqrt(total[0] ** 2 - total[1:] @ total[1:])
    b = -total[1:] / m_q
    x = mass / m_q
    gamma = total[0] / m_q
    a = 1 / (1 + gamma)
    bq = q[:, 1:] @ b
    out = np.empty_like(q)
    out[:, 0] = x * (gamma * q[:, 0] + bq)
    out[:, 1:] = x * (q[:, 1:] + b[None, :] * q[:, :1] + a * bq[:, None] * b[None, :])
    return out


def boost(p4: np.ndarray, beta: np.ndarray) -> np.ndarray:
    b2 = beta @ beta
    if b2 == 0:
        return p4.copy()
    gamma = 1 / np.sqrt(1 - b2)
    bp = p4[:, 1:] @ beta
    out = np.empty_like(p4)
    out[:, 0] = gamma * (p4[:, 0] + bp)
    out[:, 1:] = p4[:, 1:] + ((gamma - 1) * bp / b2 + gamma * p4[:, 0])[:, None] * beta[None, :]
    return out


def layer_crossings(vertex: np.ndarray, heading: float, curvature: float, radii: np.ndarray, step: float = 0.01) -> np.ndarray:
    """(x, y) where an arc first crosses each radius outward; NaN if never.

    The arc starts at ``vertex`` with direction angle ``heading``.
    """
    s_max = 2.0 * radii[-1]
    s = np.arange(0.0, s_max + step, step)
    if abs(curvature) < 1e-12:
        x = vertex[0] + s * np.cos(heading)
        y = vertex[1] + s * np.sin(heading)
    else:
        ang = heading + curvature * s
        x = vertex[0] + (np.sin(ang) - np.sin(heading)) / curvature
        y = vertex[1] - (np.cos(ang) - np.cos(heading)) / curvature
    rho = np.hypot(x, y)
    above = rho[None, :] >= radii[:, None]
    idx = np.argmax(above, axis=1)
    out = np.full((radii.size, 2), np.nan)
    for k, i in enumerate(idx):
        if not above[k, i] or i == 0:
            continue
        f = (radii[k] - rho[i - 1]) / (rho[i] - rho[i - 1])
        out[k] = (x[i - 1] + f * (x[i] - x[i - 1]), y[i - 1] + f * (y[i] - y[i - 1]))
    return out


def generate_hits(label: Label, detector: DetectorConfig, gun: GunConfig, rng: np.random.Generator) -> tuple[np.ndarray, dict]:
    """Binary layer x tube grid of muon hits plus background, with generator metadata."""
    mass = rng.uniform(*gun.mass_range)
    momentum = rng.uniform(*gun.momentum_range)
    n_mu = int(rng.integers(gun.n_muons_range[0], gun.n_muons_range[1] + 1))
    radius_cm = rng.uniform(*gun.radius_range_cm(label))
    half = detector.sector_width / 2
    phi0 = rng.uniform(-1, 1) * gun.direction_spread * half

    direction = np.array([np.cos(phi0), np.sin(phi0), 0.0])
    energy = np.hypot(momentum, mass)
    muons = boost(rambo(n_mu, mass, rng), direction * momentum / energy)
    charges = np.resize([1, -1], n_mu)
    rng.shuffle(charges)
    vertex = radius_cm / 100.0 * direction[:2]

    radii = np.asarray(detector.layer_radii)
    grid = np.zeros((detector.n_layers, detector.n_tubes), dtype=np.uint8)
    n_signal = 0
    for p4, q in zip(muons, charges):
        pt = np.hypot(p4[1], p4[2])
        if pt <= 0:
            continue
        curvature = detector.bending * q / pt
        pts = layer_crossings(vertex, np.arctan2(p4[2], p4[1]), curvature, radii)
        for layer, (x, y) in enumerate(pts):
            if np.isnan(x):
                continue
            phi = np.arctan2(y, x)
            col = (phi + half) / detector.sector_width * detector.n_tubes
            if detector.smear_sigma > 0:
                col += rng.normal(0.0, detector.smear_sigma)
            tube = int(np.floor(col))
            if 0 <= tube < detector.n_tubes:
                n_signal += not grid[layer, tube]
                grid[layer, tube] = 1
    if detector.occupancy > 0:
        grid |= (rng.random(grid.shape) < detector.occupancy).astype(np.uint8)
    meta = {
        "decay_radius_cm": float(radius_cm),
        "n_muons": n_mu,
        "mass_gev": float(mass),
        "momentum_gev": float(momentum),
        "parent_phi": float(phi0),
        "n_signal_hits": int(n_signal),
    }
    return grid, meta


def generate_event(label: Label, detector: DetectorConfig, gun: GunConfig, seed, source_id: str = "") -> EventImage:
    rng = np.random.default_rng(seed)
    grid, meta = generate_hits(Label(label), detector, gun, rng)
    pixels = pool_sum(grid.astype(float), (detector.n_layers, detector.output_cols))
    meta["n_hits"] = int(grid.sum())
    return EventImage(pixels, Label(label), meta, source_id)


def generate_events(label: Label, n: int, detector: DetectorConfig, gun: GunConfig, seed: int, prefix: str = "") -> list[EventImage]:
    """``n`` events with per-event seeds derived from (seed, class, index)."""
    label = Label(label)
    code = 0 if label is Label.NORMAL else 1
    prefix = prefix or label.value
    return [
        generate_event(label, detector, gun, np.random.SeedSequence([seed, code, i]), f"{prefix}_{i:05d}")
        for i in range(n)
    ]
