"""Seeded point-cloud samplers for circles, wedges of circles and chorded circles.

Every sampler draws angles or arc positions uniformly, places the points on
the noiseless curve, then adds independent ``Normal(0, sigma)`` noise to each
Cartesian coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .errors import InputError

KINDS = ("circle", "wedge", "chorded_circle")
DEFAULT_CHORD_HEIGHTS = {1: (0.0,), 2: (-0.5, 0.5)}


def _check_common(n, sigma):
    if int(n) != n or n < 1:
        raise InputError(f"number of points must be a positive integer, got {n!r}")
    if not sigma >= 0 or not math.isfinite(sigma):
        raise InputError(f"noise sigma must be finite and >= 0, got {sigma!r}")


def _add_noise(points, sigma, rng):
    if sigma > 0:
        points = points + rng.normal(0.0, sigma, size=points.shape)
    return points


def _on_circle(radius, n, rng, center=(0.0, 0.0)):
    theta = rng.uniform(0.0, 2 * math.pi, size=n)
    return np.column_stack([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)])


def sample_circle(radius, n, sigma=0.0, rng=None):
    """``n`` points on the circle of ``radius`` about the origin, plus noise."""
    if not radius > 0:
        raise InputError(f"radius must be > 0, got {radius!r}")
    _check_common(n, sigma)
    rng = np.random.default_rng(rng)
    return _add_noise(_on_circle(radius, int(n), rng), sigma, rng)


def wedge_centers(radii):
    """Centres of externally tangent circles laid out left to right along the x-axis."""
    centers = [0.0]
    for prev, cur in zip(radii, radii[1:]):
        centers.append(centers[-1] + prev + cur)
    return [(c, 0.0) for c in centers]


def sample_wedge(radii, n, sigma=0.0, rng=None):
    """``n`` points split evenly over a chain of tangent circles.

    Component ``k`` gets ``n // len(radii)`` points, plus one for each of the
    first ``n % len(radii)`` components.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise InputError("a wedge needs at least two component circles")
    if any(not r > 0 for r in radii):
        raise InputError(f"wedge radii must be > 0, got {radii}")
    _check_common(n, sigma)
    n = int(n)
    if n < len(radii):
        raise InputError(f"{n} points cannot cover {len(radii)} wedge components")
    rng = np.random.default_rng(rng)
    base, extra = divmod(n, len(radii))
    parts = [
        _on_circle(r, base + (k < extra), rng, center=c)
        for k, (r, c) in enumerate(zip(radii, wedge_centers(radii)))
    ]
    return _add_noise(np.vstack(parts), sigma, rng)


def sample_chorded_circle(chords, n, sigma=0.0, rng=None, heights=None):
    """``n`` points uniform by length on the unit circle together with horizontal chords.

    One chord sits at ``y = 0`` and two at ``y = -1/2, 1/2`` unless
    ``heights`` says otherwise.
    """
    if chords not in (1, 2):
        raise InputError(f"chords must be 1 or 2, got {chords!r}")
    _check_common(n, sigma)
    heights = DEFAULT_CHORD_HEIGHTS[chords] if heights is None else tuple(float(h) for h in heights)
    if len(heights) != chords or any(not -1 < h < 1 for h in heights):
        raise InputError(f"need {chords} chord height(s) strictly inside (-1, 1), got {heights}")
    rng = np.random.default_rng(rng)
    half = [math.sqrt(1 - h * h) for h in heights]
    lengths = np.array([2 * math.pi] + [2 * w for w in half])
    t = rng.uniform(0.0, lengths.sum(), size=int(n))
    edges = np.cumsum(lengths)
    comp = np.searchsorted(edges, t, side="right")
    comp = np.minimum(comp, len(lengths) - 1)
    offset = t - np.r_[0.0, edges[:-1]][comp]
    pts = np.empty((int(n), 2))
    on_circle = comp == 0
    pts[on_circle, 0] = np.cos(offset[on_circle])
    pts[on_circle, 1] = np.sin(offset[on_circle])
    for k, (h, w) in enumerate(zip(heights, half), start=1):
        sel = comp == k
        pts[sel, 0] = offset[sel] - w
        pts[sel, 1] = h
    return _add_noise(pts, sigma, rng)


@dataclass
class SpaceSpec:
    """One sampled space: its kind, geometry, noise level and group label."""

    kind: str
    radii: list = field(default_factory=lambda: [1.0])
    chords: int = 0
    noise_sigma: float = 0.0
    label: str = ""
    chord_heights: list = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown space kind {self.kind!r}; expected one of {KINDS}")
        if isinstance(self.radii, (int, float)):
            self.radii = [self.radii]
        self.radii = [float(r) for r in self.radii]
        if self.kind == "circle" and len(self.radii) != 1:
            raise InputError("a circle takes exactly one radius")
        if self.kind == "wedge" and len(self.radii) < 2:
            raise InputError("a wedge needs at least two component radii")
        if self.kind == "chorded_circle":
            if self.radii != [1.0]:
                raise InputError("chorded circles are unit circles")
            if self.chords not in (1, 2):
                raise InputError("a chorded circle has 1 or 2 chords")
        if not self.label:
            self.label = self.default_label()

    def default_label(self):
        if self.kind == "chorded_circle":
            return f"circle+{self.chords}chord"
        radii = ",".join(f"{r:g}" for r in self.radii)
        return f"{self.kind}[{radii}]"

    def sample(self, n, rng=None, sigma=None):
        sigma = self.noise_sigma if sigma is None else sigma
        if self.kind == "circle":
            return sample_circle(self.radii[0], n, sigma, rng)
        if self.kind == "wedge":
            return sample_wedge(self.radii, n, sigma, rng)
        return sample_chorded_circle(self.chords, n, sigma, rng, self.chord_heights)

    def diameter(self):
        """Diameter of the noiseless space."""
        if self.kind == "circle":
            return 2 * self.radii[0]
        if self.kind == "wedge":
            return 2 * sum(self.radii)
        return 2.0


@dataclass
class TrialPlan:
    specs: list
    clouds_per_group: int = 20
    points_per_cloud: list = None
    seed: int = 0

    def __post_init__(self):
        if len(self.specs) < 2:
            raise InputError("a trial plan needs at least two spaces")
        labels = [s.label for s in self.specs]
        if len(set(labels)) != len(labels):
            raise InputError(f"space labels must be distinct: {labels}")
        if self.clouds_per_group < 2:
            raise InputError("at least two clouds per group are required")
        if self.points_per_cloud is None:
            raise InputError("points_per_cloud is required")
        if isinstance(self.points_per_cloud, int):
            self.points_per_cloud = [self.points_per_cloud] * len(self.specs)
        self.points_per_cloud = [int(k) for k in self.points_per_cloud]
        if len(self.points_per_cloud) != len(self.specs):
            raise InputError("need one points_per_cloud entry per space")
        if any(k < 1 for k in self.points_per_cloud):
            raise InputError("points_per_cloud entries must be positive")


def sample_trial(plan: TrialPlan, trial_index=0, sigma=None):
    """Point clouds for one trial as ``{label: [cloud, ...]}``.

    Cloud ``c`` of group ``g`` comes from the substream keyed by
    ``(seed, trial_index, g, c)``, so generation order never matters.
    """
    out = {}
    for g, (spec, k) in enumerate(zip(plan.specs, plan.points_per_cloud)):
        out[spec.label] = [
            spec.sample(k, substream(plan.seed, trial_index, g, c), sigma)
            for c in range(plan.clouds_per_group)
        ]
    return out
