"""Rate coding: grayscale images to Poisson-distributed spike trains.

Each input channel fires independently per simulation step as a Bernoulli
trial with probability proportional to its pixel intensity.  For
``max_rate * dt << 1`` this is the standard discrete approximation of a
Poisson process, and it is exactly reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Identity of the bit generator behind every stochastic draw in this
# package.  Recorded in resolved configs so golden outputs stay portable.
GENERATOR_NAME = "pcg64"


def make_rng(seed) -> np.random.Generator:
    """Seeded Generator over the package-wide bit generator (PCG64)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(int(seed)))


def steps_for(t_sim: float, dt: float) -> int:
    """Number of simulation steps in ``t_sim``, requiring exact divisibility."""
    if dt <= 0 or t_sim <= 0:
        raise ConfigError(f"t_sim and dt must be positive, got t_sim={t_sim}, dt={dt}")
    n_steps = round(t_sim / dt)
    if n_steps < 1 or abs(n_steps * dt - t_sim) > 1e-9 * max(1.0, t_sim):
        raise ConfigError(f"t_sim={t_sim} ms is not an integer multiple of dt={dt} ms")
    return n_steps


@dataclass(frozen=True)
class ImageSample:
    """One grayscale input: flat pixel intensities in [0, 255] plus a class id."""

    pixels: np.ndarray
    label: int

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 1:
            raise ConfigError(f"pixels must be a flat vector, got shape {px.shape}")
        if px.size and (px.min() < 0 or px.max() > 255):
            raise ConfigError("pixel intensities must lie within [0, 255]")
        object.__setattr__(self, "pixels", px)


@dataclass(frozen=True)
class SpikeTrain:
    """Boolean spike raster for one presentation: [n_steps, n_syn].

    Immutable after generation; ``duration`` is the presentation time in ms.
    """

    spikes: np.ndarray
    dt: float
    duration: float

    @property
    def n_steps(self) -> int:
        return self.spikes.shape[0]

    @property
    def n_syn(self) -> int:
        return self.spikes.shape[1]


def encode(
    sample: ImageSample,
    t_sim: float = 350.0,
    dt: float = 0.5,
    max_rate: float = 63.75,
    rng_seed=0,
    n_syn: int | None = None,
) -> SpikeTrain:
    """Encode an image as a Bernoulli-per-step (Poisson) spike train.

    Channel j fires on each step with probability
    ``(pixel_j / 255) * max_rate * dt``, where ``max_rate`` is in Hz and
    ``dt`` in ms.  Pure function of (sample, parameters, seed).

    Args:
        sample: the image to encode.
        t_sim: presentation time in ms, an exact multiple of ``dt``.
        dt: simulation step in ms.
        max_rate: firing rate in Hz assigned to a fully bright pixel.
        rng_seed: integer seed (or a ``SeedSequence``) for the portable
            PCG64 generator.
        n_syn: expected channel count; mismatch raises ``ConfigError``.

    Returns:
        An immutable ``SpikeTrain`` of shape [t_sim/dt, len(pixels)].
    """
    n_steps = steps_for(t_sim, dt)
    if n_syn is not None and sample.pixels.size != n_syn:
        raise ConfigError(
            f"sample has {sample.pixels.size} pixels, network expects n_syn={n_syn}"
        )
    if max_rate < 0:
        raise ConfigError(f"max_rate must be non-negative, got {max_rate}")
    p_spike = max_rate * dt * 1e-3  # Hz * ms -> probability per step
    if p_spike > 1.0:
        raise ConfigError(
            f"max_rate*dt = {p_spike:.4f} > 1: more than one spike per step per channel"
        )
    prob = sample.pixels.astype(np.float64) / 255.0 * p_spike
    rng = make_rng(rng_seed)
    spikes = rng.random((n_steps, prob.size)) < prob[None, :]
    spikes.setflags(write=False)
    return SpikeTrain(spikes=spikes, dt=dt, duration=t_sim)


def expected_spike_count(pixel: float, t_sim: float, max_rate: float) -> float:
    """Analytic mean spike count of one channel over a presentation."""
    return (pixel / 255.0) * max_rate * (t_sim * 1e-3)
