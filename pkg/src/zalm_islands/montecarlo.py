"""Monte Carlo sampler for the heralding layer.

Works in the post-interference picture: after the 50-50 idler combination,
the 4 * n_islands detector modes (island x polarization x branch sign) are
independent thermal modes with mean photon number G - 1.  Each pulse draws a
Bose-Einstein count per detector mode (inverse-CDF on a uniform), thins it
binomially through the detector efficiency, and classifies the reading into
the photon-number-resolving alphabet {0, 1, multi}.  A polarization shows a
valid pattern on an island when exactly one of its two branch detectors
reads 1 and the other reads 0.  Every surviving singleton carries a fair
which-source label; a herald is true when the chosen H and V detections came
from different sources.

Determinism contract: a run is keyed by (params, n_pulses, seed).  Pulses
are processed in fixed-size batches, batch ``i`` drawing from an independent
counter-based substream ``Philox(key=seed).jumped(i)``, and every batch
draws its variates in one fixed order (thermal uniforms, thinning binomials,
source labels, H-selection uniforms, V-selection uniforms) regardless of
herald mode or selection policy.  Tallies that do not depend on the
selection (for example "at least one candidate") are therefore bitwise
identical across policies under a shared seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .analytics import herald_prob_island, prop_bell_probs, build_gaussian_blocks
from .model import (
    HeraldEvent,
    HeraldMode,
    HeraldTruth,
    SourceParams,
    Sign,
)

__all__ = [
    "SelectionPolicy",
    "DetectorCounts",
    "MCEstimate",
    "sample_pulse",
    "enumerate_heralds",
    "select_herald",
    "estimate_true_herald_prob",
    "estimate_pair_rate",
    "BATCH_SIZE",
]

# Pulses per substream batch.  Internal constant: changing it changes the
# variate layout and therefore the bitwise tallies.
BATCH_SIZE = 16384

_POL_H, _POL_V = 0, 1
_SGN_PLUS, _SGN_MINUS = 0, 1


class SelectionPolicy(Enum):
    """How to pick one herald when several islands qualify in one pulse."""

    UNIFORM_RANDOM = "uniform-random"
    LOWEST_INDEX = "lowest-index"

    @classmethod
    def parse(cls, text: str) -> "SelectionPolicy":
        key = text.strip().lower().replace("_", "-")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown selection policy {text!r}")


@dataclass(frozen=True, eq=False)
class DetectorCounts:
    """PNR readings of one pulse.

    ``classes[i, p, s]`` is the detector class (0, 1, or 2 meaning multi) at
    island ``i``, polarization ``p`` (0 = H, 1 = V), branch sign ``s``
    (0 = plus, 1 = minus).  ``sources[i, p, s]`` is 1 or 2 where the class
    is exactly 1 (which Sagnac the surviving photon came from) and 0
    elsewhere.
    """

    classes: np.ndarray
    sources: np.ndarray

    def __post_init__(self) -> None:
        if self.classes.ndim != 3 or self.classes.shape[1:] != (2, 2):
            raise ValueError(f"classes must have shape (n_islands, 2, 2), got {self.classes.shape}")
        if self.sources.shape != self.classes.shape:
            raise ValueError("sources must match classes in shape")
        if self.classes.min(initial=0) < 0 or self.classes.max(initial=0) > 2:
            raise ValueError("detector classes must be 0, 1, or 2 (multi)")
        self.classes.flags.writeable = False
        self.sources.flags.writeable = False

    @property
    def n_islands(self) -> int:
        return self.classes.shape[0]


@dataclass(frozen=True)
class MCEstimate:
    """One Monte Carlo estimate with its binomial standard error.

    ``sub_counts`` holds the integer tallies behind the estimate; equality
    of two MCEstimates is exact, which is how reruns prove bitwise
    determinism.
    """

    value: float
    std_error: float
    n_pulses: int
    seed: int
    sub_counts: Mapping[str, int]

    @staticmethod
    def binomial_error(fraction: float, n: int) -> float:
        return math.sqrt(max(fraction * (1.0 - fraction), 0.0) / n)


def _substream(seed: int, batch_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(batch_index))


def _draw_batch(
    params: SourceParams, rng: np.random.Generator, n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Draw one batch in the fixed variate order.

    Returns (classes, sources, u_h, u_v) with classes/sources shaped
    (n, n_islands, 2, 2) and the selection uniforms shaped (n,).
    """
    shape = (n, params.n_islands, 2, 2)
    g = params.gain_minus_one
    # (1) thermal counts via inverse CDF, P(count >= k) = theta^k
    u = 1.0 - rng.random(shape)
    if g > 0.0:
        theta = g / (1.0 + g)
        counts = np.floor(np.log(u) / math.log(theta)).astype(np.int64)
    else:
        counts = np.zeros(shape, dtype=np.int64)
    # (2) detector-efficiency thinning
    survivors = rng.binomial(counts, params.eta_t)
    classes = np.minimum(survivors, 2).astype(np.int8)
    # (3) fair which-source labels, meaningful only where exactly one survived
    labels = rng.integers(1, 3, size=shape, dtype=np.int8)
    sources = np.where(classes == 1, labels, 0).astype(np.int8)
    # (4) selection uniforms, drawn whether or not any policy consumes them
    u_h = rng.random(n)
    u_v = rng.random(n)
    return classes, sources, u_h, u_v


def _pattern_arrays(
    classes: np.ndarray, sources: np.ndarray, pol: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(valid, sign, source) per (pulse, island) for one polarization."""
    c = classes[:, :, pol, :]
    plus_one = (c[..., _SGN_PLUS] == 1) & (c[..., _SGN_MINUS] == 0)
    minus_one = (c[..., _SGN_PLUS] == 0) & (c[..., _SGN_MINUS] == 1)
    valid = plus_one | minus_one
    sign = np.where(plus_one, _SGN_PLUS, _SGN_MINUS).astype(np.int8)
    source = np.where(
        plus_one, sources[:, :, pol, _SGN_PLUS], sources[:, :, pol, _SGN_MINUS]
    ).astype(np.int8)
    return valid, sign, source


def _select_columns(
    mask: np.ndarray, u: np.ndarray, policy: SelectionPolicy
) -> np.ndarray:
    """Column index selected per row among True entries of ``mask``.

    Rows without any True entry return garbage and must be masked by the
    caller.  UNIFORM_RANDOM picks the floor(u * count)-th valid column.
    """
    if policy is SelectionPolicy.LOWEST_INDEX:
        return np.argmax(mask, axis=1)
    cnt = mask.sum(axis=1)
    k = np.minimum((u * cnt).astype(np.int64), np.maximum(cnt - 1, 0))
    cum = np.cumsum(mask, axis=1)
    return np.argmax(cum > k[:, None], axis=1)


@dataclass
class _Tally:
    pulses: int = 0
    heralded: int = 0
    true: int = 0
    false: int = 0
    psi_plus: int = 0
    psi_minus: int = 0
    same_island: int = 0
    cross_island: int = 0
    strict_clean: int = 0

    def as_mapping(self) -> Mapping[str, int]:
        return MappingProxyType(
            {
                "pulses": self.pulses,
                "heralded": self.heralded,
                "true": self.true,
                "false": self.false,
                "psi_plus": self.psi_plus,
                "psi_minus": self.psi_minus,
                "same_island": self.same_island,
                "cross_island": self.cross_island,
                "strict_clean": self.strict_clean,
            }
        )


def _accumulate_batch(
    tally: _Tally,
    params: SourceParams,
    classes: np.ndarray,
    sources: np.ndarray,
    u_h: np.ndarray,
    u_v: np.ndarray,
    policy: SelectionPolicy,
) -> None:
    n = classes.shape[0]
    valid_h, sign_h, src_h = _pattern_arrays(classes, sources, _POL_H)
    valid_v, sign_v, src_v = _pattern_arrays(classes, sources, _POL_V)
    if params.herald_mode is HeraldMode.SAME_ISLAND:
        both = valid_h & valid_v
        heralded = both.any(axis=1)
        h_idx = _select_columns(both, u_h, policy)
        v_idx = h_idx
    else:
        heralded = valid_h.any(axis=1) & valid_v.any(axis=1)
        h_idx = _select_columns(valid_h, u_h, policy)
        v_idx = _select_columns(valid_v, u_v, policy)
    rows = np.arange(n)
    hs = sign_h[rows, h_idx]
    vs = sign_v[rows, v_idx]
    h_src = src_h[rows, h_idx]
    v_src = src_v[rows, v_idx]
    true_mask = heralded & (h_src != v_src)
    psi_plus_mask = heralded & (hs == vs)
    same_mask = heralded & (h_idx == v_idx)
    fired = (classes != 0).sum(axis=(1, 2, 3))
    strict_mask = heralded & (fired == 2)

    n_her = int(heralded.sum())
    n_true = int(true_mask.sum())
    n_psi_plus = int(psi_plus_mask.sum())
    n_same = int(same_mask.sum())
    tally.pulses += n
    tally.heralded += n_her
    tally.true += n_true
    tally.false += n_her - n_true
    tally.psi_plus += n_psi_plus
    tally.psi_minus += n_her - n_psi_plus
    tally.same_island += n_same
    tally.cross_island += n_her - n_same
    tally.strict_clean += int(strict_mask.sum())


def _run_tally(
    params: SourceParams, n_pulses: int, seed: int, policy: SelectionPolicy
) -> _Tally:
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    tally = _Tally()
    batch_index = 0
    remaining = n_pulses
    while remaining > 0:
        n = min(BATCH_SIZE, remaining)
        rng = _substream(seed, batch_index)
        classes, sources, u_h, u_v = _draw_batch(params, rng, n)
        _accumulate_batch(tally, params, classes, sources, u_h, u_v, policy)
        remaining -= n
        batch_index += 1
    return tally


def sample_pulse(params: SourceParams, rng: np.random.Generator) -> DetectorCounts:
    """Draw the detector readings of a single pulse from ``rng``."""
    classes, sources, _, _ = _draw_batch(params, rng, 1)
    return DetectorCounts(classes=classes[0].copy(), sources=sources[0].copy())


def enumerate_heralds(counts: DetectorCounts, herald_mode: HeraldMode) -> tuple[HeraldEvent, ...]:
    """All herald candidates of one pulse, in deterministic order.

    Same-island mode lists islands with valid H and V patterns in island
    order; the SPCI modes list every (H island, V island) pair
    lexicographically.  Truth labels come from the recorded source labels.
    """
    n = counts.n_islands
    valids: dict[int, list[tuple[int, Sign, int]]] = {_POL_H: [], _POL_V: []}
    for pol in (_POL_H, _POL_V):
        for i in range(n):
            plus, minus = counts.classes[i, pol, _SGN_PLUS], counts.classes[i, pol, _SGN_MINUS]
            if plus == 1 and minus == 0:
                valids[pol].append((i, Sign.PLUS, int(counts.sources[i, pol, _SGN_PLUS])))
            elif plus == 0 and minus == 1:
                valids[pol].append((i, Sign.MINUS, int(counts.sources[i, pol, _SGN_MINUS])))
    events = []
    for hi, hsign, hsrc in valids[_POL_H]:
        for vi, vsign, vsrc in valids[_POL_V]:
            if herald_mode is HeraldMode.SAME_ISLAND and hi != vi:
                continue
            truth = HeraldTruth.TRUE if hsrc != vsrc else HeraldTruth.FALSE
            events.append(
                HeraldEvent(h_island=hi, v_island=vi, h_sign=hsign, v_sign=vsign, truth=truth)
            )
    return tuple(events)


def select_herald(
    candidates: tuple[HeraldEvent, ...],
    policy: SelectionPolicy = SelectionPolicy.UNIFORM_RANDOM,
    rng: np.random.Generator | None = None,
) -> HeraldEvent | None:
    """Pick one herald among simultaneous candidates (None when empty)."""
    if not candidates:
        return None
    if policy is SelectionPolicy.LOWEST_INDEX or len(candidates) == 1:
        return candidates[0]
    if rng is None:
        raise ValueError("UNIFORM_RANDOM selection requires an rng")
    return candidates[int(rng.integers(len(candidates)))]


def estimate_true_herald_prob(
    params: SourceParams,
    n_pulses: int,
    seed: int,
    policy: SelectionPolicy = SelectionPolicy.UNIFORM_RANDOM,
) -> MCEstimate:
    """Monte Carlo estimate of the per-pulse TRUE herald probability.

    Counts physical coincidences under the configured herald mode (the two
    SPCI modes share the same physical candidate set, so they tally
    identically here; they differ only in which closed form they are
    compared against).
    """
    tally = _run_tally(params, n_pulses, seed, policy)
    frac = tally.true / tally.pulses
    return MCEstimate(
        value=frac,
        std_error=MCEstimate.binomial_error(frac, tally.pulses),
        n_pulses=n_pulses,
        seed=seed,
        sub_counts=tally.as_mapping(),
    )


def estimate_pair_rate(
    params: SourceParams,
    n_pulses: int,
    seed: int,
    policy: SelectionPolicy = SelectionPolicy.UNIFORM_RANDOM,
) -> MCEstimate:
    """Hybrid pair-rate estimate in pairs per second.

    The herald fraction comes from sampling; the per-herald matched-Bell
    probability ``s`` is attached analytically.  Under SPCI_PAPER the herald
    fraction is sampled in that mode's own independence convention (N^2
    independent island-pair trials per pulse, drawn as one binomial); the
    physical tally is reported alongside in ``sub_counts`` either way.
    """
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    p_island = herald_prob_island(params.gain_minus_one, params.eta_t)
    tally = _Tally()
    heralded_independent = 0
    batch_index = 0
    remaining = n_pulses
    spci = params.herald_mode is not HeraldMode.SAME_ISLAND
    n_pairs = params.n_islands * params.n_islands
    while remaining > 0:
        n = min(BATCH_SIZE, remaining)
        rng = _substream(seed, batch_index)
        classes, sources, u_h, u_v = _draw_batch(params, rng, n)
        _accumulate_batch(tally, params, classes, sources, u_h, u_v, policy)
        if spci:
            pair_hits = rng.binomial(n_pairs, p_island, size=n)
            heralded_independent += int((pair_hits > 0).sum())
        remaining -= n
        batch_index += 1
    if params.herald_mode is HeraldMode.SPCI_PAPER:
        herald_fraction = heralded_independent / tally.pulses
    else:
        herald_fraction = tally.heralded / tally.pulses
    blocks = build_gaussian_blocks(params.gain_minus_one, params.eta_t, params.eta_r)
    s, _ = prop_bell_probs(blocks, params.eta_r)
    scale = params.pump_rate * s
    counts = dict(tally.as_mapping())
    if spci:
        counts["heralded_independent"] = heralded_independent
    return MCEstimate(
        value=scale * herald_fraction,
        std_error=scale * MCEstimate.binomial_error(herald_fraction, tally.pulses),
        n_pulses=n_pulses,
        seed=seed,
        sub_counts=MappingProxyType(counts),
    )
