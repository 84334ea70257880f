"""Domain types for an islands-based ZALM entanglement source.

The source pumps two Sagnac SPDC arrangements whose phase-matching function
splits into spectral islands.  Each island emits, per pump pulse and per
polarization, a two-mode squeezed vacuum with mean pair number G - 1.  The
idlers of both Sagnacs interfere on a 50-50 beam splitter, pass polarizing
splitters, and meet photon-number-resolving detectors with lumped efficiency
``eta_t``; a herald is the pattern "exactly one H detector and exactly one V
detector each saw exactly one photon".  Heralded signal pairs then cross a
channel of transmissivity ``eta_r`` to the receivers.

This module holds the shared vocabulary: source parameters, herald
bookkeeping (branch signs, island indices, true/false origin), the heralded
Bell class, Bell-diagonal delivered states, and the scalar metric bundle.
Island indices are 0-based everywhere in code; user-facing text renders them
1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

__all__ = [
    "ZalmError",
    "ParameterValidationError",
    "DegenerateStateError",
    "ModeNotFoundError",
    "CutoffTooSmallError",
    "UnachievableTargetError",
    "Sign",
    "BellClass",
    "HeraldMode",
    "HeraldTruth",
    "HeraldPattern",
    "SourceParams",
    "HeraldEvent",
    "BellDiagonal",
    "MetricBundle",
    "classify_herald",
    "validate_params",
    "PROBABILITY_ATOL",
]

# Absolute slack granted to quantities that are probabilities by construction.
PROBABILITY_ATOL = 1e-12


class ZalmError(Exception):
    """Base class for every error raised by this package."""


class ParameterValidationError(ZalmError, ValueError):
    """One or more source parameters violate their allowed range.

    Carries the complete list of offending field names so a caller (or a CLI
    user) sees every problem at once instead of fixing them one at a time.
    """

    def __init__(self, violations: Iterable[tuple[str, str]]):
        items = tuple(violations)
        self.fields = tuple(name for name, _ in items)
        self.messages = tuple(msg for _, msg in items)
        detail = "; ".join(f"{name}: {msg}" for name, msg in items)
        super().__init__(f"invalid source parameters ({detail})")


class DegenerateStateError(ZalmError, ValueError):
    """A conditional state was requested where no herald can occur."""


class ModeNotFoundError(ZalmError, KeyError):
    """A mode label is absent from a Fock-space state."""


class CutoffTooSmallError(ZalmError, ValueError):
    """The requested Fock cutoff truncates more weight than the tail budget."""


class UnachievableTargetError(ZalmError, ValueError):
    """A solver target lies outside the reachable range on its bracket."""


class Sign(Enum):
    """Which interferometer output branch a detection occurred in.

    PLUS is the symmetric (sum) combination of the two Sagnac idlers, MINUS
    the antisymmetric (difference) combination.
    """

    PLUS = "+"
    MINUS = "-"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class BellClass(Enum):
    """Bell class heralded by a detection pattern (always a psi state)."""

    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"


class HeraldMode(Enum):
    """Which herald-accounting convention the island layer uses.

    SAME_ISLAND
        Only coincidences where the H and V detections share one island count.
    SPCI_PAPER
        Same-plus-cross-island accounting with the island pairs treated as
        independent trials (N^2 trials at the per-pair coincidence rate).
    SPCI_EXACT
        Same-plus-cross-island accounting that factorizes exactly: a herald
        needs at least one island with a valid H pattern and at least one
        island with a valid V pattern.
    """

    SAME_ISLAND = "same-island"
    SPCI_PAPER = "spci-paper"
    SPCI_EXACT = "spci-exact"

    @classmethod
    def parse(cls, text: str) -> "HeraldMode":
        key = text.strip().lower().replace("_", "-")
        aliases = {
            "same-island": cls.SAME_ISLAND,
            "same": cls.SAME_ISLAND,
            "spci-paper": cls.SPCI_PAPER,
            "paper": cls.SPCI_PAPER,
            "spci-exact": cls.SPCI_EXACT,
            "exact": cls.SPCI_EXACT,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ParameterValidationError(
                [("herald_mode", f"unknown herald mode {text!r}")]
            ) from None


class HeraldTruth(Enum):
    """Origin label of a heralded coincidence.

    TRUE means the H and V photons came from different Sagnac sources (the
    which-path erasure succeeded and a usable pair exists); FALSE means both
    idlers came from the same source.  UNKNOWN marks events produced by
    layers that never learn the origin.
    """

    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


def classify_herald(h_sign: Sign, v_sign: Sign) -> BellClass:
    """Bell class implied by the branch signs of the H and V detections.

    Equal signs herald the symmetric (psi_plus) state, opposite signs the
    antisymmetric (psi_minus) state.
    """
    return BellClass.PSI_PLUS if h_sign == v_sign else BellClass.PSI_MINUS


class HeraldPattern(Enum):
    """The four sign patterns a valid herald can take, as (H sign, V sign)."""

    PLUS_H_PLUS_V = (Sign.PLUS, Sign.PLUS)
    PLUS_H_MINUS_V = (Sign.PLUS, Sign.MINUS)
    MINUS_H_PLUS_V = (Sign.MINUS, Sign.PLUS)
    MINUS_H_MINUS_V = (Sign.MINUS, Sign.MINUS)

    @property
    def h_sign(self) -> Sign:
        return self.value[0]

    @property
    def v_sign(self) -> Sign:
        return self.value[1]

    @property
    def bell_class(self) -> BellClass:
        return classify_herald(*self.value)

    @classmethod
    def parse(cls, text: str) -> "HeraldPattern":
        key = text.strip().lower()
        aliases = {
            "+h+v": cls.PLUS_H_PLUS_V,
            "+h-v": cls.PLUS_H_MINUS_V,
            "-h+v": cls.MINUS_H_PLUS_V,
            "-h-v": cls.MINUS_H_MINUS_V,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(
                f"unknown herald pattern {text!r}; expected one of {sorted(aliases)}"
            ) from None

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"{self.h_sign.value}H{self.v_sign.value}V"


def _collect_param_violations(
    gain_minus_one: float,
    eta_t: float,
    eta_r: float,
    n_islands: int,
    pump_rate: float,
) -> list[tuple[str, str]]:
    bad: list[tuple[str, str]] = []
    if not (math.isfinite(gain_minus_one) and gain_minus_one >= 0.0):
        bad.append(("gain_minus_one", "must be finite and >= 0"))
    if not (math.isfinite(eta_t) and 0.0 < eta_t <= 1.0):
        bad.append(("eta_t", "must lie in (0, 1]"))
    if not (math.isfinite(eta_r) and 0.0 < eta_r <= 1.0):
        bad.append(("eta_r", "must lie in (0, 1]"))
    if not (isinstance(n_islands, int) and not isinstance(n_islands, bool) and n_islands >= 1):
        bad.append(("n_islands", "must be an integer >= 1"))
    if not (math.isfinite(pump_rate) and pump_rate > 0.0):
        bad.append(("pump_rate", "must be finite and > 0"))
    return bad


@dataclass(frozen=True, slots=True)
class SourceParams:
    """Complete parameterization of one source configuration.

    ``gain_minus_one`` is the mean signal-idler pair number per island, per
    polarization, per pump pulse (G - 1 >= 0).  ``eta_t`` lumps every loss
    between the sources and the heralding detectors, ``eta_r`` every loss
    between the heralded signals and the receivers.  ``pump_rate`` is in
    pulses per second.
    """

    gain_minus_one: float
    eta_t: float = 1.0
    eta_r: float = 1.0
    n_islands: int = 1
    pump_rate: float = 1.0
    herald_mode: HeraldMode = HeraldMode.SPCI_PAPER

    def __post_init__(self) -> None:
        bad = _collect_param_violations(
            self.gain_minus_one, self.eta_t, self.eta_r, self.n_islands, self.pump_rate
        )
        if not isinstance(self.herald_mode, HeraldMode):
            bad.append(("herald_mode", "must be a HeraldMode"))
        if bad:
            raise ParameterValidationError(bad)


def validate_params(
    gain_minus_one: float,
    eta_t: float = 1.0,
    eta_r: float = 1.0,
    n_islands: int = 1,
    pump_rate: float = 1.0,
    herald_mode: HeraldMode | str = HeraldMode.SPCI_PAPER,
) -> SourceParams:
    """Coerce raw values into a SourceParams, reporting every violation.

    Accepts strings for numeric fields and the herald mode (the CLI feeds
    this directly); raises ParameterValidationError listing all offending
    fields at once.
    """
    bad: list[tuple[str, str]] = []

    def as_float(name: str, value) -> float:
        try:
            return float(value)
        except (TypeError, ValueError):
            bad.append((name, f"not a number: {value!r}"))
            return math.nan

    def as_int(name: str, value) -> int:
        try:
            out = int(str(value), 10) if not isinstance(value, (int, float)) else int(value)
            if isinstance(value, float) and value != out:
                raise ValueError
            return out
        except (TypeError, ValueError):
            bad.append((name, f"not an integer: {value!r}"))
            return 0

    g = as_float("gain_minus_one", gain_minus_one)
    et = as_float("eta_t", eta_t)
    er = as_float("eta_r", eta_r)
    n = as_int("n_islands", n_islands)
    rp = as_float("pump_rate", pump_rate)
    mode = herald_mode
    if not isinstance(mode, HeraldMode):
        try:
            mode = HeraldMode.parse(str(herald_mode))
        except ParameterValidationError as err:
            bad.append(("herald_mode", err.messages[0]))
            mode = HeraldMode.SPCI_PAPER
    bad.extend(_collect_param_violations(g, et, er, n, rp))
    if bad:
        # Deduplicate by field, keeping first message for each.
        seen: dict[str, str] = {}
        for name, msg in bad:
            seen.setdefault(name, msg)
        raise ParameterValidationError(seen.items())
    return SourceParams(
        gain_minus_one=g, eta_t=et, eta_r=er, n_islands=n, pump_rate=rp, herald_mode=mode
    )


@dataclass(frozen=True, slots=True)
class HeraldEvent:
    """One accepted herald: which islands and branches fired, and the truth.

    ``h_island`` and ``v_island`` are 0-based island indices of the H and V
    detections (equal for a same-island coincidence).  ``truth`` is UNKNOWN
    unless the producer knows the photon origins (the Monte Carlo layer does).
    """

    h_island: int
    v_island: int
    h_sign: Sign
    v_sign: Sign
    truth: HeraldTruth = HeraldTruth.UNKNOWN

    def __post_init__(self) -> None:
        if self.h_island < 0 or self.v_island < 0:
            raise ParameterValidationError(
                [("island", "island indices are 0-based and must be >= 0")]
            )

    @property
    def bell_class(self) -> BellClass:
        return classify_herald(self.h_sign, self.v_sign)

    @property
    def pattern(self) -> HeraldPattern:
        return HeraldPattern((self.h_sign, self.v_sign))

    @property
    def same_island(self) -> bool:
        return self.h_island == self.v_island

    def display(self) -> str:
        """Human-facing rendering with 1-based island indices."""
        return (
            f"H{self.h_sign.value} island {self.h_island + 1}, "
            f"V{self.v_sign.value} island {self.v_island + 1} -> {self.bell_class.value}"
        )


@dataclass(frozen=True, slots=True)
class BellDiagonal:
    """A Bell-diagonal two-qubit state with its heralded class singled out.

    Construction accepts unnormalized nonnegative weights and normalizes
    them; renormalizing an already-normalized state is a no-op up to float
    rounding.  The two phi weights must agree (the partial BSM never
    distinguishes them).
    """

    p_psi_plus: float
    p_psi_minus: float
    p_phi_plus: float
    p_phi_minus: float
    herald: BellClass = BellClass.PSI_MINUS

    def __post_init__(self) -> None:
        raw = (self.p_psi_plus, self.p_psi_minus, self.p_phi_plus, self.p_phi_minus)
        if any(not math.isfinite(p) for p in raw):
            raise DegenerateStateError("Bell weights must be finite")
        if any(p < -PROBABILITY_ATOL for p in raw):
            raise DegenerateStateError(f"Bell weights must be nonnegative, got {raw}")
        total = sum(raw)
        if total <= 0.0:
            raise DegenerateStateError("all Bell weights are zero; no state to normalize")
        scale = max(raw)
        if abs(self.p_phi_plus - self.p_phi_minus) > 1e-9 * scale + PROBABILITY_ATOL:
            raise DegenerateStateError(
                "the two phi weights must be equal "
                f"(got {self.p_phi_plus!r} vs {self.p_phi_minus!r})"
            )
        normalized = tuple(max(p, 0.0) / total for p in raw)
        object.__setattr__(self, "p_psi_plus", normalized[0])
        object.__setattr__(self, "p_psi_minus", normalized[1])
        object.__setattr__(self, "p_phi_plus", normalized[2])
        object.__setattr__(self, "p_phi_minus", normalized[3])

    @property
    def probabilities(self) -> tuple[float, float, float, float]:
        """(psi_plus, psi_minus, phi_plus, phi_minus), summing to 1."""
        return (self.p_psi_plus, self.p_psi_minus, self.p_phi_plus, self.p_phi_minus)

    @property
    def matched(self) -> float:
        """Probability of the class the herald announced (the fidelity)."""
        return self.p_psi_plus if self.herald is BellClass.PSI_PLUS else self.p_psi_minus


@dataclass(frozen=True, slots=True)
class MetricBundle:
    """Every scalar figure of merit for one source configuration.

    All probability fields lie in [0, 1].  ``p_herald_island`` counts all
    four sign patterns on one island; ``p_herald_any`` is the per-pulse
    herald probability across islands under the configured mode (both true
    and false heralds).  ``s`` and ``e`` are the unnormalized matched and
    mismatched Bell projections of the delivered state, ``p_bell = s + 3e``
    their total, ``p_loadable`` the probability that both receivers can load
    a qubit.  ``fraction = p_bell / p_loadable``, ``fidelity = s / (s + 3e)``
    (NaN when no herald can occur), ``purity`` is the delivered two-qubit
    purity, and ``rate = pump_rate * p_herald_any * s`` in pairs per second.
    """

    p_herald_island: float
    p_herald_any: float
    p_true: float
    n_s: float
    n_s_prime: float
    s: float
    e: float
    p_bell: float
    p_loadable: float
    fraction: float
    fidelity: float
    purity: float
    rate: float

    FIELDS = (
        "p_herald_island",
        "p_herald_any",
        "p_true",
        "n_s",
        "n_s_prime",
        "s",
        "e",
        "p_bell",
        "p_loadable",
        "fraction",
        "fidelity",
        "purity",
        "rate",
    )

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.FIELDS}
