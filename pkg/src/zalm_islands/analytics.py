"""Closed-form performance metrics for the islands-based ZALM source.

Everything here reduces to three scalars.  ``mu = eta_t * (G - 1)`` is the
mean detected idler number per island and polarization.  ``n_s`` is the
weight scalar of the heralded signal modes before the downstream channel,

    n_s = (eta_t * (G - 1) + 1) / G,

and ``n_s_prime`` the same scalar after transmissivity ``eta_r``,

    1 / n_s_prime = eta_r / n_s + (1 - eta_r).

Both scalars sit within about 1e-3 of 1 at useful operating points, so all
formulas are evaluated in the complement variables

    eps_s  = 1 - n_s       = (1 - eta_t) * (G - 1) / G,
    delta  = 1 - n_s_prime = eta_r * eps_s / (n_s + eta_r * eps_s),

with the cubic/quartic brackets of the delivered-state projections rewritten
exactly in ``delta`` so that no term suffers catastrophic cancellation:

    3x^3 - 5x^2 + 2x  = -delta (1-delta) (1-3 delta)
    5x^4 - 6x^3 + 2x^2 = (1-delta)^2 (1-4 delta+5 delta^2)
    4x^4 - 6x^3 + 2x^2 = -2 delta (1-delta)^2 (1-2 delta)      (x = 1 - delta)

In these variables the matched-minus-mismatched gap is exactly
``s - e = eta_r^2 * n_s_prime^8 / (2 * n_s^2)`` and the lossless limits
collapse without roundoff (eta_t = 1 gives eps_s = 0 identically).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    BellClass,
    BellDiagonal,
    DegenerateStateError,
    HeraldMode,
    HeraldPattern,
    MetricBundle,
    SourceParams,
    UnachievableTargetError,
)

__all__ = [
    "GaussianBlocks",
    "bose_einstein_pmf",
    "herald_prob_island",
    "true_herald_prob",
    "herald_any_prob",
    "build_gaussian_blocks",
    "chf_conditional_signal",
    "chf_delivered_signal",
    "bsm_bell_singlet_prob",
    "bsm_loadable_prob",
    "bsm_bell_fraction",
    "prop_bell_probs",
    "prop_loadable_prob",
    "prop_bell_total",
    "bell_diagonal_state",
    "purity",
    "pair_rate",
    "metric_bundle",
    "solve_gain",
    "islands_required",
    "GAIN_BRACKET",
    "GAIN_REL_TOL",
]

# Bracket and relative tolerance for the gain solver.
GAIN_BRACKET = (1e-8, 1.0)
GAIN_REL_TOL = 1e-6

# Adjustment loops around the logarithmic island-count formula only run when
# the count is small enough for (1-p)^n to move by more than float noise.
_ISLAND_ADJUST_LIMIT = 10**6


def bose_einstein_pmf(gain_minus_one: float, m: int) -> float:
    """P(m photons) of the thermal marginal with mean ``gain_minus_one``.

    Equals (G-1)^m / G^(m+1) with G = 1 + gain_minus_one; the m = 0 case is
    well defined at zero gain (probability 1).
    """
    if m < 0:
        return 0.0
    g = float(gain_minus_one)
    big_g = 1.0 + g
    return g**m / big_g ** (m + 1)


def herald_prob_island(gain_minus_one: float, eta_t: float) -> float:
    """Per-pulse, per-island probability of a valid herald (all 4 patterns).

    With mu = eta_t * (G - 1): 4 mu^2 / (1 + mu)^6.  Each of the four sign
    patterns contributes mu^2 / (1 + mu)^6.
    """
    mu = eta_t * gain_minus_one
    return 4.0 * mu * mu / (1.0 + mu) ** 6


def true_herald_prob(p: float, n_islands: int, herald_mode: HeraldMode) -> float:
    """Per-pulse probability of a TRUE herald across islands.

    ``p`` is the per-island herald probability (all four patterns).  True
    and false heralds are equiprobable, hence the overall factor 1/2:

    - SAME_ISLAND: (1 - (1-p)^N) / 2
    - SPCI_PAPER:  (1 - (1-p)^(N^2)) / 2, treating the N^2 island pairs as
      independent trials at rate p
    - SPCI_EXACT:  ((1 - (1-q)^N)^2) / 2 with q = sqrt(p), factorizing the
      independent per-island H-validity and V-validity events exactly
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"per-island herald probability must be in [0, 1], got {p!r}")
    n = int(n_islands)
    if n < 1:
        raise ValueError("n_islands must be >= 1")
    if herald_mode is HeraldMode.SAME_ISLAND:
        return (1.0 - (1.0 - p) ** n) / 2.0
    if herald_mode is HeraldMode.SPCI_PAPER:
        return (1.0 - (1.0 - p) ** (n * n)) / 2.0
    q = math.sqrt(p)
    hit = 1.0 - (1.0 - q) ** n
    return hit * hit / 2.0


def herald_any_prob(p: float, n_islands: int, herald_mode: HeraldMode) -> float:
    """Per-pulse probability of any herald (true or false): twice the true rate."""
    return 2.0 * true_herald_prob(p, n_islands, herald_mode)


_SIGN_PATTERN = np.array(
    [
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, -1.0],
    ]
)


@dataclass(frozen=True, eq=False)
class GaussianBlocks:
    """Gaussian description of one island's signal/idler modes plus the two
    scalars every delivered-state metric depends on.

    ``lambda_ss``, ``lambda_si``, ``lambda_ii`` are the 4x4 blocks of the
    inverse covariance kernel over (signal x4, interfered-idler x4) for one
    polarization pair of Sagnacs; ``cond_cov`` is the idler covariance
    conditioned on the signals.  ``one_minus_n_s`` and ``one_minus_n_s_prime``
    carry the complements at full precision.
    """

    gain_minus_one: float
    eta_t: float
    eta_r: float
    lambda_ss: np.ndarray
    lambda_si: np.ndarray
    lambda_ii: np.ndarray
    cond_cov: np.ndarray
    n_s: float
    n_s_prime: float
    one_minus_n_s: float
    one_minus_n_s_prime: float


def _complements(gain_minus_one: float, eta_t: float, eta_r: float) -> tuple[float, float, float, float]:
    """(n_s, eps_s, n_s_prime, delta) evaluated cancellation-free."""
    g = float(gain_minus_one)
    big_g = 1.0 + g
    eps_s = (1.0 - eta_t) * g / big_g
    n_s = 1.0 - eps_s
    delta = eta_r * eps_s / (n_s + eta_r * eps_s)
    n_s_prime = 1.0 - delta
    return n_s, eps_s, n_s_prime, delta


def build_gaussian_blocks(
    gain_minus_one: float, eta_t: float, eta_r: float = 1.0
) -> GaussianBlocks:
    """Assemble the Gaussian blocks and weight scalars for one island.

    The off-diagonal block couples each signal quadrature to the matching
    quadratures of both interfered idler outputs with magnitude
    sqrt(eta_t G (G-1)) / (2 sqrt(2) G) and the sign pattern of the 50-50
    combination (symmetric output positive on source 1 and 2, antisymmetric
    output opposite on source 2).
    """
    g = float(gain_minus_one)
    big_g = 1.0 + g
    mu = eta_t * g
    eye = np.eye(4)
    lambda_ss = ((mu + 1.0) / (2.0 * big_g)) * eye
    lambda_ii = 0.5 * eye
    coupling = math.sqrt(eta_t * big_g * g) / (2.0 * math.sqrt(2.0) * big_g)
    lambda_si = -coupling * _SIGN_PATTERN
    cond_cov = (1.0 / (2.0 * (mu + 1.0))) * eye
    n_s, eps_s, n_s_prime, delta = _complements(g, eta_t, eta_r)
    return GaussianBlocks(
        gain_minus_one=g,
        eta_t=eta_t,
        eta_r=eta_r,
        lambda_ss=lambda_ss,
        lambda_si=lambda_si,
        lambda_ii=lambda_ii,
        cond_cov=cond_cov,
        n_s=n_s,
        n_s_prime=n_s_prime,
        one_minus_n_s=eps_s,
        one_minus_n_s_prime=delta,
    )


def _pattern_signs(pattern: HeraldPattern) -> tuple[float, float]:
    sh = 1.0 if pattern.h_sign.value == "+" else -1.0
    sv = 1.0 if pattern.v_sign.value == "+" else -1.0
    return sh, sv


def chf_conditional_signal(
    blocks: GaussianBlocks,
    zeta: tuple[complex, complex, complex, complex],
    pattern: HeraldPattern,
) -> float:
    """Anti-normally-ordered characteristic function of the heralded signal
    state before any downstream loss, at displacement ``zeta``.

    ``zeta`` is ordered (S1H, S1V, S2H, S2V).  Requires blocks built with
    eta_r = 1 (no channel applied yet).  For each polarization the two
    source amplitudes enter through the combination matching the detected
    branch sign of that polarization:

        exp(-|zeta|^2 / n_s)
        * (1 - |z_S1H + sH z_S2H|^2 / (2 n_s))
        * (1 - |z_S1V + sV z_S2V|^2 / (2 n_s))
    """
    if blocks.eta_r != 1.0:
        raise ValueError("conditional characteristic function requires blocks with eta_r = 1")
    z = tuple(complex(v) for v in zeta)
    if len(z) != 4:
        raise ValueError("zeta must have exactly 4 complex amplitudes")
    sh, sv = _pattern_signs(pattern)
    n_s = blocks.n_s
    norm2 = sum(abs(v) ** 2 for v in z)
    fac_h = 1.0 - abs(z[0] + sh * z[2]) ** 2 / (2.0 * n_s)
    fac_v = 1.0 - abs(z[1] + sv * z[3]) ** 2 / (2.0 * n_s)
    return math.exp(-norm2 / n_s) * fac_h * fac_v


def chf_delivered_signal(
    blocks: GaussianBlocks,
    xi: tuple[complex, complex, complex, complex],
    pattern: HeraldPattern,
) -> float:
    """Anti-normally-ordered characteristic function of the delivered state
    after the eta_r channel stored in ``blocks``, at displacement ``xi``.

    Equal to the conditional function at sqrt(eta_r) * xi times the vacuum
    envelope exp(-(1 - eta_r) |xi|^2); in closed form the Gaussian envelope
    uses n_s_prime while the polynomial factors keep eta_r / n_s:

        exp(-|xi|^2 / n_s_prime)
        * (1 - eta_r |x_AH + sH x_BH|^2 / (2 n_s))
        * (1 - eta_r |x_AV + sV x_BV|^2 / (2 n_s))

    ``xi`` is ordered (AH, AV, BH, BV), receiver A holding source 1's signal.
    """
    x = tuple(complex(v) for v in xi)
    if len(x) != 4:
        raise ValueError("xi must have exactly 4 complex amplitudes")
    sh, sv = _pattern_signs(pattern)
    n_s = blocks.n_s
    n_s_prime = blocks.n_s_prime
    eta_r = blocks.eta_r
    norm2 = sum(abs(v) ** 2 for v in x)
    fac_h = 1.0 - eta_r * abs(x[0] + sh * x[2]) ** 2 / (2.0 * n_s)
    fac_v = 1.0 - eta_r * abs(x[1] + sv * x[3]) ** 2 / (2.0 * n_s)
    return math.exp(-norm2 / n_s_prime) * fac_h * fac_v


def bsm_bell_singlet_prob(n_s: float) -> float:
    """Probability that the heralded state projects onto its announced Bell
    class at the measurement stage (no downstream loss): n_s^6 / 2."""
    return 0.5 * n_s**6


def bsm_loadable_prob(n_s: float) -> float:
    """Probability that both signal arms hold at least one photon at the
    measurement stage: 1 - n_s^2 / 2."""
    return 1.0 - 0.5 * n_s * n_s


def bsm_bell_fraction(n_s: float) -> float:
    """Of the loadable events, the fraction in the announced Bell class:
    n_s^6 / (2 - n_s^2)."""
    return n_s**6 / (2.0 - n_s * n_s)


def _delta_brackets(n_s: float, delta: float, eta_r: float) -> tuple[float, float, float]:
    """(shared, t_s, t_e) pieces of the matched/mismatched brackets.

    matched bracket    = shared + t_s
    mismatched bracket = shared + t_e
    with shared = 2 delta^2 + 2 (eta_r/n_s) delta (1-delta)(1-3 delta),
    t_s = (eta_r/n_s)^2 (1-delta)^2 (1 - 4 delta + 5 delta^2),
    t_e = -(eta_r/n_s)^2 2 delta (1-delta)^2 (1 - 2 delta).
    """
    a = eta_r / n_s
    x = 1.0 - delta
    shared = 2.0 * delta * delta + 2.0 * a * delta * x * (1.0 - 3.0 * delta)
    t_s = a * a * x * x * (1.0 - 4.0 * delta + 5.0 * delta * delta)
    t_e = -(a * a) * 2.0 * delta * x * x * (1.0 - 2.0 * delta)
    return shared, t_s, t_e


def prop_bell_probs(blocks: GaussianBlocks, eta_r: float) -> tuple[float, float]:
    """Unnormalized matched (s) and mismatched (e) Bell projections of the
    state delivered through transmissivity ``eta_r``.

    s - e equals eta_r^2 n_s_prime^8 / (2 n_s^2) exactly; at eta_r = 1 the
    mismatched projection vanishes identically.
    """
    n_s = blocks.n_s
    eps_s = blocks.one_minus_n_s
    delta = eta_r * eps_s / (n_s + eta_r * eps_s)
    x = 1.0 - delta
    shared, t_s, t_e = _delta_brackets(n_s, delta, eta_r)
    x4 = x**4
    s = 0.5 * x4 * (shared + t_s)
    e = 0.5 * x4 * (shared + t_e)
    return s, e


def prop_loadable_prob(blocks: GaussianBlocks, eta_r: float) -> float:
    """Probability that both receivers can load a qubit after ``eta_r``.

    Cancellation-free form of
    1 - 2 x^2 (1 - r/2)^2 + x^4 (1 - r)^2, x = n_s_prime, r = eta_r x / n_s:
    (1-x^2)^2 + 2 x^2 r (1-x^2) + x^2 r^2 (x^2 - 1/2), with
    1 - x^2 = delta (2 - delta).
    """
    n_s = blocks.n_s
    eps_s = blocks.one_minus_n_s
    delta = eta_r * eps_s / (n_s + eta_r * eps_s)
    x = 1.0 - delta
    r = eta_r * x / n_s
    x2 = x * x
    gap = delta * (2.0 - delta)  # 1 - x^2
    return gap * gap + 2.0 * x2 * r * gap + x2 * r * r * (x2 - 0.5)


def prop_bell_total(blocks: GaussianBlocks, eta_r: float) -> float:
    """Total Bell-subspace probability of the delivered state, evaluated on
    its own direct path: 2 x^4 * (mismatched bracket) + eta_r^2 x^8 / (2 n_s^2).

    Must agree with s + 3e from prop_bell_probs to full precision; the
    acceptance suite holds the two paths to 1e-12 relative.
    """
    n_s = blocks.n_s
    eps_s = blocks.one_minus_n_s
    delta = eta_r * eps_s / (n_s + eta_r * eps_s)
    x = 1.0 - delta
    shared, _, t_e = _delta_brackets(n_s, delta, eta_r)
    x4 = x**4
    a = eta_r / n_s
    return 2.0 * x4 * (shared + t_e) + 0.5 * a * a * x4 * x4


def bell_diagonal_state(s: float, e: float, herald: BellClass) -> BellDiagonal:
    """Delivered two-qubit state as a Bell-diagonal density: weight ``s`` on
    the announced class and ``e`` on each of the other three."""
    total = s + 3.0 * e
    if total <= 0.0:
        raise DegenerateStateError("Bell-subspace weight is zero; no two-qubit state")
    if herald is BellClass.PSI_PLUS:
        return BellDiagonal(s, e, e, e, herald=herald)
    return BellDiagonal(e, s, e, e, herald=herald)


def purity(state: BellDiagonal) -> float:
    """Tr[rho^2] of a Bell-diagonal state: the sum of squared weights."""
    return sum(p * p for p in state.probabilities)


def pair_rate(params: SourceParams) -> float:
    """Delivered entangled-pair rate in pairs per second.

    pump_rate * Pr(any herald) * s, where s is the matched-class projection
    of the delivered state.
    """
    p = herald_prob_island(params.gain_minus_one, params.eta_t)
    p_any = herald_any_prob(p, params.n_islands, params.herald_mode)
    blocks = build_gaussian_blocks(params.gain_minus_one, params.eta_t, params.eta_r)
    s, _ = prop_bell_probs(blocks, params.eta_r)
    return params.pump_rate * p_any * s


def metric_bundle(params: SourceParams) -> MetricBundle:
    """Assemble every scalar metric for one configuration.

    At zero gain no herald ever occurs, so the conditional fidelity is
    reported as NaN (undefined) while the rates are exactly zero.
    """
    p = herald_prob_island(params.gain_minus_one, params.eta_t)
    p_true = true_herald_prob(p, params.n_islands, params.herald_mode)
    p_any = 2.0 * p_true
    blocks = build_gaussian_blocks(params.gain_minus_one, params.eta_t, params.eta_r)
    s, e = prop_bell_probs(blocks, params.eta_r)
    p_bell = s + 3.0 * e
    p_loadable = prop_loadable_prob(blocks, params.eta_r)
    fraction = p_bell / p_loadable
    fidelity = s / p_bell if p > 0.0 else math.nan
    state = bell_diagonal_state(s, e, BellClass.PSI_MINUS)
    return MetricBundle(
        p_herald_island=p,
        p_herald_any=p_any,
        p_true=p_true,
        n_s=blocks.n_s,
        n_s_prime=blocks.n_s_prime,
        s=s,
        e=e,
        p_bell=p_bell,
        p_loadable=p_loadable,
        fraction=fraction,
        fidelity=fidelity,
        purity=purity(state),
        rate=params.pump_rate * p_any * s,
    )


def _delivered_metric(metric: str, gain_minus_one: float, eta_t: float, eta_r: float) -> float:
    blocks = build_gaussian_blocks(gain_minus_one, eta_t, eta_r)
    s, e = prop_bell_probs(blocks, eta_r)
    if metric == "fidelity":
        return s / (s + 3.0 * e)
    if metric == "fraction":
        return prop_bell_total(blocks, eta_r) / prop_loadable_prob(blocks, eta_r)
    raise ValueError(f"unknown metric {metric!r}; expected 'fraction' or 'fidelity'")


def solve_gain(
    metric: str,
    target: float,
    eta_t: float,
    eta_r: float = 1.0,
) -> float:
    """Invert fidelity or Bell fraction for the gain G - 1 by bisection.

    Both metrics decrease monotonically in the gain on the bracket
    [1e-8, 1].  Raises UnachievableTargetError when the target lies outside
    the metric's range on that bracket.  The returned gain is converged to
    1e-6 relative.
    """
    lo, hi = GAIN_BRACKET
    f_lo = _delivered_metric(metric, lo, eta_t, eta_r)
    f_hi = _delivered_metric(metric, hi, eta_t, eta_r)
    if not (f_hi <= target <= f_lo):
        raise UnachievableTargetError(
            f"{metric} = {target} is outside [{f_hi:.6g}, {f_lo:.6g}] "
            f"reachable for gain in [{lo:g}, {hi:g}] at eta_t = {eta_t}, eta_r = {eta_r}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _delivered_metric(metric, mid, eta_t, eta_r) >= target:
            lo = mid  # metric still above target: gain may grow
        else:
            hi = mid
        if hi - lo <= GAIN_REL_TOL * lo:
            break
    return 0.5 * (lo + hi)


def islands_required(p: float, target_p_true: float, herald_mode: HeraldMode) -> int:
    """Smallest island count whose true-herald probability reaches the target.

    Closed forms (L = ln(1 - 2 target) / ln(1 - p)):
    SAME_ISLAND -> ceil(L); SPCI_PAPER -> ceil(sqrt(L));
    SPCI_EXACT  -> ceil(ln(1 - sqrt(2 target)) / ln(1 - sqrt(p))).
    The true-herald probability saturates at 1/2, so the target must lie in
    (0, 1/2).  Counts small enough to evaluate are nudged to the exact
    minimal integer; astronomically large counts return the formula value.
    """
    if not 0.0 < p < 1.0:
        raise UnachievableTargetError(f"per-island herald probability must be in (0, 1), got {p!r}")
    if not 0.0 < target_p_true < 0.5:
        raise UnachievableTargetError(
            f"true-herald probability saturates at 1/2; target {target_p_true!r} unreachable"
        )
    if herald_mode is HeraldMode.SAME_ISLAND:
        raw = math.log1p(-2.0 * target_p_true) / math.log1p(-p)
    elif herald_mode is HeraldMode.SPCI_PAPER:
        raw = math.sqrt(math.log1p(-2.0 * target_p_true) / math.log1p(-p))
    else:
        q = math.sqrt(p)
        raw = math.log1p(-math.sqrt(2.0 * target_p_true)) / math.log1p(-q)
    n = max(1, math.ceil(raw))
    if n <= _ISLAND_ADJUST_LIMIT:
        while true_herald_prob(p, n, herald_mode) < target_p_true:
            n += 1
        while n > 1 and true_herald_prob(p, n - 1, herald_mode) >= target_p_true:
            n -= 1
    return n
