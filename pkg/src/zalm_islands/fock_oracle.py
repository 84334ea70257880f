"""Truncated-Fock-space oracle for the source's heralding and delivery chain.

This module rebuilds the physics from first principles with dense density
matrices on a photon-number cutoff, sharing no formulas with the closed-form
layer: two-mode squeezed vacua, an exact 50-50 beam-splitter unitary,
photon loss as a Kraus channel, exact photon-number projections, Bell-state
projections, and the anti-normally-ordered characteristic function.  Its
purpose is to confirm every closed form numerically, so it favors clarity
over speed (dense matrices, explicit channels).

The H and V polarizations of one island never couple, so the conditional
pipeline runs one 4-mode block per polarization, (S1, S2, I+, I-), and
tensors the two heralded 2-mode signal blocks at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import (
    BellClass,
    CutoffTooSmallError,
    HeraldPattern,
    ModeNotFoundError,
    Sign,
)

__all__ = [
    "FockKet",
    "FockDensity",
    "PolarizationBlock",
    "BellOracleMetrics",
    "build_tmsv",
    "tensor_kets",
    "tensor_densities",
    "thermal_state",
    "apply_beam_splitter_5050",
    "apply_loss",
    "pnr_probs",
    "mode_number_distribution",
    "partial_trace",
    "project_fock",
    "reorder_modes",
    "build_polarization_block",
    "conditional_signal_state",
    "propagate_signals",
    "bell_metrics",
    "chf_anti_normal",
    "DEFAULT_CUTOFF",
    "DEFAULT_TAIL_BUDGET",
    "SIGNAL_MODE_ORDER",
]

DEFAULT_CUTOFF = 4
DEFAULT_TAIL_BUDGET = 1e-9

# Canonical label order of the heralded signal modes.
SIGNAL_MODE_ORDER = ("S1H", "S1V", "S2H", "S2V")


def _check_labels(labels: tuple[str, ...]) -> None:
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate mode labels: {labels}")


@dataclass(frozen=True, eq=False)
class FockKet:
    """Pure state over labeled modes, truncated at ``cutoff`` photons each.

    ``vector`` has length (cutoff+1)^n_modes, flattened C-style with the
    first label most significant.  May be sub-normalized: a truncated
    squeezed state keeps its untruncated amplitudes, so its norm deficit is
    exactly the discarded tail weight.
    """

    mode_labels: tuple[str, ...]
    cutoff: int
    vector: np.ndarray

    def __post_init__(self) -> None:
        _check_labels(self.mode_labels)
        d = self.cutoff + 1
        expected = d ** len(self.mode_labels)
        if self.vector.shape != (expected,):
            raise ValueError(
                f"vector of {len(self.mode_labels)} modes at cutoff {self.cutoff} "
                f"must have shape ({expected},), got {self.vector.shape}"
            )

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    @property
    def n_modes(self) -> int:
        return len(self.mode_labels)

    def axis(self, label: str) -> int:
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise ModeNotFoundError(label) from None

    def norm_squared(self) -> float:
        return float(np.vdot(self.vector, self.vector).real)

    def to_density(self) -> "FockDensity":
        return FockDensity(
            mode_labels=self.mode_labels,
            cutoff=self.cutoff,
            matrix=np.outer(self.vector, self.vector.conj()),
        )

    def rename(self, mapping: dict[str, str]) -> "FockKet":
        labels = tuple(mapping.get(name, name) for name in self.mode_labels)
        return FockKet(labels, self.cutoff, self.vector)


@dataclass(frozen=True, eq=False)
class FockDensity:
    """Density operator over labeled modes, truncated at ``cutoff``.

    ``matrix`` has shape (D, D) with D = (cutoff+1)^n_modes, same index
    convention as FockKet.  May be sub-normalized after conditioning; the
    trace is computed once at construction.  ``validate()`` checks
    hermiticity and positivity on demand (too expensive to run at every
    construction).
    """

    mode_labels: tuple[str, ...]
    cutoff: int
    matrix: np.ndarray
    trace: float = None  # type: ignore[assignment]  # filled in __post_init__

    def __post_init__(self) -> None:
        _check_labels(self.mode_labels)
        d = self.cutoff + 1
        expected = d ** len(self.mode_labels)
        if self.matrix.shape != (expected, expected):
            raise ValueError(
                f"density of {len(self.mode_labels)} modes at cutoff {self.cutoff} "
                f"must have shape ({expected}, {expected}), got {self.matrix.shape}"
            )
        object.__setattr__(self, "trace", float(np.trace(self.matrix).real))

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    @property
    def n_modes(self) -> int:
        return len(self.mode_labels)

    def axis(self, label: str) -> int:
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise ModeNotFoundError(label) from None

    def rename(self, mapping: dict[str, str]) -> "FockDensity":
        labels = tuple(mapping.get(name, name) for name in self.mode_labels)
        return FockDensity(labels, self.cutoff, self.matrix)

    def normalized(self) -> "FockDensity":
        if self.trace <= 0.0:
            raise ValueError("cannot normalize a zero-trace density")
        return FockDensity(self.mode_labels, self.cutoff, self.matrix / self.trace)

    def validate(self, atol: float = 1e-10) -> None:
        """Raise if the operator is not hermitian positive-semidefinite with
        trace in (0, 1 + atol]."""
        mat = self.matrix
        if not np.allclose(mat, mat.conj().T, atol=atol):
            raise ValueError("density is not hermitian")
        eigs = np.linalg.eigvalsh(mat)
        if eigs.min() < -atol:
            raise ValueError(f"density has negative eigenvalue {eigs.min():.3e}")
        if not (0.0 < self.trace <= 1.0 + atol):
            raise ValueError(f"density trace {self.trace!r} outside (0, 1]")


def tensor_kets(a: FockKet, b: FockKet) -> FockKet:
    if a.cutoff != b.cutoff:
        raise ValueError("cannot tensor states with different cutoffs")
    return FockKet(a.mode_labels + b.mode_labels, a.cutoff, np.kron(a.vector, b.vector))


def tensor_densities(a: FockDensity, b: FockDensity) -> FockDensity:
    if a.cutoff != b.cutoff:
        raise ValueError("cannot tensor states with different cutoffs")
    return FockDensity(a.mode_labels + b.mode_labels, a.cutoff, np.kron(a.matrix, b.matrix))


def reorder_modes(density: FockDensity, new_order: tuple[str, ...]) -> FockDensity:
    """Permute the mode axes into ``new_order`` (same label set)."""
    if set(new_order) != set(density.mode_labels) or len(new_order) != density.n_modes:
        raise ModeNotFoundError(f"{new_order} is not a permutation of {density.mode_labels}")
    n = density.n_modes
    d = density.dim
    perm = [density.axis(name) for name in new_order]
    arr = density.matrix.reshape((d,) * (2 * n))
    arr = arr.transpose(tuple(perm) + tuple(n + p for p in perm))
    size = d**n
    return FockDensity(tuple(new_order), density.cutoff, arr.reshape(size, size))


def build_tmsv(gain_minus_one: float, cutoff: int, labels: tuple[str, str] = ("S", "I")) -> FockKet:
    """Two-mode squeezed vacuum with mean pair number ``gain_minus_one``.

    Amplitude sqrt((G-1)^m / G^(m+1)) on |m, m>; the truncated norm deficit
    is exactly ((G-1)/G)^(cutoff+1).
    """
    if gain_minus_one < 0.0:
        raise ValueError("gain_minus_one must be >= 0")
    d = cutoff + 1
    g = float(gain_minus_one)
    big_g = 1.0 + g
    vec = np.zeros(d * d, dtype=complex)
    for m in range(d):
        vec[m * d + m] = math.sqrt(g**m / big_g ** (m + 1))
    return FockKet(tuple(labels), cutoff, vec)


def thermal_state(mean: float, cutoff: int, label: str = "T") -> FockDensity:
    """Single-mode thermal state with the given mean photon number."""
    if mean < 0.0:
        raise ValueError("mean photon number must be >= 0")
    d = cutoff + 1
    probs = np.array([mean**m / (1.0 + mean) ** (m + 1) for m in range(d)])
    return FockDensity((label,), cutoff, np.diag(probs).astype(complex))


@lru_cache(maxsize=8)
def _bs_unitary(dim: int) -> np.ndarray:
    """Matrix of the 50-50 beam splitter on two modes at cutoff dim-1.

    Output mode a carries the symmetric combination (a+b)/sqrt(2), output
    mode b the antisymmetric one (a-b)/sqrt(2).  Photon-number conserving;
    rows whose output occupation would exceed the cutoff are dropped, so the
    matrix is exactly unitary on total number <= cutoff and truncating above.
    """
    u = np.zeros((dim * dim, dim * dim))
    for ma in range(dim):
        for mb in range(dim):
            n = ma + mb
            col = ma * dim + mb
            norm = math.sqrt(2.0**n * math.factorial(ma) * math.factorial(mb))
            for ka in range(max(0, n - (dim - 1)), min(dim - 1, n) + 1):
                kb = n - ka
                acc = 0
                for i in range(max(0, ka - mb), min(ma, ka) + 1):
                    j = ka - i
                    acc += math.comb(ma, i) * math.comb(mb, j) * (-1) ** (mb - j)
                if acc:
                    amp = math.sqrt(math.factorial(ka) * math.factorial(kb)) * acc / norm
                    u[ka * dim + kb, col] = amp
    return u


def _move_pair_last(n_axes: int, pa: int, pb: int) -> tuple[int, ...]:
    """Axis permutation placing axes (pa, pb) last, preserving the rest."""
    rest = [i for i in range(n_axes) if i not in (pa, pb)]
    return tuple(rest + [pa, pb])


def apply_beam_splitter_5050(state, mode_a: str, mode_b: str):
    """Interfere two modes on a 50-50 beam splitter (symmetric output lands
    in ``mode_a``'s slot, antisymmetric in ``mode_b``'s).

    Accepts a FockKet or a FockDensity and returns the same kind.
    """
    u = _bs_unitary(state.cutoff + 1)
    d = state.cutoff + 1
    n = state.n_modes
    pa, pb = state.axis(mode_a), state.axis(mode_b)
    if isinstance(state, FockKet):
        arr = state.vector.reshape((d,) * n)
        perm = _move_pair_last(n, pa, pb)
        arr = arr.transpose(perm).reshape(-1, d * d)
        arr = arr @ u.T
        arr = arr.reshape((d,) * n)
        inverse = np.argsort(perm)
        arr = arr.transpose(tuple(inverse))
        return FockKet(state.mode_labels, state.cutoff, arr.reshape(-1))
    if isinstance(state, FockDensity):
        arr = state.matrix.reshape((d,) * (2 * n))
        rest = [i for i in range(n) if i not in (pa, pb)]
        # Ket and bra axes of the interfered pair must sit together at the
        # end so the reshape exposes them as the (d^2, d^2) matrix block.
        full_perm = (
            tuple(rest)
            + tuple(n + i for i in rest)
            + (pa, pb, n + pa, n + pb)
        )
        arr = arr.transpose(full_perm).reshape(-1, d * d, d * d)
        arr = np.matmul(u, np.matmul(arr, u.conj().T))
        arr = arr.reshape((d,) * (2 * n))
        inverse = np.argsort(full_perm)
        arr = arr.transpose(tuple(inverse))
        size = d**n
        return FockDensity(state.mode_labels, state.cutoff, arr.reshape(size, size))
    raise TypeError(f"expected FockKet or FockDensity, got {type(state).__name__}")


@lru_cache(maxsize=64)
def _loss_kraus(dim: int, eta: float) -> tuple[np.ndarray, ...]:
    """Kraus family of the photon-loss channel with transmissivity ``eta``.

    K_k maps |n> to |n-k> with amplitude sqrt(C(n, k) eta^(n-k) (1-eta)^k);
    the family is exactly trace-preserving on the truncated space.
    """
    ops = []
    for k in range(dim):
        mat = np.zeros((dim, dim))
        for n in range(k, dim):
            mat[n - k, n] = math.sqrt(math.comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k)
        if mat.any():
            ops.append(mat)
    return tuple(ops)


def apply_loss(density: FockDensity, mode: str, eta: float) -> FockDensity:
    """Send one mode through a loss channel of transmissivity ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("transmissivity must lie in [0, 1]")
    if eta == 1.0:
        return density
    d = density.dim
    n = density.n_modes
    p = density.axis(mode)
    rest = [i for i in range(n) if i != p]
    # Pair the lossy mode's ket and bra axes at the end so the reshape
    # exposes them as the trailing (d, d) matrix block.
    full_perm = tuple(rest) + tuple(n + i for i in rest) + (p, n + p)
    arr = density.matrix.reshape((d,) * (2 * n)).transpose(full_perm).reshape(-1, d, d)
    out = np.zeros_like(arr)
    for kraus in _loss_kraus(d, eta):
        out += np.matmul(kraus, np.matmul(arr, kraus.conj().T))
    out = out.reshape((d,) * (2 * n)).transpose(tuple(np.argsort(full_perm)))
    size = d**n
    return FockDensity(density.mode_labels, density.cutoff, out.reshape(size, size))


def mode_number_distribution(density: FockDensity, mode: str) -> np.ndarray:
    """Unnormalized photon-number distribution of one mode (sums to trace)."""
    d = density.dim
    n = density.n_modes
    p = density.axis(mode)
    diag = np.diagonal(density.matrix).real.reshape((d,) * n)
    axes = tuple(i for i in range(n) if i != p)
    return diag.sum(axis=axes) if axes else diag.copy()


def pnr_probs(density: FockDensity, mode: str) -> tuple[float, float, float]:
    """(p0, p1, p_multi) of a photon-number-resolving detector on one mode.

    Sums to the density's trace (sub-normalized input gives sub-normalized
    readings).
    """
    dist = mode_number_distribution(density, mode)
    p0 = float(dist[0])
    p1 = float(dist[1]) if dist.size > 1 else 0.0
    return p0, p1, float(dist.sum() - p0 - p1)


def partial_trace(density: FockDensity, keep: tuple[str, ...]) -> FockDensity:
    """Trace out every mode not in ``keep`` (result ordered as ``keep``)."""
    for name in keep:
        density.axis(name)  # raises ModeNotFoundError
    ordered = tuple(keep) + tuple(m for m in density.mode_labels if m not in keep)
    dens = reorder_modes(density, ordered)
    d = density.dim
    n_keep = len(keep)
    n_tr = density.n_modes - n_keep
    size_keep = d**n_keep
    size_tr = d**n_tr
    arr = dens.matrix.reshape(size_keep, size_tr, size_keep, size_tr)
    return FockDensity(tuple(keep), density.cutoff, np.einsum("atbt->ab", arr))


def project_fock(density: FockDensity, assignments: dict[str, int]) -> FockDensity:
    """Project modes onto exact photon numbers and drop them.

    Returns the unnormalized reduced density over the remaining modes; its
    trace is the joint probability of the assigned readings.
    """
    d = density.dim
    n = density.n_modes
    index: list = [slice(None)] * (2 * n)
    for label, value in assignments.items():
        if not 0 <= value <= density.cutoff:
            raise ValueError(f"photon number {value} outside cutoff {density.cutoff}")
        p = density.axis(label)
        index[p] = value
        index[n + p] = value
    remaining = tuple(m for m in density.mode_labels if m not in assignments)
    arr = density.matrix.reshape((d,) * (2 * n))[tuple(index)]
    size = d ** len(remaining)
    return FockDensity(remaining, density.cutoff, arr.reshape(size, size))


@dataclass(frozen=True)
class PolarizationBlock:
    """Pre-measurement state of one polarization: modes (S1, S2, I+, I-)
    after idler interference and detector-side loss."""

    polarization: str
    density: FockDensity

    def __post_init__(self) -> None:
        if self.density.n_modes != 4:
            raise ValueError("a polarization block holds exactly 4 modes")


def build_polarization_block(
    gain_minus_one: float, eta_t: float, polarization: str, cutoff: int
) -> PolarizationBlock:
    """Build one polarization's block: two squeezed pairs, idlers interfered
    on the 50-50 splitter, then detector-side loss on both outputs."""
    pol = polarization.upper()
    if pol not in ("H", "V"):
        raise ValueError("polarization must be 'H' or 'V'")
    t1 = build_tmsv(gain_minus_one, cutoff, (f"S1{pol}", f"I1{pol}"))
    t2 = build_tmsv(gain_minus_one, cutoff, (f"S2{pol}", f"I2{pol}"))
    ket = tensor_kets(t1, t2)
    ket = apply_beam_splitter_5050(ket, f"I1{pol}", f"I2{pol}")
    ket = ket.rename({f"I1{pol}": f"Iplus{pol}", f"I2{pol}": f"Iminus{pol}"})
    rho = ket.to_density()
    rho = apply_loss(rho, f"Iplus{pol}", eta_t)
    rho = apply_loss(rho, f"Iminus{pol}", eta_t)
    rho = reorder_modes(rho, (f"S1{pol}", f"S2{pol}", f"Iplus{pol}", f"Iminus{pol}"))
    return PolarizationBlock(pol, rho)


def _herald_block(
    block: PolarizationBlock, sign: Sign
) -> tuple[float, FockDensity]:
    """Project one polarization block on its heralding pattern: the detector
    of ``sign`` reads exactly 1, the opposite detector exactly 0.

    Returns (pattern probability, unnormalized 2-mode signal density).
    """
    pol = block.polarization
    fired = f"Iplus{pol}" if sign is Sign.PLUS else f"Iminus{pol}"
    silent = f"Iminus{pol}" if sign is Sign.PLUS else f"Iplus{pol}"
    reduced = project_fock(block.density, {fired: 1, silent: 0})
    return reduced.trace, reduced


def truncation_tail(gain_minus_one: float, cutoff: int) -> float:
    """Total squeezed-vacuum weight the cutoff discards across all four
    source modeshapes of one island: 1 - (1 - t)^4, t = ((G-1)/G)^(cutoff+1)."""
    g = float(gain_minus_one)
    t = (g / (1.0 + g)) ** (cutoff + 1)
    return 1.0 - (1.0 - t) ** 4


def conditional_signal_state(
    gain_minus_one: float,
    eta_t: float,
    pattern: HeraldPattern,
    cutoff: int = DEFAULT_CUTOFF,
    tail_budget: float = DEFAULT_TAIL_BUDGET,
) -> tuple[float, FockDensity]:
    """Herald on one island and return (herald probability, conditional
    4-mode signal density, normalized, labels (S1H, S1V, S2H, S2V)).

    The herald probability is for the single sign pattern requested; the
    four patterns are equiprobable.  Raises CutoffTooSmallError when the
    squeezed-state weight the cutoff discards exceeds ``tail_budget``.
    """
    tail = truncation_tail(gain_minus_one, cutoff)
    if tail > tail_budget:
        raise CutoffTooSmallError(
            f"cutoff {cutoff} discards weight {tail:.3e} > budget {tail_budget:.3e} "
            f"at gain_minus_one = {gain_minus_one}"
        )
    prob_h, sig_h = _herald_block(
        build_polarization_block(gain_minus_one, eta_t, "H", cutoff), pattern.h_sign
    )
    prob_v, sig_v = _herald_block(
        build_polarization_block(gain_minus_one, eta_t, "V", cutoff), pattern.v_sign
    )
    joint = tensor_densities(sig_h, sig_v)  # (S1H, S2H, S1V, S2V)
    joint = reorder_modes(joint, SIGNAL_MODE_ORDER)
    prob = prob_h * prob_v
    if prob <= 0.0:
        raise CutoffTooSmallError(
            f"herald pattern has zero probability at gain_minus_one = {gain_minus_one}"
        )
    return prob, joint.normalized()


def propagate_signals(signal_density: FockDensity, eta_r: float) -> FockDensity:
    """Send every mode of a signal density through the downstream channel."""
    out = signal_density
    for label in signal_density.mode_labels:
        out = apply_loss(out, label, eta_r)
    return out


@dataclass(frozen=True)
class BellOracleMetrics:
    """Bell projections of a delivered 4-mode dual-rail state.

    Probabilities are conditioned on the (possibly sub-normalized) input's
    trace.  ``loadable`` is the probability that each receiver holds at
    least one photon; ``off_diagonal_max`` bounds coherences between
    distinct Bell vectors.
    """

    psi_plus: float
    psi_minus: float
    phi_plus: float
    phi_minus: float
    off_diagonal_max: float
    loadable: float

    def matched(self, bell_class: BellClass) -> float:
        return self.psi_plus if bell_class is BellClass.PSI_PLUS else self.psi_minus

    def mismatched(self, bell_class: BellClass) -> tuple[float, float, float]:
        other = self.psi_minus if bell_class is BellClass.PSI_PLUS else self.psi_plus
        return (other, self.phi_plus, self.phi_minus)


def _basis_index(dim: int, occupation: tuple[int, int, int, int]) -> int:
    idx = 0
    for n in occupation:
        idx = idx * dim + n
    return idx


def bell_metrics(density: FockDensity) -> BellOracleMetrics:
    """Project a 4-mode dual-rail density on the Bell basis.

    Modes must be (S1H, S1V, S2H, S2V) in any order; receiver A holds
    (S1H, S1V), receiver B (S2H, S2V).  The psi states place the two
    photons in opposite polarizations across receivers, the phi states in
    equal polarizations.
    """
    dens = reorder_modes(density, SIGNAL_MODE_ORDER) if density.mode_labels != SIGNAL_MODE_ORDER else density
    d = dens.dim
    mat = dens.matrix
    tr = dens.trace
    if tr <= 0.0:
        raise ValueError("cannot compute Bell metrics of a zero-trace density")

    def ket(occ_a: tuple[int, int, int, int], occ_b: tuple[int, int, int, int]) -> np.ndarray:
        vec = np.zeros(d**4, dtype=complex)
        vec[_basis_index(d, occ_a)] = 1.0 / math.sqrt(2.0)
        vec[_basis_index(d, occ_b)] += 1.0 / math.sqrt(2.0)
        return vec

    def ket_minus(occ_a, occ_b) -> np.ndarray:
        vec = np.zeros(d**4, dtype=complex)
        vec[_basis_index(d, occ_a)] = 1.0 / math.sqrt(2.0)
        vec[_basis_index(d, occ_b)] -= 1.0 / math.sqrt(2.0)
        return vec

    # Occupations ordered (S1H, S1V, S2H, S2V).
    psi_a, psi_b = (1, 0, 0, 1), (0, 1, 1, 0)
    phi_a, phi_b = (1, 0, 1, 0), (0, 1, 0, 1)
    bell_vectors = (
        ket(psi_a, psi_b),       # psi_plus
        ket_minus(psi_a, psi_b),  # psi_minus
        ket(phi_a, phi_b),       # phi_plus
        ket_minus(phi_a, phi_b),  # phi_minus
    )
    gram = np.array(
        [[np.vdot(vi, mat @ vj) for vj in bell_vectors] for vi in bell_vectors]
    )
    probs = np.real(np.diagonal(gram)) / tr
    off = 0.0
    for i in range(4):
        for j in range(4):
            if i != j:
                off = max(off, abs(gram[i, j]) / tr)

    diag = np.diagonal(mat).real.reshape(d, d, d, d)
    p_a_vac = diag[0, 0].sum()
    p_b_vac = diag[:, :, 0, 0].sum()
    p_ab_vac = diag[0, 0, 0, 0]
    loadable = (tr - p_a_vac - p_b_vac + p_ab_vac) / tr
    return BellOracleMetrics(
        psi_plus=float(probs[0]),
        psi_minus=float(probs[1]),
        phi_plus=float(probs[2]),
        phi_minus=float(probs[3]),
        off_diagonal_max=float(off),
        loadable=float(loadable),
    )


def _exp_raising(dim: int, amp: complex) -> np.ndarray:
    """Matrix of exp(a^dagger * amp) on the truncated space."""
    mat = np.zeros((dim, dim), dtype=complex)
    for m in range(dim):
        for k in range(m + 1):
            mat[m, k] = amp ** (m - k) * math.sqrt(
                math.factorial(m) / math.factorial(k)
            ) / math.factorial(m - k)
    return mat


def chf_anti_normal(density: FockDensity, amplitudes) -> complex:
    """Anti-normally-ordered characteristic function
    Tr[rho exp(-zeta^* a) exp(a^dagger zeta)] at one displacement per mode.

    For physical states this is real and positive near the origin; the
    complex value is returned unreduced.
    """
    amps = tuple(complex(z) for z in amplitudes)
    if len(amps) != density.n_modes:
        raise ValueError(
            f"expected {density.n_modes} amplitudes, got {len(amps)}"
        )
    d = density.dim
    op = np.array([[1.0 + 0.0j]])
    for z in amps:
        # exp(-z* a) exp(a^dagger z) = exp(-|z|^2) exp(a^dagger z) exp(-z* a),
        # and the normal-ordered product is exact on the truncated space
        # (its intermediate photon numbers never exceed the bra/ket's).
        e_plus = _exp_raising(d, z)
        e_minus = _exp_raising(d, -z.conjugate()).T
        op = np.kron(op, (e_plus @ e_minus) * math.exp(-abs(z) ** 2))
    return complex(np.einsum("ij,ji->", density.matrix, op))
