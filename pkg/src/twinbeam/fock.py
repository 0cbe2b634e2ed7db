"""
Brute-force two-mode Fock-space oracle.

Density matrices are stored as dense ``(d, d, d, d)`` arrays indexed
``[n, m, n', m']`` for ``|n, m><n', m'|`` (mode a first). ``FockState.matrix``
exposes the same data as a ``d^2 x d^2`` matrix in the lexicographic basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import CutoffTooSmall, ZeroClickProbability
from .phasespace import PhasePoint

TAIL_TOLERANCE = 1e-12
MIN_CUTOFF = 16
MAX_CUTOFF = 64
#: Largest relative truncation deficit accepted by wigner_from_fock.
WIGNER_DEFICIT_TOLERANCE = 1e-8


def cutoff_for(r: float) -> int:
    """Smallest d with tanh(r)^(2d) < 1e-12, but at least 16."""
    lam2 = math.tanh(r) ** 2
    if lam2 == 0:
        return MIN_CUTOFF
    d = math.floor(math.log(TAIL_TOLERANCE) / math.log(lam2)) + 1
    return max(MIN_CUTOFF, d)


@dataclass(frozen=True)
class FockState:
    dim: int
    tensor: np.ndarray
    trace_deficit: float = 0.0

    def __post_init__(self):
        t = np.array(self.tensor, dtype=complex)
        if t.shape != (self.dim,) * 4:
            raise ValueError(f"expected shape {(self.dim,) * 4}, got {t.shape}")
        t.flags.writeable = False
        object.__setattr__(self, "tensor", t)

    @property
    def matrix(self) -> np.ndarray:
        return self.tensor.reshape(self.dim**2, self.dim**2)

    @property
    def trace(self) -> float:
        return float(np.einsum("ijij->", self.tensor).real)

    def normalized(self) -> "FockState":
        tr = self.trace
        return FockState(self.dim, self.tensor / tr, self.trace_deficit / tr)

    def hermiticity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m - m.conj().T)))

    def min_eigenvalue(self) -> float:
        m = self.matrix
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())


def trace_distance(a: FockState, b: FockState) -> float:
    diff = a.matrix - b.matrix
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def twb_state(r: float, dim: int | None = None) -> FockState:
    """Truncated twin beam, not renormalized; ``trace_deficit`` is the lost tail."""
    if dim is None:
        dim = cutoff_for(r)
    if dim > MAX_CUTOFF:
        raise CutoffTooSmall(f"r={r} needs cutoff {dim} > {MAX_CUTOFF}")
    lam = math.tanh(r)
    deficit = lam ** (2 * dim)
    if deficit >= TAIL_TOLERANCE and lam > 0:
        raise CutoffTooSmall(f"tanh(r)^(2d) = {deficit:.3g} >= {TAIL_TOLERANCE} at r={r}, d={dim}")
    amps = math.sqrt(1 - lam * lam) * lam ** np.arange(dim, dtype=float)
    psi = np.diag(amps)
    return FockState(dim, np.einsum("ij,kl->ijkl", psi, psi.conj()), deficit)


def on_off_povm(eta: float, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """No-click and click elements of an on/off detector of efficiency ``eta``."""
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    no_click = np.diag((1 - eta) ** np.arange(dim, dtype=float))
    return no_click, np.eye(dim) - no_click


def joint_povm(eta: float, dim: int) -> dict[str, np.ndarray]:
    """The four joint outcomes of two detectors as ``dim^2`` square matrices."""
    p0, p1 = on_off_povm(eta, dim)
    single = {"0": p0, "1": p1}
    return {c + d: np.kron(single[c], single[d]) for c in "01" for d in "01"}


def kraus_weight(p: int, tau: float, eta: float) -> float:
    """``tan^(2p)(phi) [1 - (1-eta)^p] / p!`` with ``cos^2(phi) = tau``."""
    return ((1 - tau) / tau) ** p * (1 - (1 - eta) ** p) / math.factorial(p)


def subtraction_operator(p: int, tau: float, dim: int) -> np.ndarray:
    """Matrix of ``a^p cos(phi)^(a^dag a)`` on one mode."""
    n = np.arange(dim)
    out = np.zeros((dim, dim))
    if p >= dim:
        return out
    src = n[p:]
    # sqrt(n!/(n-p)!) via log-gamma to stay finite at large n
    amp = np.exp(0.5 * (_lgamma(src + 1) - _lgamma(src - p + 1)) + 0.5 * src * math.log(tau))
    out[src - p, src] = amp
    return out


def _lgamma(x: np.ndarray) -> np.ndarray:
    return np.array([math.lgamma(v) for v in np.atleast_1d(x)], dtype=float)


def beam_splitter_unitary(tau: float, dim: int) -> np.ndarray:
    """``exp{-phi (a^dag c - a c^dag)}`` on two modes, index ``n_a * dim + n_c``.

    Exact on the subspace with fewer than ``dim`` total photons.
    """
    phi = math.acos(math.sqrt(tau))
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    eye = np.eye(dim)
    a_sig, a_anc = np.kron(a, eye), np.kron(eye, a)
    gen = a_sig.T @ a_anc - a_sig @ a_anc.T
    return expm(-phi * gen)


def _apply_mode_channel(tensor: np.ndarray, ops, weights, mode: int) -> np.ndarray:
    out = np.zeros_like(tensor)
    for w, K in zip(weights, ops):
        if w == 0:
            continue
        if mode == 0:
            x = np.tensordot(K, tensor, axes=(1, 0))  # [n, m, j, l]
            x = np.tensordot(x, K.conj(), axes=(2, 1))  # [n, m, l, o]
            out += w * x.transpose(0, 1, 3, 2)
        else:
            x = np.tensordot(tensor, K, axes=(1, 1))  # [n, j, l, m]
            x = np.tensordot(x, K.conj(), axes=(2, 1))  # [n, j, m, o]
            out += w * x.transpose(0, 2, 1, 3)
    return out


def _condition(unnormalized: np.ndarray, state: FockState) -> tuple[FockState, float]:
    p11 = float(np.einsum("ijij->", unnormalized).real)
    if not p11 > 1e-300:
        raise ZeroClickProbability(f"double-click probability {p11!r} is zero")
    # mass missing from the truncated input can at most land in the output
    deficit = state.trace_deficit / p11
    return FockState(state.dim, unnormalized / p11, deficit), p11


def _apply_shift_channel(tensor: np.ndarray, amplitudes, weights, mode: int) -> np.ndarray:
    # operator p has the single band <n-p| K_p |n> = amplitudes[p][n]
    d = tensor.shape[0]
    out = np.zeros_like(tensor)
    for p, (w, amp) in enumerate(zip(weights, amplitudes), start=1):
        if w == 0 or p >= d:
            continue
        k = amp[p:]
        if mode == 0:
            out[: d - p, :, : d - p, :] += w * k[:, None, None, None] * k[None, None, :, None] * tensor[p:, :, p:, :]
        else:
            out[:, : d - p, :, : d - p] += w * k[None, :, None, None] * k[None, None, None, :] * tensor[:, p:, :, p:]
    return out


def ips_apply(state: FockState, tau: float, eta: float, max_pq: int | None = None) -> tuple[FockState, float]:
    """Kraus-sum IPS map: ``sum_{p,q>=1} m_p m_q M_pq R M_pq^dag`` then normalize.

    ``M_pq = a^p b^q cos(phi)^(N_a + N_b)`` factorizes over the modes, so the
    double sum is applied as one single-mode sum per mode. With
    ``max_pq = dim - 1`` (default) the sum is exact inside the truncated
    space, since ``a^p`` annihilates everything for ``p >= dim``.
    """
    if not 0 < tau < 1:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    d = state.dim
    if max_pq is None:
        max_pq = d - 1
    ps = range(1, max_pq + 1)
    amplitudes = [np.diagonal(subtraction_operator(p, tau, d), offset=p) if p < d else np.zeros(0) for p in ps]
    # pad so amplitudes[p][n] is indexed by the source photon number n
    amplitudes = [np.concatenate([np.zeros(p), a]) for p, a in zip(ps, amplitudes)]
    weights = [kraus_weight(p, tau, eta) for p in ps]
    out = _apply_shift_channel(state.tensor, amplitudes, weights, 0)
    out = _apply_shift_channel(out, amplitudes, weights, 1)
    return _condition(out, state)


def ips_apply_dilation(state: FockState, tau: float, eta: float) -> tuple[FockState, float]:
    """IPS map through explicit vacuum ancillas, beam-splitter unitaries and the click POVM.

    For each signal mode ``Tr_c[U (rho x |0><0|) U^dag (1 x Pi_1)]`` is
    evaluated with ``<k|_c U |0>_c`` as operators on the signal, which is the
    partial trace written out for a diagonal POVM element.
    """
    if not 0 < tau < 1:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    d = state.dim
    U = beam_splitter_unitary(tau, d).reshape(d, d, d, d)  # [n_a', k_c, n_a, n_c]
    _, click = on_off_povm(eta, d)
    ops = [U[:, k, :, 0] for k in range(d)]
    weights = list(np.diag(click))
    out = _apply_mode_channel(state.tensor, ops, weights, 0)
    out = _apply_mode_channel(out, ops, weights, 1)
    return _condition(out, state)


def loss_channel(state: FockState, transmissivity: float) -> FockState:
    """Pure loss on both modes (beam splitter with vacuum, reflected port traced out)."""
    d = state.dim
    if transmissivity == 1:
        return state
    U = beam_splitter_unitary(transmissivity, d).reshape(d, d, d, d)
    ops = [U[:, k, :, 0] for k in range(d)]
    weights = [1.0] * d
    out = _apply_mode_channel(state.tensor, ops, weights, 0)
    out = _apply_mode_channel(out, ops, weights, 1)
    return FockState(d, out, state.trace_deficit)


def displacement_matrix(alpha: complex, dim: int) -> np.ndarray:
    """Exact matrix elements ``<m|D(alpha)|n>`` for ``m, n < dim``.

    Uses ``<m|D|n> = sqrt(n!/m!) alpha^(m-n) e^{-|alpha|^2/2} L_n^(m-n)(|alpha|^2)``
    for ``m >= n``, evaluated by upward recurrence in ``n`` of the normalized
    Laguerre values ``sqrt(n!/(n+k)!) L_n^(k)``; ``m < n`` follows from
    ``<m|D(alpha)|n> = conj(<n|D(-alpha)|m>)``.
    """
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        norm = np.empty(dim - k)
        # l_0 = 1/sqrt(k!), l_1 = (1 + k - x)/sqrt((k+1)!)
        norm[0] = math.exp(-0.5 * math.lgamma(k + 1))
        if dim - k > 1:
            norm[1] = (1 + k - x) * norm[0] / math.sqrt(k + 1)
        for n in range(1, dim - k - 1):
            r1 = math.sqrt((n + 1) / (n + 1 + k))
            r2 = math.sqrt((n + 1) * n / ((n + 1 + k) * (n + k)))
            norm[n + 1] = ((2 * n + 1 + k - x) * norm[n] * r1 - (n + k) * norm[n - 1] * r2) / (n + 1)
        phase = alpha**k * math.exp(-x / 2)
        n = np.arange(dim - k)
        out[n + k, n] = phase * norm
        if k:
            out[n, n + k] = (-alpha.conjugate()) ** k * math.exp(-x / 2) * norm
    return out


def displaced_parity(alpha: complex, dim: int) -> np.ndarray:
    """``D(alpha) (-1)^N D(alpha)^dag``, computed as ``D(2 alpha) (-1)^N``."""
    return displacement_matrix(2 * complex(alpha), dim) * ((-1.0) ** np.arange(dim))[None, :]


def parity_from_fock(state: FockState, alpha: complex, beta: complex) -> float:
    pa = displaced_parity(alpha, state.dim)
    pb = displaced_parity(beta, state.dim)
    return float(np.einsum("ijkl,ki,lj->", state.tensor, pa, pb).real)


def wigner_from_fock(state: FockState, point) -> float:
    """Two-mode Wigner function ``(4/pi^2) <Pi(alpha, beta)>``.

    The displaced-parity elements are exact, so the only error is the state's
    own truncation. In trace norm that is at most ``2 sqrt(deficit) + deficit``;
    in practice it is far smaller and is checked by doubling the cutoff.
    States with ``trace_deficit > WIGNER_DEFICIT_TOLERANCE`` are rejected.
    """
    if state.trace_deficit > WIGNER_DEFICIT_TOLERANCE:
        raise CutoffTooSmall(
            f"state truncation deficit {state.trace_deficit:.3g} exceeds {WIGNER_DEFICIT_TOLERANCE}"
        )
    return 4 / math.pi**2 * parity_from_fock(state, point.alpha, point.beta)


#: Real-plane points (Re alpha, Re beta) used for closed-form vs oracle checks.
ORACLE_AXIS = (-1.0, -0.5, 0.0, 0.5, 1.0)


def oracle_grid() -> list:
    """The fixed 5 x 5 grid of real phase-space points, alpha-major."""
    return [PhasePoint(a, 0.0, b, 0.0) for a in ORACLE_AXIS for b in ORACLE_AXIS]
