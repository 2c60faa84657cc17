"""Resonant-interaction Hamiltonian and time evolution.

Everything is expressed in the frame rotating at the resonator frequency:
the mode term is absent and each qubit enters through its detuning
Delta_j = omega_j - omega_r (rad/s), so

    H / hbar = sum_j [ (Delta_j / 2) sigma_z_j
                       + g_j (a^dag sigma-_j + sigma+_j a) ].

Unitary segments are propagated by exact eigendecomposition; open-system
evolution uses a fixed-step RK4 integrator over the Lindblad equation with
qubit relaxation (rate 1/T1), pure dephasing (sigma_z at rate gamma_phi/2)
and cavity decay (a at rate kappa).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from . import _kernels
from .device import SystemConfig, decoherence_rates
from .errors import ConfigError, NumericalError, StepSizeError
from .hilbert import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    DensityMatrix,
    HilbertSpec,
    OperatorMatrix,
    QuantumState,
    cavity_annihilation,
    embed_qubit_operator,
)

DEFAULT_DT = 10e-12  # s
TRACE_DRIFT_TOL = 1e-6
MAX_HALVINGS = 8


@dataclass(frozen=True)
class HamiltonianTerm:
    matrix: OperatorMatrix
    label: str


@dataclass(frozen=True)
class CollapseOperator:
    matrix: OperatorMatrix
    rate: float  # 1/s

    def __post_init__(self):
        if self.rate < 0:
            raise ConfigError("collapse rate must be >= 0")


def hamiltonian_terms(
    config: SystemConfig,
    detunings: Sequence[float],
    coupled: Sequence[int] | None = None,
) -> list[HamiltonianTerm]:
    """Individual summands of H/hbar for the given per-qubit detunings (rad/s).

    ``coupled`` restricts the exchange terms to a subset of qubits; the
    default couples everyone.  A qubit outside the set is propagated in the
    far-detuned limit: its detuning term (exact dynamic phase) stays, its
    exchange with the mode is dropped.
    """
    detunings = np.asarray(detunings, dtype=float)
    if detunings.shape != (config.spec.num_qubits,):
        raise ConfigError("detuning vector length must equal the qubit count")
    coupled_set = set(range(config.spec.num_qubits)) if coupled is None else set(coupled)
    spec = config.spec
    a = cavity_annihilation(spec).entries
    a_dag = a.conj().T
    terms = []
    for j, q in enumerate(config.qubits):
        sz = embed_qubit_operator(SIGMA_Z, j, spec).entries
        terms.append(
            HamiltonianTerm(
                OperatorMatrix(0.5 * detunings[j] * sz, spec, hermitian=True),
                label=f"qubit_detuning({j})",
            )
        )
        if j not in coupled_set:
            continue
        sm = embed_qubit_operator(SIGMA_MINUS, j, spec).entries
        sp = embed_qubit_operator(SIGMA_PLUS, j, spec).entries
        coupling = q.coupling_g * (a_dag @ sm + sp @ a)
        terms.append(
            HamiltonianTerm(OperatorMatrix(coupling, spec, hermitian=True), label=f"coupling({j})")
        )
    return terms


def build_hamiltonian(
    config: SystemConfig,
    detunings: Sequence[float],
    coupled: Sequence[int] | None = None,
) -> OperatorMatrix:
    """Rotating-frame Hamiltonian H/hbar (rad/s) for fixed detunings."""
    total = sum(t.matrix.entries for t in hamiltonian_terms(config, detunings, coupled))
    return OperatorMatrix(total, config.spec, hermitian=True)


def collapse_operators(config: SystemConfig) -> list[CollapseOperator]:
    """Relaxation, dephasing and cavity-loss channels of the configured device."""
    spec = config.spec
    ops = []
    for j, q in enumerate(config.qubits):
        rates = decoherence_rates(q, config.resonator)
        ops.append(CollapseOperator(embed_qubit_operator(SIGMA_MINUS, j, spec), rates.gamma1))
        ops.append(CollapseOperator(embed_qubit_operator(SIGMA_Z, j, spec), rates.gamma_phi / 2))
    kappa = decoherence_rates(config.qubits[0], config.resonator).kappa
    ops.append(CollapseOperator(cavity_annihilation(spec), kappa))
    return ops


def _check_hermitian(h: OperatorMatrix):
    dev = np.abs(h.entries - h.entries.conj().T).max()
    scale = max(1.0, np.abs(h.entries).max())
    if dev > 1e-9 * scale:
        raise NumericalError(f"Hamiltonian is not Hermitian (deviation {dev})")


def evolve_unitary(state: QuantumState, h: OperatorMatrix, t: float) -> QuantumState:
    """Propagate a pure state by exp(-i H t) via eigendecomposition."""
    _check_hermitian(h)
    w, v = np.linalg.eigh(h.entries)
    phases = np.exp(-1j * w * t)
    amps = v @ (phases * (v.conj().T @ state.amplitudes))
    return QuantumState(amps, state.spec)


def _lindblad_arrays(collapse: Sequence[CollapseOperator], dim: int):
    active = [c for c in collapse if c.rate > 0]
    k = len(active)
    ls = np.zeros((max(k, 1), dim, dim), dtype=complex)
    for i, c in enumerate(active):
        ls[i] = np.sqrt(c.rate) * c.matrix.entries
    ls_dag = np.ascontiguousarray(np.conj(np.transpose(ls, (0, 2, 1))))
    acc = np.zeros((dim, dim), dtype=complex)
    for i in range(k):
        acc += ls_dag[i] @ ls[i]
    return ls, ls_dag, acc


def evolve_lindblad(
    rho: DensityMatrix,
    h: OperatorMatrix,
    collapse: Sequence[CollapseOperator],
    t: float,
    dt: float = DEFAULT_DT,
) -> DensityMatrix:
    """Open-system propagation for time ``t`` with a fixed RK4 step ``dt``.

    The actual step is t/ceil(t/dt) <= dt.  A trace drift beyond 1e-6
    raises :class:`StepSizeError` carrying a suggested halved step; see
    :func:`evolve_lindblad_auto` for the self-halving variant.
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    if t < 0:
        raise ConfigError("t must be >= 0")
    _check_hermitian(h)
    if t == 0:
        return rho
    steps = int(np.ceil(t / dt))
    step = t / steps
    ls, ls_dag, acc = _lindblad_arrays(collapse, rho.spec.dim)
    out = _kernels.rk4_lindblad(
        np.ascontiguousarray(h.entries),
        np.ascontiguousarray(rho.entries),
        ls,
        ls_dag,
        acc,
        step,
        steps,
    )
    # Trace drift flags dissipator stiffness; the commutator part conserves
    # the trace identically even when unstable, so norm blow-up (purity > 1)
    # must be checked as well.
    drift = abs(np.trace(out).real - 1.0)
    fro = np.linalg.norm(out)
    if not np.isfinite(fro) or drift > TRACE_DRIFT_TOL or fro > 1.0 + 1e-6:
        raise StepSizeError(
            f"integrator unstable at dt={dt:.2e} (trace drift {drift:.2e}, "
            f"norm {fro:.2e}); retry with dt={dt / 2:.2e}",
            suggested_dt=dt / 2,
        )
    out = 0.5 * (out + out.conj().T)
    out /= np.trace(out).real
    return DensityMatrix(out, rho.spec)


def evolve_lindblad_auto(
    rho: DensityMatrix,
    h: OperatorMatrix,
    collapse: Sequence[CollapseOperator],
    t: float,
    dt: float = DEFAULT_DT,
) -> DensityMatrix:
    """Like :func:`evolve_lindblad`, halving dt until the drift check passes."""
    for _ in range(MAX_HALVINGS):
        try:
            return evolve_lindblad(rho, h, collapse, t, dt)
        except StepSizeError as err:
            dt = err.suggested_dt
    raise StepSizeError(f"no converging step found down to dt={dt:.2e}", suggested_dt=dt / 2)


def single_excitation_oracle(
    couplings: Sequence[float], detunings: Sequence[float], t: float
) -> np.ndarray:
    """Analytic reference for the one-photon sector, independent of the full solver.

    Starting from |g...g,1>, the dynamics is confined to the (N+1)-dim block
    spanned by {|e_j,0>} and |g...g,1>.  The block Hamiltonian (including the
    absolute energies of the rotating frame, so phases match the full-space
    propagation) is exponentiated directly with scipy's expm.

    Returns the complex amplitude vector ordered (qubit 0 .. qubit N-1, cavity).
    On resonance the closed form is cos(G t) on the cavity and
    -i (g_j / G) sin(G t) on qubit j, with G = sqrt(sum g_j^2).
    """
    g = np.asarray(couplings, dtype=float)
    delta = np.asarray(detunings, dtype=float)
    if g.shape != delta.shape or g.ndim != 1:
        raise ConfigError("couplings and detunings must be equal-length vectors")
    n = g.size
    shift = 0.5 * delta.sum()
    block = np.zeros((n + 1, n + 1), dtype=complex)
    for j in range(n):
        block[j, j] = delta[j] - shift
        block[j, n] = g[j]
        block[n, j] = g[j]
    block[n, n] = -shift
    psi0 = np.zeros(n + 1, dtype=complex)
    psi0[n] = 1.0
    return scipy.linalg.expm(-1j * block * t) @ psi0
