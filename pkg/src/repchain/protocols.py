"""Entanglement swapping and two-to-one purification on explicit density matrices.

Two pairs are combined into a 16x16 four-qubit state.  For a swap the qubit
order is ``(A, B1, B2, C)`` where ``B1, B2`` sit at the swapping node; for
purification it is ``(A1, B1, A2, B2)`` with pair 1 the kept (control) pair.
"""
import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import InvalidParameterError
from .quantum import (
    BellDiagonal,
    BellKind,
    apply_gate,
    apply_pauli,
    apply_unitary,
    bell_state,
    depolarize,
    fidelity,
    measurement_branches,
    readout_matrix,
)


@dataclass(frozen=True)
class ProtocolResult:
    """Outcome of one swap or purification round.

    ``probability`` is the probability of the branch that was realised
    (1 for the deterministic swap).
    """

    success: bool
    state: Optional[np.ndarray]
    consumed: int
    ops_time: float
    probability: float = 1.0


def _normalized(sigma, prob):
    rho = sigma / prob
    return 0.5 * (rho + rho.conj().T)


# -- swapping -----------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _swap_corrections():
    """Pauli index on the right end that maps each outcome of Psi+ x Psi+ back to Psi+."""
    ideal = np.kron(bell_state(BellKind.PSI_PLUS), bell_state(BellKind.PSI_PLUS))
    ideal = apply_unitary(ideal, "CNOT", (1, 2))
    ideal = apply_unitary(ideal, "H", (1,))
    table = {}
    for bits, (prob, sigma) in measurement_branches(ideal, (1, 2)).items():
        rho = sigma / prob
        for k in range(4):
            if fidelity(apply_pauli(rho, k, 1), BellKind.PSI_PLUS) > 1.0 - 1e-12:
                table[bits] = k
                break
        else:  # pragma: no cover
            raise RuntimeError(f"no Pauli correction for outcome {bits}")
    return table


def swap_time(hw):
    return hw.t_gate2 + hw.t_gate1 + 2.0 * hw.t_meas


def entanglement_swap(left, right, hw):
    """Bell-state measurement on the inner qubits of ``left`` and ``right``.

    The two node qubits are each depolarized with ``p1`` and then undergo a
    CNOT followed by two-qubit depolarizing ``p2``; the Hadamard is exact.
    The two-bit record is correct with probability ``(1 - xi0) * (1 - xi1)``
    and otherwise equals one of the three wrong records with equal weight.
    A record selects a Pauli-frame correction on the right end, so a wrong
    record applies the wrong Pauli.  The returned state is the ensemble over
    all outcomes and therefore deterministic.

    Returns
    -------
    ProtocolResult
        Always successful; ``state`` is the Psi+-targeted pair between the
        outer nodes.
    """
    rho = np.kron(left, right)
    rho = depolarize(rho, (1,), hw.p1)
    rho = depolarize(rho, (2,), hw.p1)
    rho = apply_gate(rho, "CNOT", (1, 2), p2=hw.p2)
    rho = apply_unitary(rho, "H", (1,))
    p_ok = (1.0 - hw.xi0) * (1.0 - hw.xi1)
    table = _swap_corrections()
    out = np.zeros((4, 4), dtype=complex)
    for true, (_, sigma) in measurement_branches(rho, (1, 2)).items():
        for record, k in table.items():
            w = p_ok if record == true else (1.0 - p_ok) / 3.0
            if w > 0.0:
                out += w * apply_pauli(sigma, k, 1)
    out = 0.5 * (out + out.conj().T)
    return ProtocolResult(True, out / np.real(np.trace(out)), 2, swap_time(hw))


# -- purification -------------------------------------------------------------------


def _purification_outcome(rho, hw, accept):
    """Success probability and post-selected control pair for every true outcome.

    Returns a list of ``(p_true, p_accept_given_true, sigma)`` over the four
    true measurement outcomes of the target qubits ``(A2, B2)``.
    """
    confusion = readout_matrix(hw.xi0, hw.xi1)
    rows = []
    for (m1, m2), (prob, sigma) in measurement_branches(rho, (2, 3)).items():
        p_acc = sum(
            confusion[m1, r1] * confusion[m2, r2]
            for r1 in (0, 1)
            for r2 in (0, 1)
            if accept(r1, r2)
        )
        rows.append((max(prob, 0.0), p_acc, sigma))
    return rows


def _bilateral_cnot(rho, hw):
    rho = apply_gate(rho, "CNOT", (0, 2), p2=hw.p2)
    return apply_gate(rho, "CNOT", (1, 3), p2=hw.p2)


def _epl_state(pair1, pair2, hw):
    return _bilateral_cnot(np.kron(pair1, pair2), hw)


def _dejmps_state(pair1, pair2, hw):
    rho = np.kron(pair1, pair2)
    rho = apply_gate(rho, "U_A", (0,), p1=hw.p1)
    rho = apply_gate(rho, "U_A", (2,), p1=hw.p1)
    rho = apply_gate(rho, "U_B", (1,), p1=hw.p1)
    rho = apply_gate(rho, "U_B", (3,), p1=hw.p1)
    return _bilateral_cnot(rho, hw)


def _epl_accept(r1, r2):
    return r1 == 1 and r2 == 1


def _dejmps_accept(r1, r2):
    return r1 == r2


def _branches(rho, hw, accept):
    rows = _purification_outcome(rho, hw, accept)
    p_succ = sum(p * a for p, a, _ in rows)
    if p_succ <= 0.0:
        return 0.0, None
    sigma = sum(a * s for _, a, s in rows)
    return float(p_succ), _normalized(sigma, np.real(np.trace(sigma)))


def epl_branches(pair1, pair2, hw):
    """Exact success probability and conditional output of one EPL round."""
    return _branches(_epl_state(pair1, pair2, hw), hw, _epl_accept)


def dejmps_branches(pair1, pair2, hw):
    """Exact success probability and conditional output of one DEJMPS round.

    Inputs and output target Phi+.
    """
    return _branches(_dejmps_state(pair1, pair2, hw), hw, _dejmps_accept)


def epl_time(hw):
    return hw.t_gate2 + hw.t_meas


def dejmps_time(hw):
    return hw.t_gate1 + hw.t_gate2 + hw.t_meas


def _sample_round(rho, hw, accept, rng, ops_time):
    rows = _purification_outcome(rho, hw, accept)
    probs = np.array([p for p, _, _ in rows])
    idx = int(rng.choice(4, p=probs / probs.sum()))
    prob, p_acc, sigma = rows[idx]
    success = bool(rng.random() < p_acc)
    p_succ = float(sum(p * a for p, a, _ in rows))
    if not success:
        return ProtocolResult(False, None, 2, ops_time, 1.0 - p_succ)
    return ProtocolResult(True, _normalized(sigma, prob), 2, ops_time, p_succ)


def epl_round(pair1, pair2, hw, rng):
    """One EPL round: bilateral CNOT, measure the targets, keep on ``(1, 1)``.

    Returns
    -------
    ProtocolResult
        ``state`` is the control pair on success; both pairs are consumed
        otherwise.
    """
    return _sample_round(_epl_state(pair1, pair2, hw), hw, _epl_accept, rng, epl_time(hw))


def dejmps_round(pair1, pair2, hw, rng):
    """One DEJMPS round on Phi+-targeted pairs; accept on equal recorded outcomes."""
    return _sample_round(_dejmps_state(pair1, pair2, hw), hw, _dejmps_accept, rng, dejmps_time(hw))


def purification_trials(pair1, pair2, hw, rng, size, protocol="dejmps"):
    """Draw ``size`` independent rounds of one purification protocol at once.

    The circuit is evaluated once; each trial then samples the true outcome
    and the readout exactly as :func:`epl_round` and :func:`dejmps_round` do.

    Returns
    -------
    outcome : ndarray of int
        True outcome index ``2 * m1 + m2`` of every trial.
    success : ndarray of bool
    states : list
        Conditional control pair for each true outcome, ``None`` where the
        outcome has zero probability.
    """
    if protocol == "epl":
        rows = _purification_outcome(_epl_state(pair1, pair2, hw), hw, _epl_accept)
    elif protocol == "dejmps":
        rows = _purification_outcome(_dejmps_state(pair1, pair2, hw), hw, _dejmps_accept)
    else:
        raise InvalidParameterError(f"unknown purification protocol {protocol!r}")
    probs = np.array([p for p, _, _ in rows])
    accept = np.array([a for _, a, _ in rows])
    outcome = rng.choice(4, size=int(size), p=probs / probs.sum())
    success = rng.random(int(size)) < accept[outcome]
    states = [_normalized(s, p) if p > 0.0 else None for p, _, s in rows]
    return outcome, success, states


def dejmps_analytic(coefficients):
    """Closed-form DEJMPS output for Bell-diagonal inputs.

    Parameters
    ----------
    coefficients : BellDiagonal or sequence
        Weights ``(a, b, c, d)`` on Phi+, Phi-, Psi+, Psi-.

    Returns
    -------
    F : float
        Output overlap with Phi+, ``(a**2 + d**2) / p``.
    p_succ : float
        ``(a + d)**2 + (b + c)**2``.

    Notes
    -----
    The rotations exchange the roles of Phi- and Psi-, so the pairs of
    coefficients that combine are ``(a, d)`` and ``(b, c)``.
    """
    a, b, c, d = BellDiagonal(*coefficients)
    p_succ = (a + d) ** 2 + (b + c) ** 2
    if p_succ <= 0.0:
        raise InvalidParameterError("undefined fidelity: success probability is zero")
    return (a**2 + d**2) / p_succ, p_succ
