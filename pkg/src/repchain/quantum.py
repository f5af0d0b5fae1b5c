"""Density-matrix algebra for pairs of qubits.

States are plain complex ``numpy`` arrays of shape ``(2**n, 2**n)`` in the
computational basis with qubit 0 as the most significant bit, so a two-qubit
state is indexed by ``|00>, |01>, |10>, |11>``.  Every operation is a pure
function returning a new array.

The elementary links produced by this package target ``Psi+``.  The double-click
state is usually written with labels ``Phi_01`` and ``Phi_11``; these are the
same states as ``Psi+ = (|01> + |10>)/sqrt(2)`` and ``Psi- = (|01> - |10>)/sqrt(2)``.
"""
import enum
import functools
import math
import string
from typing import NamedTuple

import numpy as np

from ._validation import (
    InvalidParameterError,
    check_coherence_times,
    check_non_negative,
    check_probability,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)
# |0> -> (|0> - i|1>)/sqrt2, |1> -> (|1> - i|0>)/sqrt2 and the conjugate rotation
U_A = (I2 - 1j * X) / math.sqrt(2)
U_B = (I2 + 1j * X) / math.sqrt(2)
PAULIS = (I2, X, Y, Z)

SINGLE_QUBIT_GATES = {"H": H, "U_A": U_A, "U_B": U_B, "X": X, "Y": Y, "Z": Z, "I": I2}
TWO_QUBIT_GATES = ("CNOT",)


class BellKind(enum.Enum):
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"
    PSI_PLUS = "Psi+"
    PSI_MINUS = "Psi-"


class BellDiagonal(NamedTuple):
    """Overlaps of a two-qubit state with Phi+, Phi-, Psi+ and Psi-."""

    a: float
    b: float
    c: float
    d: float


_S = 1.0 / math.sqrt(2)
BELL_VECTORS = {
    BellKind.PHI_PLUS: np.array([_S, 0, 0, _S], dtype=complex),
    BellKind.PHI_MINUS: np.array([_S, 0, 0, -_S], dtype=complex),
    BellKind.PSI_PLUS: np.array([0, _S, _S, 0], dtype=complex),
    BellKind.PSI_MINUS: np.array([0, _S, -_S, 0], dtype=complex),
}


def n_qubits(rho):
    n = int(round(math.log2(rho.shape[0])))
    if 2**n != rho.shape[0] or rho.shape[0] != rho.shape[1]:
        raise InvalidParameterError(f"not a multi-qubit density matrix: shape {rho.shape}")
    return n


def bell_state(kind):
    """Projector onto the Bell state ``kind``."""
    v = BELL_VECTORS[BellKind(kind)]
    return np.outer(v, v.conj())


def werner_state(fidelity_, kind=BellKind.PSI_PLUS):
    """Depolarized Bell state with the given fidelity to ``kind``."""
    w = (4.0 * fidelity_ - 1.0) / 3.0
    return w * bell_state(kind) + (1.0 - w) * np.eye(4, dtype=complex) / 4.0


def bell_diagonal_state(coefficients):
    """State that is diagonal in the Bell basis with weights ``(a, b, c, d)``."""
    a, b, c, d = coefficients
    return (
        a * bell_state(BellKind.PHI_PLUS)
        + b * bell_state(BellKind.PHI_MINUS)
        + c * bell_state(BellKind.PSI_PLUS)
        + d * bell_state(BellKind.PSI_MINUS)
    )


def fidelity(state, kind):
    """Overlap ``<psi|rho|psi>`` with the Bell state ``kind``, clipped to [0, 1]."""
    v = BELL_VECTORS[BellKind(kind)]
    value = float(np.real(v.conj() @ state @ v))
    return min(1.0, max(0.0, value))


def bell_coefficients(state):
    return BellDiagonal(*(fidelity(state, k) for k in BellKind))


# -- operator embedding -------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _embedded(key, qubits, n):
    if key == "CNOT":
        control, target = qubits
        ops0 = [I2] * n
        ops1 = [I2] * n
        ops0[control] = P0
        ops1[control] = P1
        ops1[target] = X
        return _kron(ops0) + _kron(ops1)
    ops = [I2] * n
    ops[qubits[0]] = _named_or_pauli(key)
    return _kron(ops)


def _named_or_pauli(key):
    if key in SINGLE_QUBIT_GATES:
        return SINGLE_QUBIT_GATES[key]
    raise InvalidParameterError(f"unknown gate {key!r}")


def _kron(ops):
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def embed(op, qubit, n):
    """Lift the single-qubit operator ``op`` to act on ``qubit`` of ``n`` qubits."""
    ops = [I2] * n
    ops[qubit] = op
    return _kron(ops)


def apply_unitary(rho, gate, qubits):
    """Apply a named gate noiselessly."""
    n = n_qubits(rho)
    qubits = tuple(int(q) for q in qubits)
    U = _embedded(gate, qubits, n)
    return U @ rho @ U.conj().T


def apply_pauli(rho, pauli_index, qubit):
    """Apply ``PAULIS[pauli_index]`` (I, X, Y, Z) to ``qubit``."""
    if pauli_index == 0:
        return rho
    U = embed(PAULIS[pauli_index], qubit, n_qubits(rho))
    return U @ rho @ U.conj().T


# -- partial traces and mixing ------------------------------------------------------


def _letters(n):
    return string.ascii_letters[:n], string.ascii_letters[n : 2 * n]


def partial_trace(rho, traced):
    """Trace out the qubits in ``traced`` and return the reduced matrix."""
    n = n_qubits(rho)
    traced = sorted(set(traced))
    rows, cols = _letters(n)
    in_cols = "".join(rows[q] if q in traced else cols[q] for q in range(n))
    keep = [q for q in range(n) if q not in traced]
    out = "".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)
    t = rho.reshape((2,) * (2 * n))
    reduced = np.einsum(f"{rows}{in_cols}->{out}", t)
    d = 2 ** len(keep)
    return reduced.reshape(d, d)


def _replace_with_mixed(rho, qubits):
    n = n_qubits(rho)
    qubits = sorted(set(qubits))
    keep = [q for q in range(n) if q not in qubits]
    rows, cols = _letters(n)
    reduced = partial_trace(rho, qubits).reshape((2,) * (2 * len(keep)))
    operands = [reduced]
    subscripts = ["".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)]
    half = I2 / 2.0
    for q in qubits:
        operands.append(half)
        subscripts.append(rows[q] + cols[q])
    out = np.einsum(",".join(subscripts) + "->" + rows + cols, *operands)
    return out.reshape(2**n, 2**n)


def depolarize(state, qubits, p_err):
    """Depolarizing channel with error probability ``p_err`` on ``qubits``.

    The targeted subsystem is replaced by the maximally mixed state with
    probability ``p_err``; on both qubits of a pair this is
    ``(1 - p_err) * rho + p_err * I/4``.
    """
    p_err = check_probability(p_err, "p_err")
    if isinstance(qubits, int):
        qubits = (qubits,)
    if p_err == 0.0:
        return state
    return (1.0 - p_err) * state + p_err * _replace_with_mixed(state, qubits)


def apply_gate(state, gate, qubits, p1=0.0, p2=0.0):
    """Apply ``gate`` perfectly, then depolarize the qubits it acted on.

    Parameters
    ----------
    state : np.ndarray
        Density matrix on two or more qubits.
    gate : str
        ``"H"``, ``"U_A"``, ``"U_B"`` (single-qubit, noise ``p1``) or
        ``"CNOT"`` (``qubits = (control, target)``, noise ``p2``).
    """
    if isinstance(qubits, int):
        qubits = (qubits,)
    qubits = tuple(qubits)
    expected = 2 if gate in TWO_QUBIT_GATES else 1
    if len(qubits) != expected:
        raise InvalidParameterError(f"gate {gate} acts on {expected} qubit(s), got {qubits}")
    if len(set(qubits)) != len(qubits):
        raise InvalidParameterError(f"repeated qubit in {qubits}")
    out = apply_unitary(state, gate, qubits)
    return depolarize(out, qubits, p2 if expected == 2 else p1)


# -- memory decoherence -------------------------------------------------------------


def _survivals(t, T1, T2):
    """Excited-state survival ``exp(-t/T1)`` and extra coherence factor ``1 - 2 p_T2``."""
    t = check_non_negative(t, "t")
    T1, T2 = check_coherence_times(T1, T2)
    keep = math.exp(-t / T1)
    # standard-sign dephasing so the total coherence decay is exp(-t/T2)
    phase = min(1.0, math.exp(-t / T2 + t / (2.0 * T1))) if t > 0.0 else 1.0
    return keep, phase


def decoherence_probabilities(t, T1, T2):
    """Amplitude-damping and dephasing probabilities after storage time ``t``."""
    keep, phase = _survivals(t, T1, T2)
    return -math.expm1(-t / T1), 0.5 * (1.0 - phase)


def decohere(state, qubit, t, T1, T2):
    """Amplitude damping followed by dephasing on ``qubit`` for storage time ``t``."""
    keep, phase = _survivals(t, T1, T2)
    if keep == 1.0 and phase == 1.0:
        return state
    n = n_qubits(state)
    E0 = embed(np.array([[1, 0], [0, math.sqrt(keep)]], dtype=complex), qubit, n)
    E1 = embed(np.array([[0, math.sqrt(-math.expm1(-t / T1))], [0, 0]], dtype=complex), qubit, n)
    out = E0 @ state @ E0.conj().T + E1 @ state @ E1.conj().T
    if phase < 1.0:
        Zq = embed(Z, qubit, n)
        p_t2 = 0.5 * (1.0 - phase)
        out = (1.0 - p_t2) * out + p_t2 * (Zq @ out @ Zq)
    return out


# -- measurement --------------------------------------------------------------------


def readout_matrix(xi0, xi1):
    """``M[true, reported]`` for a Z readout that flips 0 w.p. xi0 and 1 w.p. xi1."""
    xi0 = check_probability(xi0, "xi0")
    xi1 = check_probability(xi1, "xi1")
    return np.array([[1.0 - xi0, xi0], [xi1, 1.0 - xi1]])


def measurement_branches(rho, qubits):
    """Project ``qubits`` onto every computational-basis outcome.

    Returns a dict mapping the outcome tuple to ``(probability, sigma)`` where
    ``sigma`` is the unnormalized state of the remaining qubits.
    """
    n = n_qubits(rho)
    t = rho.reshape((2,) * (2 * n))
    keep = n - len(qubits)
    branches = {}
    for bits in np.ndindex(*(2,) * len(qubits)):
        idx = [slice(None)] * (2 * n)
        for q, m in zip(qubits, bits):
            idx[q] = m
            idx[n + q] = m
        sigma = t[tuple(idx)].reshape(2**keep, 2**keep)
        branches[tuple(int(b) for b in bits)] = (float(np.real(np.trace(sigma))), sigma)
    return branches


def measure_z(state, qubit, xi0, xi1, rng):
    """Noisy Z measurement of one qubit of a pair.

    Returns
    -------
    reported : int
        The recorded bit, flipped with probability ``xi0`` (true 0) or ``xi1`` (true 1).
    post : np.ndarray
        2x2 normalized state of the other qubit after collapse on the true outcome.
    true_bit : int
    """
    if qubit not in (0, 1):
        raise InvalidParameterError(f"qubit index must be 0 or 1 for a pair, got {qubit!r}")
    confusion = readout_matrix(xi0, xi1)
    branches = measurement_branches(state, (qubit,))
    p1 = min(1.0, max(0.0, branches[(1,)][0]))
    true_bit = int(rng.random() < p1)
    prob, sigma = branches[(true_bit,)]
    reported = true_bit ^ int(rng.random() < confusion[true_bit, 1 - true_bit])
    return reported, sigma / prob, true_bit
