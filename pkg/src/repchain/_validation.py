"""Input validation helpers shared by the estimators, simulator and CLI."""
import math

import numpy as np

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10


class InvalidParameterError(ValueError):
    """A parameter is outside the domain where the model is defined."""


def check_probability(value, name):
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def check_positive(value, name, allow_inf=True):
    value = float(value)
    if not value > 0.0 or (math.isinf(value) and not allow_inf):
        raise InvalidParameterError(f"{name} must be positive, got {value!r}")
    return value


def check_non_negative(value, name):
    value = float(value)
    if not value >= 0.0:
        raise InvalidParameterError(f"{name} must be non-negative, got {value!r}")
    return value


def check_in_range(value, name, low, high, low_open=False, high_open=False):
    value = float(value)
    below = value <= low if low_open else value < low
    above = value >= high if high_open else value > high
    if below or above or math.isnan(value):
        lb = "(" if low_open else "["
        rb = ")" if high_open else "]"
        raise InvalidParameterError(f"{name} must lie in {lb}{low}, {high}{rb}, got {value!r}")
    return value


def check_coherence_times(T1, T2):
    """Validate a (T1, T2) pair; dephasing is only a valid channel for T2 <= 2*T1.

    An infinite ``T2`` switches the extra dephasing off and is always accepted.
    """
    T1 = check_positive(T1, "T1")
    T2 = check_positive(T2, "T2")
    if T2 > 2.0 * T1 and not math.isinf(T2):
        raise InvalidParameterError(f"T2 <= 2*T1 required, got T1={T1!r}, T2={T2!r}")
    return T1, T2


def check_density_matrix(rho, n_qubits=2):
    """Return ``rho`` as a complex array after checking it is a valid density matrix.

    Raises
    ------
    InvalidParameterError
        If the shape is wrong, or ``rho`` is not Hermitian, unit-trace and
        positive semidefinite within the module tolerances.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = 2**n_qubits
    if rho.shape != (dim, dim):
        raise InvalidParameterError(f"expected a {dim}x{dim} density matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, rtol=0.0, atol=HERMITIAN_ATOL):
        raise InvalidParameterError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_ATOL:
        raise InvalidParameterError(f"density matrix trace is {np.trace(rho).real!r}, not 1")
    if np.linalg.eigvalsh(rho).min() < -PSD_ATOL:
        raise InvalidParameterError("density matrix has a negative eigenvalue")
    return rho
