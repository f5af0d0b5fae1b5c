"""Heralded entanglement generation between neighbouring nodes."""
from dataclasses import dataclass

import numpy as np

from ._validation import (
    InvalidParameterError,
    check_in_range,
    check_non_negative,
    check_positive,
    check_probability,
)
from .hardware import DOUBLE_CLICK, SINGLE_CLICK
from .quantum import BellKind, bell_state

_KET11 = np.diag([0, 0, 0, 1]).astype(complex)
_KET00 = np.diag([1, 0, 0, 0]).astype(complex)


@dataclass(frozen=True)
class LinkAttemptModel:
    """Statistics of one attempt and the state delivered when it succeeds."""

    protocol: str
    p_det: float
    p_succ: float
    attempt_time: float
    output_state: np.ndarray

    @property
    def fidelity(self):
        v = self.output_state
        return float(np.real(v[1, 1] + v[2, 2] + v[1, 2] + v[2, 1])) / 2.0


def detection_probability(p_emd, L, alpha_att=0.2):
    """Probability that a photon emitted towards the midpoint station is detected.

    Parameters
    ----------
    p_emd : float
        Emission, collection and detection efficiency excluding fiber loss.
    L : float
        Internode distance in km; the photon travels ``L/2``.
    alpha_att : float
        Fiber attenuation in dB/km.
    """
    p_emd = check_probability(p_emd, "p_emd")
    L = check_non_negative(L, "L")
    return p_emd * 10.0 ** (-(alpha_att / 10.0) * (L / 2.0))


def single_click_state(alpha, eta_f):
    """Heralded single-click state targeting Psi+.

    The entangled part is dephased in the Bell basis so that the overlap with
    Psi+ is ``(1 - alpha) * eta_f``; the remaining ``alpha`` weight sits on |11>.
    """
    return (1.0 - alpha) * (
        eta_f * bell_state(BellKind.PSI_PLUS) + (1.0 - eta_f) * bell_state(BellKind.PSI_MINUS)
    ) + alpha * _KET11


def double_click_state(f_lm, V=1.0):
    psi = 0.5 * f_lm * (
        (1.0 + V) * bell_state(BellKind.PSI_PLUS) + (1.0 - V) * bell_state(BellKind.PSI_MINUS)
    )
    return psi + 0.5 * (1.0 - f_lm) * (_KET00 + _KET11)


def _attempt_time(L, c, T_cycle):
    check_positive(c, "c", allow_inf=False)
    check_non_negative(T_cycle, "T_cycle")
    # photon to the midpoint plus the herald back: L/2/c each way
    return check_non_negative(L, "L") / c + T_cycle


def single_click_model(alpha, eta_f, p_det, L, c=2.0e5, T_cycle=0.0):
    """Attempt model of the single-click protocol with bright-state weight ``alpha``."""
    alpha = check_in_range(alpha, "alpha", 0.0, 0.5, low_open=True)
    eta_f = check_probability(eta_f, "eta_f")
    p_det = check_probability(p_det, "p_det")
    return LinkAttemptModel(
        protocol=SINGLE_CLICK,
        p_det=p_det,
        p_succ=2.0 * p_det * alpha,
        attempt_time=_attempt_time(L, c, T_cycle),
        output_state=single_click_state(alpha, eta_f),
    )


def double_click_model(f_lm, V, p_det, L, c=2.0e5, T_cycle=0.0):
    """Attempt model of the double-click protocol; success needs both photons."""
    f_lm = check_probability(f_lm, "f_lm")
    V = check_probability(V, "V")
    p_det = check_probability(p_det, "p_det")
    return LinkAttemptModel(
        protocol=DOUBLE_CLICK,
        p_det=p_det,
        p_succ=0.5 * p_det**2,
        attempt_time=_attempt_time(L, c, T_cycle),
        output_state=double_click_state(f_lm, V),
    )


def link_model(hw, strategy, L, alpha=None, include_cycle_time=True):
    """Attempt model for the hardware ``hw`` and the link protocol of ``strategy``."""
    p_det = detection_probability(hw.p_emd, L, hw.alpha_att)
    T_cycle = hw.T_cycle if include_cycle_time else 0.0
    if strategy.link_protocol == SINGLE_CLICK:
        if alpha is None:
            raise InvalidParameterError("single-click links need alpha")
        return single_click_model(alpha, hw.eta_f, p_det, L, hw.c_fiber, T_cycle)
    return double_click_model(hw.f_elem, hw.V, p_det, L, hw.c_fiber, T_cycle)


def sample_attempts(p_succ, rng):
    """Number of attempts up to and including the first success."""
    p_succ = check_probability(p_succ, "p_succ")
    if p_succ == 0.0:
        raise InvalidParameterError("never-succeeds: p_succ is zero")
    return int(rng.geometric(p_succ))
