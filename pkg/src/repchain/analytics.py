"""Closed-form estimates for waiting times, swap chains, distance bounds and key rates."""
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._validation import (
    InvalidParameterError,
    check_in_range,
    check_non_negative,
    check_positive,
    check_probability,
)
from .hardware import BASELINE

DISTANCE_BRACKET = (1.0, 5000.0)
ROOT_XTOL = 1e-6


@dataclass(frozen=True)
class Targets:
    """Minimum end-to-end fidelity ``F_t`` and rate ``R_t`` in Hz."""

    F_t: float = 0.8
    R_t: float = 1.0

    def __post_init__(self):
        check_in_range(self.F_t, "F_t", 0.25, 1.0, low_open=True)
        check_positive(self.R_t, "R_t", allow_inf=False)


TARGETS_A = Targets(0.8, 1.0)
TARGETS_B = Targets(0.9, 0.1)


def expected_link_time(p_gen, L, T_cycle=BASELINE.T_cycle, c=BASELINE.c_fiber):
    """Mean time to herald one elementary link over ``L`` km."""
    p_gen = check_probability(p_gen, "p_gen")
    if p_gen == 0.0:
        raise InvalidParameterError("p_gen must be positive")
    L = check_non_negative(L, "L")
    return (T_cycle + 2.0 * (L / 2.0) / c) / p_gen


def purification_waiting_time(T0, d, p_succ_seq):
    """Mean time to purify a pair ``d`` times with fresh pairs.

    Iterates ``T[k+1] = (T[k] + T0) / p[k]`` from ``T[0] = T0``.

    Parameters
    ----------
    T0 : float
        Mean time to obtain one unpurified pair.
    d : int
        Number of purification rounds.
    p_succ_seq : float or sequence of float
        Success probability of round ``k``; a scalar is used for every round.
    """
    if int(d) != d or d < 0:
        raise InvalidParameterError(f"d must be a non-negative integer, got {d!r}")
    probs = np.broadcast_to(np.asarray(p_succ_seq, dtype=float), (max(int(d), 1),))
    T = float(T0)
    for k in range(int(d)):
        p = check_probability(probs[k], "p_succ")
        if p == 0.0:
            raise InvalidParameterError("purification never succeeds")
        T = (T + T0) / p
    return T


def purification_waiting_time_closed(T0, d, p):
    """Unrolled form of :func:`purification_waiting_time` for a constant ``p``."""
    return T0 / p**d + T0 * sum(p ** (-j) for j in range(1, int(d) + 1))


def swap_bracket(hw):
    """Werner-parameter factor contributed by one noisy swap."""
    s = 3.0 + 4.0 * (hw.xi0 * hw.xi1 - hw.xi0 - hw.xi1)
    return (1.0 - hw.p1) ** 2 * (1.0 - hw.p2) * s / 3.0


def swap_chain_fidelity(F_elem, L_links, hw=BASELINE):
    """Fidelity of ``L_links`` Werner links of fidelity ``F_elem`` joined by swaps."""
    F_elem = check_in_range(F_elem, "F_elem", 0.25, 1.0)
    if int(L_links) != L_links or L_links < 1:
        raise InvalidParameterError(f"L_links must be a positive integer, got {L_links!r}")
    w = (4.0 * F_elem - 1.0) / 3.0
    return 0.25 + 0.75 * swap_bracket(hw) ** (L_links - 1) * w**L_links


def _fiber_transmission(L, alpha_att):
    return 10.0 ** (-(alpha_att / 10.0) * L)


def loss_only_rate(L_node, alpha, repeaters, hw=BASELINE, p_emd=1.0):
    """Rate bound of the loss-only model for internode distance ``L_node``.

    One link succeeds with ``2 * alpha * p_emd * eta(L_node/2)`` per attempt of
    length ``T_cycle + L_node/c``; with repeaters a node serves its two
    neighbours in turn, which halves the rate.
    """
    p_gen = 2.0 * alpha * p_emd * _fiber_transmission(L_node / 2.0, hw.alpha_att)
    rate = p_gen / (hw.T_cycle + L_node / hw.c_fiber)
    return rate / 2.0 if repeaters > 0 else rate


def _solve_distance(alpha, targets, repeaters, hw, p_emd):
    segments = repeaters + 1

    def f(D):
        return loss_only_rate(D / segments, alpha, repeaters, hw, p_emd) - targets.R_t

    lo, hi = DISTANCE_BRACKET
    if f(lo) * f(hi) > 0.0:
        raise InvalidParameterError("no sign change of the rate condition on the distance bracket")
    return brentq(f, lo, hi, xtol=ROOT_XTOL)


def max_distance_rate_only(targets=TARGETS_A, repeaters=0, hw=BASELINE, p_emd=1.0):
    """Largest total distance meeting the rate target with ``alpha = 0.5``.

    Memories and gates are ideal; only fiber loss and ``p_emd`` limit the rate.
    """
    return _solve_distance(0.5, targets, int(repeaters), hw, p_emd)


def swap_asap_alpha(F_t, repeaters):
    """Bright-state weight at which ``repeaters + 1`` ideal links swap to fidelity ``F_t``."""
    links = int(repeaters) + 1
    w = ((F_t - 0.25) * 4.0 / 3.0) ** (1.0 / links)
    return 0.75 * (1.0 - w)


def max_distance_swap_asap(targets=TARGETS_A, repeaters=0, hw=BASELINE, p_emd=1.0):
    """Largest total distance meeting both targets with ideal SWAP-ASAP.

    The fidelity condition fixes ``alpha`` in closed form; the distance then
    solves the rate condition.

    Returns
    -------
    distance : float
        Total distance in km.
    alpha : float
    """
    alpha = swap_asap_alpha(targets.F_t, repeaters)
    if not 0.0 < alpha <= 0.5:
        raise InvalidParameterError("fidelity target cannot be met by single-click links")
    return _solve_distance(alpha, targets, int(repeaters), hw, p_emd), alpha


def qber_from_fidelity(F):
    F = check_in_range(F, "F", 0.25, 1.0)
    return 2.0 * (1.0 - F) / 3.0


def fidelity_from_qber(Q):
    Q = check_in_range(Q, "Q", 0.0, 0.5)
    return 1.0 - 3.0 * Q / 2.0


def binary_entropy(Q):
    """Shannon entropy in bits with ``H(0) = H(1) = 0``."""
    Q = check_probability(Q, "Q")
    if Q in (0.0, 1.0):
        return 0.0
    return -Q * math.log2(Q) - (1.0 - Q) * math.log2(1.0 - Q)


def secret_key_rate(R, Q):
    """BB84 key rate ``R * max(0, 1 - 2 H(Q))``."""
    Q = check_in_range(Q, "Q", 0.0, 0.5)
    return float(R) * max(0.0, 1.0 - 2.0 * binary_entropy(Q))


def qber_threshold():
    """Largest QBER with a positive key rate."""
    return brentq(lambda q: 1.0 - 2.0 * binary_entropy(q), 0.01, 0.49, xtol=1e-14)
