import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repchain._validation import InvalidParameterError
from repchain.analytics import (
    TARGETS_A,
    TARGETS_B,
    Targets,
    binary_entropy,
    expected_link_time,
    fidelity_from_qber,
    loss_only_rate,
    max_distance_rate_only,
    max_distance_swap_asap,
    purification_waiting_time,
    purification_waiting_time_closed,
    qber_from_fidelity,
    qber_threshold,
    secret_key_rate,
    swap_chain_fidelity,
)
from repchain.hardware import BASELINE
from repchain.protocols import entanglement_swap
from repchain.quantum import BellKind, fidelity, werner_state

NOISELESS = BASELINE.noiseless()
TABLE_HW = BASELINE.replace(alpha_att=0.22, c_fiber=208189.207)


class TestTargets:
    def test_presets(self):
        assert (TARGETS_A.F_t, TARGETS_A.R_t) == (0.8, 1.0)
        assert (TARGETS_B.F_t, TARGETS_B.R_t) == (0.9, 0.1)

    @pytest.mark.parametrize("F, R", [(0.25, 1.0), (1.1, 1.0), (0.9, 0.0)])
    def test_invalid(self, F, R):
        with pytest.raises(InvalidParameterError):
            Targets(F, R)


class TestWaitingTimes:
    def test_link_examples(self):
        assert expected_link_time(1.0, 100) == pytest.approx(3.8e-6 + 5e-4)
        assert expected_link_time(4.6e-4, 100) == pytest.approx(1.0952, abs=1e-4)
        assert expected_link_time(1.0, 0.0) == BASELINE.T_cycle

    def test_link_zero_probability(self):
        with pytest.raises(InvalidParameterError):
            expected_link_time(0.0, 10)

    def test_recursion_examples(self):
        assert purification_waiting_time(2.5, 0, 0.3) == 2.5
        assert purification_waiting_time(1.0, 1, 0.5) == 4.0
        assert purification_waiting_time(1.0, 2, [0.5, 0.25]) == pytest.approx((4 + 1) / 0.25)

    def test_recursion_zero(self):
        with pytest.raises(InvalidParameterError):
            purification_waiting_time(1.0, 2, [0.5, 0.0])

    @given(st.floats(1e-3, 10), st.integers(0, 3), st.floats(0.05, 1))
    def test_closed_form_matches(self, T0, d, p):
        assert purification_waiting_time_closed(T0, d, p) == pytest.approx(
            purification_waiting_time(T0, d, p), rel=1e-12
        )


class TestSwapChain:
    def test_examples(self):
        assert swap_chain_fidelity(1.0, 5, NOISELESS) == pytest.approx(1.0)
        assert swap_chain_fidelity(0.95, 2, NOISELESS) == pytest.approx(0.903333, abs=1e-6)
        assert swap_chain_fidelity(1 - 0.2, 1, NOISELESS) == pytest.approx(0.8)

    @pytest.mark.parametrize("links", [2, 3, 4])
    @pytest.mark.parametrize("F", [0.8, 0.97])
    def test_matches_sequential_swaps(self, links, F):
        state = werner_state(F)
        for _ in range(links - 1):
            state = entanglement_swap(state, werner_state(F), BASELINE).state
        assert fidelity(state, BellKind.PSI_PLUS) == pytest.approx(
            swap_chain_fidelity(F, links, BASELINE), abs=1e-12
        )

    @given(st.floats(0.26, 1), st.integers(1, 8))
    def test_decreasing_in_length(self, F, n):
        assert swap_chain_fidelity(F, n + 1, BASELINE) <= swap_chain_fidelity(F, n, BASELINE) + 1e-15


class TestMaxDistance:
    def test_rate_condition_holds_at_root(self):
        for n in (0, 1, 3):
            D = max_distance_rate_only(TARGETS_A, n, TABLE_HW)
            assert loss_only_rate(D / (n + 1), 0.5, n, TABLE_HW) == pytest.approx(1.0, rel=1e-6)

    def test_loss_only_rate_by_hand(self):
        # 2 * 0.5 * 10**(-0.22 * 50 / 10) per attempt of 3.8 us + 100 km / c
        expected = 10 ** (-1.1) / (3.8e-6 + 100 / 208189.207)
        assert loss_only_rate(100, 0.5, 0, TABLE_HW) == pytest.approx(expected, rel=1e-12)
        assert loss_only_rate(100, 0.5, 1, TABLE_HW) == pytest.approx(expected / 2, rel=1e-12)

    def test_swap_asap_alpha(self):
        _, alpha = max_distance_swap_asap(TARGETS_A, 0, TABLE_HW)
        assert alpha == pytest.approx(0.2, abs=1e-12)
        _, alpha = max_distance_swap_asap(TARGETS_A, 1, TABLE_HW)
        assert swap_chain_fidelity(1 - alpha, 2, NOISELESS) == pytest.approx(0.8, abs=1e-12)

    @pytest.mark.parametrize("targets", [TARGETS_A, TARGETS_B])
    @pytest.mark.parametrize("n", [0, 1, 3, 7])
    def test_ordering(self, targets, n):
        assert max_distance_rate_only(targets, n, TABLE_HW) >= max_distance_swap_asap(targets, n, TABLE_HW)[0]

    @pytest.mark.parametrize("targets", [TARGETS_A, TARGETS_B])
    def test_internode_distance_constant_with_repeaters(self, targets):
        per_node = [max_distance_rate_only(targets, n, TABLE_HW) / (n + 1) for n in (1, 3, 7)]
        assert max(per_node) - min(per_node) < 1.0

    def test_no_root(self):
        with pytest.raises(InvalidParameterError):
            max_distance_rate_only(Targets(0.8, 1e9), 0, TABLE_HW)


class TestKeyRate:
    def test_examples(self):
        assert qber_from_fidelity(1.0) == 0.0
        assert fidelity_from_qber(0.2) == pytest.approx(0.7, abs=1e-15)
        assert secret_key_rate(5.0, 0.0) == 5.0
        assert secret_key_rate(5.0, 0.25) == 0.0
        assert binary_entropy(0.25) == pytest.approx(0.811278, abs=1e-6)

    def test_threshold(self):
        q = qber_threshold()
        assert q == pytest.approx(0.110028, abs=1e-6)
        assert fidelity_from_qber(q) == pytest.approx(0.834958, abs=1e-6)
        assert secret_key_rate(1.0, q) == pytest.approx(0.0, abs=1e-12)
        assert secret_key_rate(1.0, 0.11) == pytest.approx(0.0, abs=1e-3)

    def test_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            qber_from_fidelity(0.2)
        with pytest.raises(InvalidParameterError):
            fidelity_from_qber(0.6)

    @given(st.floats(0.25, 1.0))
    def test_round_trip(self, F):
        assert fidelity_from_qber(qber_from_fidelity(F)) == pytest.approx(F, abs=1e-12)

    @given(st.floats(0, 0.5), st.floats(0, 0.5))
    def test_key_rate_monotone(self, q1, q2):
        lo, hi = sorted((q1, q2))
        assert secret_key_rate(1.0, hi) <= secret_key_rate(1.0, lo)

    @given(st.floats(0, 1))
    def test_entropy_symmetric(self, q):
        assert binary_entropy(q) == pytest.approx(binary_entropy(1 - q), abs=1e-12)
        assert 0 <= binary_entropy(q) <= 1 + 1e-15
