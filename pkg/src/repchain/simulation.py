"""Event-driven simulation of an equally spaced repeater chain.

A chain has ``2**n + 1`` nodes.  Each neighbouring segment runs heralded
generation; pairs decohere lazily in memory and are combined by swaps
following SWAP-ASAP or the nested BDCZ hierarchy, optionally purifying the
elementary links first.

Scheduling rules
----------------
* A node generates with at most one neighbour at a time and not while it is
  executing a local operation.
* A segment is eligible for generation when no stored pair spans it (except
  the pair held for purification) and both nodes have a free memory slot.
  Eligible segments are served in order of fewest links generated so far, ties
  to the left.
* SWAP-ASAP swaps as soon as a repeater holds a pair on each side.  A BDCZ
  node at height ``h`` swaps pairs spanning ``2**(h-1)`` segments on each side
  once it has learned of both.
* The chain is done when both end nodes know they share a pair.
"""
import concurrent.futures
import dataclasses
import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import InvalidParameterError, check_density_matrix, check_positive
from .hardware import (
    BDCZ,
    PURIFY_DEJMPS,
    PURIFY_EPL,
    PURIFY_NONE,
    SINGLE_CLICK,
    SWAP_ASAP,
    HardwareParams,
    Strategy,
)
from .links import link_model, sample_attempts
from .protocols import dejmps_round, entanglement_swap, epl_round
from .quantum import BellKind, apply_pauli, decohere, fidelity

PHASE_SIMULATE = 0
PHASE_GA = 1
PHASE_HILL_CLIMB = 2


class SimulationError(RuntimeError):
    """The event loop reached an inconsistent or stuck state."""


def derive_seed(master_seed, phase=PHASE_SIMULATE, generation=0, individual=0, realization=0):
    """Independent random stream for one realization.

    Streams are keyed by ``(phase, generation, individual, realization)`` under
    the master seed, so results do not depend on how work is scheduled.
    """
    ss = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(int(phase), int(generation), int(individual), int(realization))
    )
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class ChainConfig:
    """Everything needed to simulate one chain.

    Parameters
    ----------
    total_distance : float
        End-to-end distance in km.
    num_repeaters : int
        Number of intermediate nodes; ``num_repeaters + 1`` must be a power of two.
    alpha : float, optional
        Bright-state weight, required for single-click links.
    include_cycle_time : bool
        Add the emission delay ``T_cycle`` to every attempt.
    elementary_state : np.ndarray, optional
        Replace the heralded state with a fixed Psi+-targeted pair.
    """

    total_distance: float = 100.0
    num_repeaters: int = 0
    strategy: Strategy = Strategy()
    hw: HardwareParams = HardwareParams()
    alpha: Optional[float] = 0.5
    realizations: int = 100
    rng_seed: int = 0
    include_cycle_time: bool = True
    elementary_state: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        check_positive(self.total_distance, "total_distance", allow_inf=False)
        n_seg = int(self.num_repeaters) + 1
        if self.num_repeaters < 0 or n_seg & (n_seg - 1):
            raise InvalidParameterError(
                f"nodes must number 2**n + 1; got {self.num_repeaters} repeaters"
            )
        if int(self.realizations) < 1:
            raise InvalidParameterError("realizations must be >= 1")
        if self.strategy.link_protocol == SINGLE_CLICK and self.elementary_state is None:
            if self.alpha is None or not 0.0 < self.alpha <= 0.5:
                raise InvalidParameterError(f"single-click needs alpha in (0, 0.5], got {self.alpha!r}")
        if self.elementary_state is not None:
            object.__setattr__(self, "elementary_state", check_density_matrix(self.elementary_state))

    @property
    def nodes(self):
        return self.num_repeaters + 2

    @property
    def node_distance(self):
        return self.total_distance / (self.num_repeaters + 1)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass
class SimulationOutcome:
    end_state: np.ndarray
    duration: float
    fidelity: float
    attempts: int = 0
    swaps: int = 0
    purification_successes: int = 0
    purification_failures: int = 0
    bookkeeping_residual: float = 0.0


@dataclass
class _Pair:
    u: int
    v: int
    state: np.ndarray
    t_state: float
    created: float
    known_u: float
    known_v: float
    rounds: int = 0
    ready: bool = False
    busy: bool = False
    decohered: float = 0.0


class _ChainRun:
    def __init__(self, cfg, rng):
        self.cfg = cfg
        self.hw = cfg.hw
        self.rng = rng
        self.n = cfg.nodes
        self.L = cfg.node_distance
        self.c = cfg.hw.c_fiber
        self.strategy = cfg.strategy
        model = link_model(cfg.hw, cfg.strategy, self.L, cfg.alpha, cfg.include_cycle_time)
        self.p_succ = model.p_succ
        self.tau = model.attempt_time
        self.link_state = model.output_state if cfg.elementary_state is None else cfg.elementary_state
        self.bdcz = cfg.strategy.chain_protocol == BDCZ
        self.purify = cfg.strategy.purification if self.bdcz else PURIFY_NONE
        self.target_rounds = cfg.strategy.rounds if self.purify != PURIFY_NONE else 0
        self.levels = int(round(math.log2(self.n - 1)))

        self.pairs = {}
        self.next_id = 0
        self.heap = []
        self.seq = 0
        self.busy_until = [0.0] * self.n
        self.generating = [None] * self.n
        self.link_count = [0] * (self.n - 1)
        self.outcome = None
        self.attempts = 0
        self.swaps = 0
        self.pur_ok = 0
        self.pur_fail = 0
        self.residual = 0.0
        self.wakes = set()

    # -- helpers --------------------------------------------------------------------

    def _push(self, t, kind, data=None):
        heapq.heappush(self.heap, (t, self.seq, kind, data))
        self.seq += 1

    def _wake(self, t):
        if t not in self.wakes:
            self.wakes.add(t)
            self._push(t, "wake")

    def _advance(self, pair, t):
        dt = t - pair.t_state
        if dt > 0.0:
            s = decohere(pair.state, 0, dt, self.hw.T1, self.hw.T2)
            pair.state = decohere(s, 1, dt, self.hw.T1, self.hw.T2)
            pair.t_state = t
            pair.decohered += dt

    def _consume(self, pid, t):
        pair = self.pairs.pop(pid)
        self._advance(pair, t)
        self.residual = max(self.residual, abs(pair.decohered - (t - pair.created)))
        return pair

    def _add_pair(self, pair):
        pid = self.next_id
        self.next_id += 1
        self.pairs[pid] = pair
        for node in (pair.u, pair.v):
            if self._stored(node) > self.hw.N_qb:
                raise SimulationError(f"memory overflow at node {node}")
        return pid

    def _stored(self, node):
        return sum(1 for p in self.pairs.values() if p.u == node or p.v == node)

    def _dist(self, a, b):
        return abs(a - b) * self.L

    def _height(self, node):
        if node in (0, self.n - 1):
            return self.levels + 1
        return (node & -node).bit_length()

    # -- generation -----------------------------------------------------------------

    def _segment_eligible(self, j, t):
        a, b = j, j + 1
        for node in (a, b):
            if self.generating[node] is not None or self.busy_until[node] > t:
                return False
            if self._stored(node) + 1 > self.hw.N_qb:
                return False
        spanning = [p for p in self.pairs.values() if p.u <= a and p.v >= b]
        if not spanning:
            return True
        if self.purify == PURIFY_NONE or len(spanning) != 1:
            return False
        held = spanning[0]
        return held.u == a and held.v == b and not held.ready and not held.busy

    def _start_generation(self, j, t):
        k = sample_attempts(self.p_succ, self.rng)
        self.attempts += k
        t_end = t + k * self.tau
        self.generating[j] = j
        self.generating[j + 1] = j
        self._push(t_end, "link", j)

    def _on_link(self, j, t):
        self.generating[j] = None
        self.generating[j + 1] = None
        self.link_count[j] += 1
        emitted = t - self.L / self.c
        pair = _Pair(
            u=j,
            v=j + 1,
            state=self.link_state,
            t_state=emitted,
            created=emitted,
            known_u=t,
            known_v=t,
            ready=self.target_rounds == 0,
        )
        self._add_pair(pair)

    # -- swapping -------------------------------------------------------------------

    def _side_pairs(self, m):
        left = [(pid, p) for pid, p in self.pairs.items() if p.v == m and not p.busy and p.ready]
        right = [(pid, p) for pid, p in self.pairs.items() if p.u == m and not p.busy and p.ready]
        return left, right

    def _try_swap(self, m, t):
        if self.busy_until[m] > t or self.generating[m] is not None:
            return False
        left, right = self._side_pairs(m)
        if not left or not right:
            return False
        (lid, lp), (rid, rp) = left[0], right[0]
        if self.bdcz:
            span = 1 << (self._height(m) - 1)
            if m - lp.u != span or rp.v - m != span:
                return False
            known = max(lp.known_v, rp.known_u)
            if known > t:
                self._wake(known)
                return False
        lp = self._consume(lid, t)
        rp = self._consume(rid, t)
        result = entanglement_swap(lp.state, rp.state, self.hw)
        t_done = t + result.ops_time
        new = _Pair(
            u=lp.u,
            v=rp.v,
            state=result.state,
            t_state=t,
            created=t,
            known_u=max(lp.known_u, t_done + self._dist(m, lp.u) / self.c),
            known_v=max(rp.known_v, t_done + self._dist(m, rp.v) / self.c),
            ready=True,
            busy=True,
        )
        pid = self._add_pair(new)
        self.swaps += 1
        self.busy_until[m] = t_done
        self._push(t_done, "op_done", pid)
        return True

    # -- purification ---------------------------------------------------------------

    def _try_purify(self, j, t):
        seg = [(pid, p) for pid, p in self.pairs.items() if p.u == j and p.v == j + 1 and not p.busy]
        if len(seg) < 2:
            return False
        for node in (j, j + 1):
            if self.busy_until[node] > t or self.generating[node] is not None:
                return False
        seg.sort(key=lambda item: item[1].created)
        (hid, _), (fid, _) = seg[0], seg[1]
        held = self.pairs[hid]
        self._advance(held, t)
        fresh = self._consume(fid, t)
        if self.purify == PURIFY_EPL:
            result = epl_round(held.state, fresh.state, self.hw, self.rng)
        else:
            # run DEJMPS in the Phi+ frame: X on the second qubit maps Psi+ to Phi+
            a = apply_pauli(held.state, 1, 1)
            b = apply_pauli(fresh.state, 1, 1)
            result = dejmps_round(a, b, self.hw, self.rng)
            if result.success:
                result = dataclasses.replace(result, state=apply_pauli(result.state, 1, 1))
        t_op = t + result.ops_time
        t_known = t_op + self.L / self.c
        self.busy_until[j] = t_op
        self.busy_until[j + 1] = t_op
        held.busy = True
        if result.success:
            held.state = result.state
            held.rounds += 1
            self.pur_ok += 1
        else:
            self.pur_fail += 1
        self._wake(t_op)
        self._push(t_known, "purified", (hid, result.success))
        return True

    def _on_purified(self, hid, success, t):
        held = self.pairs[hid]
        if not success:
            self._consume(hid, t)
            return
        held.busy = False
        held.known_u = held.known_v = t
        if held.rounds >= self.target_rounds:
            held.ready = True

    # -- main loop ------------------------------------------------------------------

    def _check_done(self, pid, t):
        pair = self.pairs.get(pid)
        if pair is None or pair.busy or not pair.ready:
            return False
        if pair.u != 0 or pair.v != self.n - 1:
            return False
        t_end = max(t, pair.known_u, pair.known_v)
        final = self._consume(pid, t_end)
        state = 0.5 * (final.state + final.state.conj().T)
        self.outcome = SimulationOutcome(
            end_state=state,
            duration=t_end,
            fidelity=fidelity(state, BellKind.PSI_PLUS),
            attempts=self.attempts,
            swaps=self.swaps,
            purification_successes=self.pur_ok,
            purification_failures=self.pur_fail,
            bookkeeping_residual=self.residual,
        )
        return True

    def _progress(self, t):
        changed = True
        while changed:
            changed = False
            for pid in list(self.pairs):
                if self._check_done(pid, t):
                    return
            for m in range(1, self.n - 1):
                changed |= self._try_swap(m, t)
            if self.purify != PURIFY_NONE:
                for j in range(self.n - 1):
                    changed |= self._try_purify(j, t)
        order = sorted(range(self.n - 1), key=lambda j: (self.link_count[j], j))
        for j in order:
            if self._segment_eligible(j, t):
                self._start_generation(j, t)

    def run(self):
        self._progress(0.0)
        while self.heap and self.outcome is None:
            t, _, kind, data = heapq.heappop(self.heap)
            if kind == "link":
                self._on_link(data, t)
            elif kind == "op_done":
                self.pairs[data].busy = False
            elif kind == "purified":
                self._on_purified(*data, t)
            self._progress(t)
        if self.outcome is None:
            raise SimulationError("deadlock: no pending events and no end-to-end pair")
        return self.outcome


def run_realization(cfg, rng):
    """Simulate the chain until the end nodes share a pair.

    Parameters
    ----------
    cfg : ChainConfig
    rng : numpy.random.Generator
        Stream consumed by attempt counts and measurement outcomes.

    Returns
    -------
    SimulationOutcome
    """
    return _ChainRun(cfg, rng).run()


@dataclass(frozen=True)
class Metrics:
    """Averages over realizations; unpacks as ``(mean_fidelity, rate_hz, std_errors)``."""

    mean_fidelity: float
    rate_hz: float
    std_errors: dict
    mean_duration: float
    realizations: int

    def __iter__(self):
        return iter((self.mean_fidelity, self.rate_hz, self.std_errors))

    def to_dict(self):
        return dataclasses.asdict(self)


def _run_batch(args):
    cfg, phase, generation, individual, indices = args
    out = []
    for r in indices:
        o = run_realization(cfg, derive_seed(cfg.rng_seed, phase, generation, individual, r))
        out.append((o.fidelity, o.duration))
    return out


def simulate_many(cfg, threads=1, phase=PHASE_SIMULATE, generation=0, individual=0):
    """Per-realization ``(fidelity, duration)`` arrays in realization order."""
    n = int(cfg.realizations)
    if threads is None or threads <= 1 or n < 2:
        rows = _run_batch((cfg, phase, generation, individual, range(n)))
    else:
        chunks = [list(c) for c in np.array_split(np.arange(n), min(threads, n)) if len(c)]
        jobs = [(cfg, phase, generation, individual, [int(i) for i in c]) for c in chunks]
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            rows = [row for part in pool.map(_run_batch, jobs) for row in part]
    arr = np.asarray(rows, dtype=float)
    return arr[:, 0], arr[:, 1]


def summarize(fidelities, durations):
    n = len(fidelities)
    mean_f = float(np.mean(fidelities))
    mean_t = float(np.mean(durations))
    if n > 1:
        se_f = float(np.std(fidelities, ddof=1) / math.sqrt(n))
        se_t = float(np.std(durations, ddof=1) / math.sqrt(n))
    else:
        se_f = se_t = 0.0
    # delta method for the rate 1/mean(T)
    se_r = se_t / mean_t**2
    return Metrics(
        mean_fidelity=mean_f,
        rate_hz=1.0 / mean_t,
        std_errors={"fidelity": se_f, "rate": se_r, "duration": se_t},
        mean_duration=mean_t,
        realizations=n,
    )


def estimate_metrics(cfg, threads=1, phase=PHASE_SIMULATE, generation=0, individual=0):
    """Mean end-to-end fidelity and rate over ``cfg.realizations`` runs.

    The rate is the inverse of the mean completion time and its standard
    error follows from the delta method.
    """
    f, t = simulate_many(cfg, threads, phase, generation, individual)
    return summarize(f, t)
