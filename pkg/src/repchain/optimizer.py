"""Hardware cost, target penalty, genetic algorithm and hill-climbing refinement."""
import concurrent.futures
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import InvalidParameterError
from .analytics import TARGETS_A, Targets
from .hardware import (
    BASELINE,
    DEFAULT_BOUNDS,
    DOUBLE_CLICK,
    SCHEMES,
    SINGLE_CLICK,
    Genome,
    genome_to_params,
)
from .simulation import PHASE_GA, PHASE_HILL_CLIMB, ChainConfig, estimate_metrics

KNOBS = ("efficiency", "p_emd", "k_gates", "T1", "T2")
GENES = ("alpha", "efficiency", "p_emd", "k_gates", "T1", "T2", "scheme")
LOG_UNIFORM_GENES = ("k_gates", "T1", "T2")


@dataclass(frozen=True)
class CostBreakdown:
    """Per-knob hardware costs, the target penalty and the weighted total."""

    terms: dict
    hardware_cost: float
    penalty: float
    total: float
    mean_fidelity: float = float("nan")
    rate_hz: float = float("nan")

    @property
    def feasible(self):
        return self.penalty == 0.0

    def to_dict(self):
        return dataclasses.asdict(self)


def _knob_q(g, base):
    """No-imperfection probabilities of the genome and of the baseline."""
    eff_base = base.eta_f if g.link_protocol == SINGLE_CLICK else base.f_elem
    return {
        "efficiency": (g.efficiency, eff_base),
        "p_emd": (g.p_emd, base.p_emd),
        "k_gates": (1.0 - base.p2 / g.k_gates, 1.0 - base.p2),
        "T1": (math.exp(-base.T1 / g.T1), math.exp(-1.0)),
        "T2": (math.exp(-base.T2 / g.T2), math.exp(-1.0)),
    }


def knob_cost(q, q_base):
    """Cost ``ln(q_base) / ln(q)`` of raising a no-imperfection probability to ``q``."""
    if not 0.0 < q < 1.0 or not 0.0 < q_base < 1.0:
        raise InvalidParameterError(f"cost undefined for q={q!r}, q_base={q_base!r}")
    return math.log(q_base) / math.log(q)


def hardware_cost(g, base=BASELINE):
    """Per-knob costs of genome ``g`` relative to ``base`` and their sum.

    Coherence times map to ``q = exp(-T_base / T)``, so their cost is
    ``T / T_base``.  The five gate errors share ``k_gates`` and are charged
    once through ``p2``.

    Returns
    -------
    terms : dict
    total : float
    """
    terms = {}
    for name, (q, q_base) in _knob_q(g, base).items():
        if name in ("T1", "T2"):
            terms[name] = getattr(g, name) / getattr(base, name)
        else:
            terms[name] = knob_cost(q, q_base)
    return terms, float(sum(terms.values()))


def max_hardware_cost(link_protocol=SINGLE_CLICK, base=BASELINE, bounds=DEFAULT_BOUNDS):
    """Hardware cost of the most expensive genome inside ``bounds``."""
    top = Genome(
        link_protocol=link_protocol,
        alpha=bounds.alpha[1] if link_protocol == SINGLE_CLICK else None,
        efficiency=bounds.efficiency(link_protocol)[1],
        p_emd=bounds.p_emd[1],
        k_gates=bounds.k_gates[1],
        T1=bounds.T1[1],
        T2=bounds.T2[1],
    )
    return hardware_cost(top, base)[1]


def penalty(measured, targets):
    """Sum of ``1 + (target - value)**2`` over the targets that are missed."""
    F, R = measured
    total = 0.0
    for value, target in ((F, targets.F_t), (R, targets.R_t)):
        if target - value > 0.0:
            total += 1.0 + (target - value) ** 2
    return total


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of the genetic algorithm and the hill climb.

    ``elites``, ``crossover_count`` and ``mutant_count`` default to a
    20/60/20 split of ``population``; ``realizations`` defaults to 200 for
    chains of up to three nodes and 100 otherwise; ``A`` defaults to ten
    times the largest hardware cost inside ``bounds``.
    """

    population: int = 120
    generations: int = 500
    elites: Optional[int] = None
    crossover_count: Optional[int] = None
    mutant_count: Optional[int] = None
    realizations: Optional[int] = None
    A: Optional[float] = None
    rng_seed: int = 0
    link_protocol: str = SINGLE_CLICK
    targets: Targets = TARGETS_A
    mutation_width: float = 0.2
    scheme_redraw: float = 0.2
    schemes: tuple = SCHEMES
    hill_step: float = 0.05
    hill_min_step: float = 0.001
    hill_budget: int = 500
    threads: int = 1
    base: object = field(default=BASELINE, compare=False)
    bounds: object = field(default=DEFAULT_BOUNDS, compare=False)

    def __post_init__(self):
        if self.population < 3:
            raise InvalidParameterError("population must be at least 3")
        e = self.elites if self.elites is not None else max(2, int(round(0.2 * self.population)))
        m = self.mutant_count if self.mutant_count is not None else e
        c = self.crossover_count if self.crossover_count is not None else self.population - e - m
        if min(e, m, c) < 0 or e + m + c != self.population:
            raise InvalidParameterError("elites + crossover_count + mutant_count must equal population")
        if e < 2 and c > 0:
            raise InvalidParameterError("crossover needs at least two elites")
        object.__setattr__(self, "elites", e)
        object.__setattr__(self, "mutant_count", m)
        object.__setattr__(self, "crossover_count", c)
        if self.A is None:
            object.__setattr__(self, "A", 10.0 * max_hardware_cost(self.link_protocol, self.base, self.bounds))
        if self.link_protocol not in (SINGLE_CLICK, DOUBLE_CLICK):
            raise InvalidParameterError(f"unknown link protocol {self.link_protocol!r}")
        if self.generations < 0:
            raise InvalidParameterError("generations must be non-negative")
        for s in self.schemes:
            if s not in SCHEMES:
                raise InvalidParameterError(f"unknown scheme {s!r}")

    def realizations_for(self, cfg):
        if self.realizations is not None:
            return int(self.realizations)
        return 200 if cfg.nodes <= 3 else 100

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def chain_for_genome(g, cfg, ocfg):
    """Chain configuration that simulates genome ``g`` on the geometry of ``cfg``."""
    return cfg.replace(
        hw=genome_to_params(g, ocfg.base, ocfg.bounds),
        strategy=g.strategy,
        alpha=g.alpha,
        realizations=ocfg.realizations_for(cfg),
        elementary_state=None,
    )


def total_cost(g, cfg, ocfg, phase=PHASE_GA, generation=0, individual=0):
    """Simulate ``g``, then evaluate hardware cost plus ``A`` times the penalty on the means."""
    metrics = estimate_metrics(chain_for_genome(g, cfg, ocfg), 1, phase, generation, individual)
    terms, hw_cost = hardware_cost(g, ocfg.base)
    pen = penalty((metrics.mean_fidelity, metrics.rate_hz), ocfg.targets)
    return CostBreakdown(
        terms=terms,
        hardware_cost=hw_cost,
        penalty=pen,
        total=hw_cost + ocfg.A * pen,
        mean_fidelity=metrics.mean_fidelity,
        rate_hz=metrics.rate_hz,
    )


# -- genetic algorithm --------------------------------------------------------------


def _repair(values, ocfg):
    b = ocfg.bounds
    for name in ("alpha", "efficiency", "p_emd", "k_gates", "T1", "T2"):
        if values.get(name) is None:
            continue
        lo, hi = b.efficiency(ocfg.link_protocol) if name == "efficiency" else getattr(b, name)
        values[name] = float(min(hi, max(lo, values[name])))
    # dephasing is only physical for T2 <= 2 T1
    values["T2"] = min(values["T2"], 2.0 * values["T1"])
    return Genome(link_protocol=ocfg.link_protocol, **values)


def random_genome(rng, ocfg):
    b = ocfg.bounds
    values = {}
    values["alpha"] = float(rng.uniform(*b.alpha)) if ocfg.link_protocol == SINGLE_CLICK else None
    values["efficiency"] = float(rng.uniform(*b.efficiency(ocfg.link_protocol)))
    values["p_emd"] = float(rng.uniform(*b.p_emd))
    for name in LOG_UNIFORM_GENES:
        lo, hi = getattr(b, name)
        values[name] = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
    values["scheme"] = str(ocfg.schemes[int(rng.integers(len(ocfg.schemes)))])
    return _repair(values, ocfg)


def _genes(g):
    return [getattr(g, name) for name in GENES]


def crossover(p1, p2, rng, ocfg):
    """Single-point crossover with a split point drawn from ``1 .. len(GENES) - 1``."""
    k = int(rng.integers(1, len(GENES)))
    child = _genes(p1)[:k] + _genes(p2)[k:]
    return _repair(dict(zip(GENES, child)), ocfg)


def mutate(g, rng, ocfg):
    """Log-uniform change within the mutation width of one numeric gene.

    Efficiencies are mutated through their complement ``1 - value`` so that
    values close to one keep moving.  The scheme is independently redrawn
    with probability ``scheme_redraw``.
    """
    values = dict(zip(GENES, _genes(g)))
    numeric = [n for n in GENES[:-1] if values[n] is not None]
    name = numeric[int(rng.integers(len(numeric)))]
    width = math.log1p(ocfg.mutation_width)
    factor = math.exp(rng.uniform(-width, width))
    if name == "efficiency":
        values[name] = 1.0 - (1.0 - values[name]) * factor
    else:
        values[name] = values[name] * factor
    if rng.random() < ocfg.scheme_redraw:
        values["scheme"] = str(ocfg.schemes[int(rng.integers(len(ocfg.schemes)))])
    return _repair(values, ocfg)


def _evaluate_one(args):
    g, cfg, ocfg, generation, individual = args
    return total_cost(g, cfg, ocfg, PHASE_GA, generation, individual)


def _evaluate(genomes, cfg, ocfg, generation, offset=0):
    jobs = [(g, cfg, ocfg, generation, offset + i) for i, g in enumerate(genomes)]
    if ocfg.threads and ocfg.threads > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=ocfg.threads) as pool:
            return list(pool.map(_evaluate_one, jobs))
    return [_evaluate_one(j) for j in jobs]


def _log_row(generation, population, costs):
    totals = np.array([c.total for c in costs])
    best = int(np.argmin(totals))
    row = {
        "generation": generation,
        "best_cost": float(totals[best]),
        "mean_cost": float(totals.mean()),
        "feasible_fraction": float(np.mean([c.feasible for c in costs])),
    }
    row.update(population[best].to_dict())
    return row


@dataclass
class GAResult:
    best_genome: Genome
    best_cost: CostBreakdown
    log: list
    population: list
    costs: list


def ga_run(cfg, ocfg, initial=None):
    """Run the generational loop and return the best individual found.

    Parameters
    ----------
    cfg : ChainConfig
        Geometry (distance, repeaters) and master seed of the chain.
    ocfg : OptimizerConfig
    initial : list of Genome, optional
        Starting population; drawn uniformly from the bounds when omitted.

    Returns
    -------
    GAResult
        ``log`` holds one row per generation including the initial one.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(ocfg.rng_seed), spawn_key=(PHASE_GA,)))
    if initial is None:
        population = [random_genome(rng, ocfg) for _ in range(ocfg.population)]
    else:
        population = [g.check(ocfg.bounds) for g in initial]
        if len(population) != ocfg.population:
            raise InvalidParameterError("initial population has the wrong size")
    costs = _evaluate(population, cfg, ocfg, 0)
    log = [_log_row(0, population, costs)]
    for gen in range(1, ocfg.generations + 1):
        order = np.argsort([c.total for c in costs], kind="stable")[: ocfg.elites]
        elites = [population[i] for i in order]
        elite_costs = [costs[i] for i in order]
        children = []
        for _ in range(ocfg.crossover_count):
            i, j = rng.choice(len(elites), size=2, replace=False)
            children.append(crossover(elites[i], elites[j], rng, ocfg))
        for _ in range(ocfg.mutant_count):
            children.append(mutate(elites[int(rng.integers(len(elites)))], rng, ocfg))
        child_costs = _evaluate(children, cfg, ocfg, gen, offset=ocfg.elites)
        population = elites + children
        costs = elite_costs + child_costs
        log.append(_log_row(gen, population, costs))
    best = int(np.argmin([c.total for c in costs]))
    return GAResult(population[best], costs[best], log, population, costs)


# -- hill climbing ------------------------------------------------------------------


def _step(g, name, step, cheaper):
    value = getattr(g, name)
    if name == "efficiency":
        comp = (1.0 - value) * ((1.0 + step) if cheaper else (1.0 - step))
        return g.replace(efficiency=1.0 - comp)
    return g.replace(**{name: value * ((1.0 - step) if cheaper else (1.0 + step))})


@dataclass
class HillClimbResult:
    genome: Genome
    cost: CostBreakdown
    start_cost: CostBreakdown
    evaluations: int


def hill_climb_detailed(start, cfg, ocfg):
    """Greedy one-knob-at-a-time refinement; see :func:`hill_climb`."""

    def cost(g):
        return total_cost(g, cfg, ocfg, PHASE_HILL_CLIMB, 0, 0)

    current = start.check(ocfg.bounds)
    current_cost = start_cost = cost(current)
    evaluations = 1
    steps = {name: ocfg.hill_step for name in KNOBS}
    improved = True
    while improved and evaluations < ocfg.hill_budget:
        improved = False
        for name in KNOBS:
            while steps[name] >= ocfg.hill_min_step and evaluations < ocfg.hill_budget:
                accepted = False
                for cheaper in (True, False):
                    candidate = _step(current, name, steps[name], cheaper)
                    try:
                        candidate.check(ocfg.bounds)
                    except InvalidParameterError:
                        continue
                    c = cost(candidate)
                    evaluations += 1
                    if c.total < current_cost.total:
                        current, current_cost, accepted = candidate, c, True
                        break
                    if evaluations >= ocfg.hill_budget:
                        break
                if accepted:
                    improved = True
                    break
                steps[name] /= 2.0
    return HillClimbResult(current, current_cost, start_cost, evaluations)


def hill_climb(start, cfg, ocfg):
    """Refine the hardware knobs of ``start`` while keeping its protocol fields.

    Each knob is moved by a multiplicative step, cheaper direction first.  A
    move is kept only if it lowers the total cost, evaluated with common random
    numbers; otherwise the step of that knob is halved down to
    ``hill_min_step``.  The loop ends after a sweep with no accepted move or
    when ``hill_budget`` evaluations are used.
    """
    return hill_climb_detailed(start, cfg, ocfg).genome


# -- estimator ----------------------------------------------------------------------


class RepeaterChainOptimizer(BaseEstimator):
    """Find the cheapest hardware and protocol meeting fidelity and rate targets.

    Parameters
    ----------
    total_distance : float
        End-to-end distance in km.
    num_repeaters : int
    link_protocol : {"single-click", "double-click"}
    F_t, R_t : float
        Targets for the mean fidelity and the rate in Hz.
    population, generations : int
    realizations : int, optional
        Realizations per cost evaluation; by default 200 for up to three nodes
        and 100 otherwise.
    refine : bool
        Run the hill climb on the best individual of the genetic algorithm.
    random_state : int
    n_jobs : int

    Attributes
    ----------
    best_genome_ : Genome
    best_cost_ : CostBreakdown
    history_ : list of dict
        Per-generation log.
    """

    def __init__(
        self,
        total_distance=200.0,
        num_repeaters=0,
        link_protocol=SINGLE_CLICK,
        F_t=0.8,
        R_t=1.0,
        population=120,
        generations=500,
        realizations=None,
        refine=True,
        random_state=0,
        n_jobs=1,
    ):
        self.total_distance = total_distance
        self.num_repeaters = num_repeaters
        self.link_protocol = link_protocol
        self.F_t = F_t
        self.R_t = R_t
        self.population = population
        self.generations = generations
        self.realizations = realizations
        self.refine = refine
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _configs(self):
        cfg = ChainConfig(
            total_distance=self.total_distance,
            num_repeaters=self.num_repeaters,
            alpha=0.5,
            rng_seed=self.random_state,
        )
        ocfg = OptimizerConfig(
            population=self.population,
            generations=self.generations,
            realizations=self.realizations,
            rng_seed=self.random_state,
            link_protocol=self.link_protocol,
            targets=Targets(self.F_t, self.R_t),
            threads=self.n_jobs,
        )
        return cfg, ocfg

    def fit(self, X=None, y=None):
        """Run the search; ``X`` and ``y`` are ignored."""
        cfg, ocfg = self._configs()
        result = ga_run(cfg, ocfg)
        self.history_ = result.log
        self.ga_best_genome_ = result.best_genome
        self.ga_best_cost_ = result.best_cost
        genome, cost = result.best_genome, result.best_cost
        if self.refine:
            hc = hill_climb_detailed(genome, cfg, ocfg)
            if hc.cost.total <= hc.start_cost.total:
                genome, cost = hc.genome, hc.cost
        self.best_genome_ = genome
        self.best_cost_ = cost
        return self

    def score(self, X=None, y=None):
        """Negative total cost of the best genome."""
        check_is_fitted(self, "best_cost_")
        return -self.best_cost_.total
