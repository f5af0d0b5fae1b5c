"""Hardware parameters, the baseline, the search space and the genome mapping."""
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

from ._validation import (
    InvalidParameterError,
    check_coherence_times,
    check_in_range,
    check_non_negative,
    check_positive,
    check_probability,
)

SINGLE_CLICK = "single-click"
DOUBLE_CLICK = "double-click"
LINK_PROTOCOLS = (SINGLE_CLICK, DOUBLE_CLICK)

SWAP_ASAP = "swap-asap"
BDCZ = "bdcz"
CHAIN_PROTOCOLS = (SWAP_ASAP, BDCZ)

PURIFY_NONE = "none"
PURIFY_EPL = "epl"
PURIFY_DEJMPS = "dejmps"
PURIFICATIONS = (PURIFY_NONE, PURIFY_EPL, PURIFY_DEJMPS)

# the five valid chain schemes explored by the optimizer
SCHEMES = ("swap-asap", "bdcz-epl", "bdcz-dejmps-1", "bdcz-dejmps-2", "bdcz-dejmps-3")

GATE_ERROR_FIELDS = ("p1", "p2", "xi0", "xi1", "p_init")
HOUR = 3600.0


@dataclass(frozen=True)
class HardwareParams:
    """Physical parameters of every node and fiber in the chain.

    Error quantities are probabilities of the corresponding fault; times are
    in seconds, distances in km and ``alpha_att`` in dB/km.
    """

    p1: float = 0.004 / 3.0
    p2: float = 0.02
    xi0: float = 0.05
    xi1: float = 0.005
    p_init: float = 0.02
    T1: float = HOUR
    T2: float = 1.0
    p_emd: float = 0.0046
    eta_f: float = 0.9196
    f_elem: float = 0.92
    V: float = 1.0
    p_double: float = 0.0
    sigma_phi: float = 0.0
    alpha_att: float = 0.2
    c_fiber: float = 2.0e5
    T_cycle: float = 3.8e-6
    t_gate1: float = 20e-6
    t_gate2: float = 500e-6
    t_init: float = 310e-6
    t_meas: float = 3.7e-6
    N_qb: int = 4

    def __post_init__(self):
        for name in ("p1", "p2", "xi0", "xi1", "p_init", "p_emd", "V", "p_double"):
            check_probability(getattr(self, name), name)
        check_in_range(self.eta_f, "eta_f", 0.0, 1.0, low_open=True)
        check_in_range(self.f_elem, "f_elem", 0.0, 1.0, low_open=True)
        check_coherence_times(self.T1, self.T2)
        check_non_negative(self.sigma_phi, "sigma_phi")
        check_non_negative(self.alpha_att, "alpha_att")
        check_positive(self.c_fiber, "c_fiber", allow_inf=False)
        for name in ("T_cycle", "t_gate1", "t_gate2", "t_init", "t_meas"):
            check_non_negative(getattr(self, name), name)
        if int(self.N_qb) != self.N_qb or self.N_qb < 2:
            raise InvalidParameterError(f"N_qb must be an integer >= 2, got {self.N_qb!r}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def noiseless(self):
        """Copy with every gate, readout and memory error switched off."""
        return self.replace(p1=0.0, p2=0.0, xi0=0.0, xi1=0.0, p_init=0.0,
                            T1=math.inf, T2=math.inf)

    def with_decoherence_off(self):
        return self.replace(T1=math.inf, T2=math.inf)

    def to_dict(self):
        return dataclasses.asdict(self)


BASELINE = HardwareParams()


@dataclass(frozen=True)
class Strategy:
    """Link protocol, chain policy and purification choice for one run."""

    link_protocol: str = SINGLE_CLICK
    chain_protocol: str = SWAP_ASAP
    purification: str = PURIFY_NONE
    rounds: int = 0

    def __post_init__(self):
        if self.link_protocol not in LINK_PROTOCOLS:
            raise InvalidParameterError(f"unknown link protocol {self.link_protocol!r}")
        if self.chain_protocol not in CHAIN_PROTOCOLS:
            raise InvalidParameterError(f"unknown chain protocol {self.chain_protocol!r}")
        if self.purification not in PURIFICATIONS:
            raise InvalidParameterError(f"unknown purification {self.purification!r}")
        if self.chain_protocol == SWAP_ASAP and self.purification != PURIFY_NONE:
            raise InvalidParameterError("SWAP-ASAP does not purify")
        if self.purification == PURIFY_DEJMPS and self.rounds not in (1, 2, 3):
            raise InvalidParameterError(f"DEJMPS rounds must be 1, 2 or 3, got {self.rounds!r}")
        if self.purification == PURIFY_EPL and self.rounds != 1:
            object.__setattr__(self, "rounds", 1)
        if self.purification == PURIFY_NONE and self.rounds != 0:
            object.__setattr__(self, "rounds", 0)

    @classmethod
    def from_scheme(cls, scheme, link_protocol=SINGLE_CLICK):
        if scheme == "swap-asap":
            return cls(link_protocol, SWAP_ASAP, PURIFY_NONE, 0)
        if scheme == "bdcz":
            return cls(link_protocol, BDCZ, PURIFY_NONE, 0)
        if scheme == "bdcz-epl":
            return cls(link_protocol, BDCZ, PURIFY_EPL, 1)
        if scheme.startswith("bdcz-dejmps-"):
            return cls(link_protocol, BDCZ, PURIFY_DEJMPS, int(scheme.rsplit("-", 1)[1]))
        raise InvalidParameterError(f"unknown scheme {scheme!r}")

    @property
    def scheme(self):
        if self.chain_protocol == SWAP_ASAP:
            return "swap-asap"
        if self.purification == PURIFY_NONE:
            return "bdcz"
        if self.purification == PURIFY_EPL:
            return "bdcz-epl"
        return f"bdcz-dejmps-{self.rounds}"


@dataclass(frozen=True)
class Bounds:
    """Box constraints of the optimizer search space.

    Upper limits that are open intervals are represented by ``open_upper``, the
    largest value the optimizer will propose.
    """

    alpha: tuple = (1e-4, 0.5)
    eta_f: tuple = (0.9196, 0.9999)
    f_elem: tuple = (0.92, 0.9999)
    p_emd: tuple = (0.0046, 0.9999)
    k_gates: tuple = (1.0, 1e4)
    T1: tuple = (HOUR, 1e3 * HOUR)
    T2: tuple = (1.0, 1e5)

    def efficiency(self, link_protocol):
        return self.eta_f if link_protocol == SINGLE_CLICK else self.f_elem

    def to_dict(self):
        return dataclasses.asdict(self)


DEFAULT_BOUNDS = Bounds()


@dataclass(frozen=True)
class Genome:
    """One candidate in the joint hardware and protocol search space.

    ``efficiency`` is the single-click state efficiency ``eta_f`` or the
    double-click elementary fidelity ``f_elem`` depending on ``link_protocol``;
    ``alpha`` is ``None`` for double-click links.
    """

    link_protocol: str = SINGLE_CLICK
    alpha: Optional[float] = 0.5
    efficiency: float = 0.9196
    p_emd: float = 0.0046
    k_gates: float = 1.0
    T1: float = HOUR
    T2: float = 1.0
    scheme: str = "swap-asap"

    NUMERIC_FIELDS = ("alpha", "efficiency", "p_emd", "k_gates", "T1", "T2")

    def check(self, bounds=DEFAULT_BOUNDS):
        """Raise ``InvalidParameterError`` unless every field is inside ``bounds``."""
        if self.link_protocol not in LINK_PROTOCOLS:
            raise InvalidParameterError(f"unknown link protocol {self.link_protocol!r}")
        if self.scheme not in SCHEMES and self.scheme != "bdcz":
            raise InvalidParameterError(f"unknown scheme {self.scheme!r}")
        if self.link_protocol == SINGLE_CLICK:
            if self.alpha is None:
                raise InvalidParameterError("single-click genome needs alpha")
            check_in_range(self.alpha, "alpha", *bounds.alpha)
        elif self.alpha is not None:
            raise InvalidParameterError("double-click genome carries no alpha")
        check_in_range(self.efficiency, "efficiency", *bounds.efficiency(self.link_protocol))
        for name in ("p_emd", "k_gates", "T1", "T2"):
            check_in_range(getattr(self, name), name, *getattr(bounds, name))
        check_coherence_times(self.T1, self.T2)
        return self

    @property
    def strategy(self):
        return Strategy.from_scheme(self.scheme, self.link_protocol)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return {
            "link_protocol": self.link_protocol,
            "alpha": self.alpha,
            "efficiency": self.efficiency,
            "p_emd": self.p_emd,
            "k_gates": self.k_gates,
            "T1": self.T1,
            "T2": self.T2,
            "scheme": self.scheme,
        }

    @classmethod
    def baseline(cls, link_protocol=SINGLE_CLICK, alpha=0.5, scheme="swap-asap", base=BASELINE):
        eff = base.eta_f if link_protocol == SINGLE_CLICK else base.f_elem
        return cls(
            link_protocol=link_protocol,
            alpha=alpha if link_protocol == SINGLE_CLICK else None,
            efficiency=eff,
            p_emd=base.p_emd,
            k_gates=1.0,
            T1=base.T1,
            T2=base.T2,
            scheme=scheme,
        )


def genome_to_params(g, base=BASELINE, bounds=DEFAULT_BOUNDS):
    """Hardware parameters described by genome ``g``.

    The five gate-based error probabilities are divided by ``k_gates``; the
    efficiency, ``p_emd`` and coherence times are taken from the genome and
    everything else is copied from ``base``.
    """
    g.check(bounds)
    changes = {name: getattr(base, name) / g.k_gates for name in GATE_ERROR_FIELDS}
    if g.link_protocol == SINGLE_CLICK:
        changes["eta_f"] = g.efficiency
    else:
        changes["f_elem"] = g.efficiency
        changes["V"] = 1.0
    return base.replace(p_emd=g.p_emd, T1=g.T1, T2=g.T2, **changes)


def derived_state_efficiency(V, p_double, sigma_phi):
    """Single-click state efficiency from visibility, double excitation and phase noise.

    Parameters
    ----------
    V : float
        Two-photon interference visibility.
    p_double : float
        Probability of a double excitation.
    sigma_phi : float
        Standard deviation of the optical phase, in radians.

    Returns
    -------
    float
        ``(1 + sqrt(V))/2 * (1 - p_ph)`` where ``p_ph`` is the probability that
        the heralded state carries a phase flip.
    """
    V = check_probability(V, "V")
    p_d = check_probability(p_double, "p_double")
    sigma_phi = check_non_negative(sigma_phi, "sigma_phi")
    p_phi = 0.5 * (1.0 - math.exp(-0.5 * sigma_phi**2))
    p_ph = (1.0 - p_phi) * p_d * (1.0 - p_d) + p_phi * p_d**2 * (1.0 - p_d) ** 2
    return 0.5 * (1.0 + math.sqrt(V)) * (1.0 - p_ph)
