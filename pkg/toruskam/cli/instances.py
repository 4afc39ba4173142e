from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from toruskam.cli.config import ExperimentConfig, planted_band
from toruskam.kam import conjugate, invert_map
from toruskam.lattice import DomainSpec, Lattice
from toruskam.loaders import ConfigLoaderException, DocumentLoader
from toruskam.series import (
    DeckSystem,
    LinearDeck,
    TaylorLaurentSeries,
    apply_linear,
    norm_upper,
    series_from_dict,
    series_to_dict,
)
from toruskam.utils.logger import logger


class Instance(BaseModel):
    """
    A generated (or loaded) deck system together with its known linearizer.

    Attributes:
        system (DeckSystem): The perturbed commuting system.
        phi_true (TaylorLaurentSeries | None): Phi_true with Phi_true o tau_hat_i = tau_i o Phi_true, when known.
        planted (dict | None): The exact resonance {P, Q, kind, target} forced into the linear part.
    """

    system: DeckSystem
    phi_true: TaylorLaurentSeries | None = None
    planted: dict | None = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def to_dict(self, **kwargs) -> dict:
        return {
            "system": self.system.to_dict(),
            "phi_true": None if self.phi_true is None else series_to_dict(self.phi_true),
            "planted": self.planted,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        """Accepts an instance document, a gen-instance report wrapping one, or a bare DeckSystem document."""
        if "result" in data and isinstance(data["result"], dict):
            data = data["result"]
        if "system" not in data:
            return cls(system=DeckSystem.from_dict(data))
        phi_true = data.get("phi_true")
        return cls(
            system=DeckSystem.from_dict(data["system"]),
            phi_true=None if phi_true is None else series_from_dict(phi_true),
            planted=data.get("planted"),
        )


def _random_exponent(rng: np.random.Generator, d: int, order: int) -> list[int]:
    """A uniformly drawn split of `order` into d nonnegative parts."""
    return np.bincount(rng.integers(0, d, size=order), minlength=d).tolist()


def _random_offset(rng: np.random.Generator, n: int, budget: int) -> np.ndarray:
    """Random lattice walk with at most `budget` unit steps."""
    offset = np.zeros(n, dtype=np.int64)
    for _ in range(int(rng.integers(0, budget + 1))):
        offset[rng.integers(0, n)] += rng.choice((-1, 1))
    return offset


def random_displacement(
    rng: np.random.Generator,
    lat: Lattice,
    d: int,
    q_max: int,
    p_max: int,
    dom: DomainSpec,
    norm: float,
    terms: int = 2,
    max_order: int = 3,
) -> TaylorLaurentSeries:
    """
    Sparse map-valued g with v_min >= 2 and certified norm `norm` on dom.

    Component c gets `terms` monomials per vertical order 2..max_order. Horizontal component k
    carries h_k as a factor, and every exponent stays within |P - base|_1 <= (|Q| - 1) // 2, a
    bound that composition preserves, so conjugating by Id + g never leaves the band while
    P_max >= Q_max // 2 + 1.
    """
    n = lat.n
    m = n + d
    if norm == 0.0:
        return TaylorLaurentSeries.zeros(n, d, m, q_max, p_max)
    keys, coeffs = [], []
    for component in range(m):
        base = np.zeros(n, dtype=np.int64)
        if component < n:
            base[component] = 1
        for order in range(2, min(max_order, q_max) + 1):
            for _ in range(terms):
                P = base + _random_offset(rng, n, (order - 1) // 2)
                coeff = np.zeros(m, dtype=complex)
                coeff[component] = complex(rng.standard_normal(), rng.standard_normal())
                keys.append(_random_exponent(rng, d, order) + P.tolist())
                coeffs.append(coeff)
    g = TaylorLaurentSeries(n, d, m, q_max, p_max, keys, coeffs)
    return g.scale(norm / norm_upper(g, lat, dom))


def planted_deck(linear: LinearDeck, P0: list[int]) -> LinearDeck:
    """Replace mu_{., 1} by lambda^{-P0}, so lambda_l^{P0} mu_{l,1}^2 = mu_{l,1} for every generator l."""
    mu = linear.mu.copy()
    mu[:, 0] = np.exp(-(linear.log_lam @ np.asarray(P0, dtype=float)))
    return LinearDeck(lam=linear.lam, mu=mu)


def resonant_system(
    lat: Lattice, linear: LinearDeck, P0: list[int], strength: float, q_max: int, p_max: int, dom: DomainSpec
) -> DeckSystem:
    """
    tau_i = tau_hat_i o W with W(h, v) = (h, v_1 / (1 - c h^{P0} v_1), v_2, ...).

    W is built from resonant monomials only, so it commutes with every tau_hat_i and the tau_i
    commute; its order-2 term sits exactly on the planted zero divisor.

    Raises:
        ValueError: If p_max is below `planted_band(P0, q_max)`.
    """
    required = planted_band(P0, q_max)
    if p_max < required:
        raise ValueError(f"A resonance planted at P = {P0} needs P_max >= {required} for Q_max = {q_max}")
    n, d = lat.n, linear.d
    m = n + d
    terms = {}
    for power in range(1, q_max):
        Q = [power + 1] + [0] * (d - 1)
        P = [power * p for p in P0]
        coeff = np.zeros(m, dtype=complex)
        coeff[n] = strength ** power
        terms[(tuple(Q), tuple(P))] = coeff
    w = TaylorLaurentSeries.from_terms(n, d, m, q_max, p_max, terms)
    return DeckSystem(lat=lat, linear=linear, pert=[apply_linear(linear, i, w) for i in range(n)], domain=dom)


def gen_instance(cfg: ExperimentConfig, seed: int | None = None) -> Instance:
    """
    Build the instance described by `cfg.instance`.

    Args:
        cfg (ExperimentConfig): Validated experiment config.
        seed (int | None): Overrides `cfg.instance.seed`.

    Returns:
        Instance: The system, Phi_true when known, and the planted resonance if any.

    Raises:
        ConfigLoaderException: If a custom instance file cannot be read.
    """
    settings = cfg.instance
    if settings.mode == "custom-file":
        try:
            instance = Instance.from_dict(DocumentLoader.loads(settings.path))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigLoaderException(f"Invalid instance file '{settings.path}': {e}") from e
        logger.info(f"Loaded instance from '{settings.path}'")
        return instance

    seed = settings.seed if seed is None else seed
    rng = np.random.Generator(np.random.PCG64(seed))
    lat = cfg.lattice
    dom = cfg.domain
    linear = cfg.linear_deck()
    d = linear.d
    base = DeckSystem.linear_system(lat, linear, settings.Q_max, settings.P_max, domain=dom)
    planted = None
    if settings.mode == "planted-resonance":
        P0 = list(settings.planted_P) if settings.planted_P is not None else [0] * lat.n
        linear = planted_deck(linear, P0)
        base = resonant_system(lat, linear, P0, settings.planted_strength, settings.Q_max, settings.P_max, dom)
        planted = {"P": P0, "Q": [2] + [0] * (d - 1), "kind": "v", "target": 0}
        logger.info(f"Planted a vertical resonance at P = {P0}, Q = {planted['Q']}")

    g = random_displacement(
        rng, lat, d, settings.Q_max, settings.P_max, dom, settings.pert_norm, settings.terms, settings.phi_order
    )
    identity = TaylorLaurentSeries.identity(lat.n, d, settings.Q_max, settings.P_max)
    if g.is_zero:
        logger.info("Zero displacement; instance is the unconjugated system")
        return Instance(system=base, phi_true=identity if planted is None else None, planted=planted)

    psi = invert_map(g, 1)
    system = base.with_pert(conjugate(base, g, psi))
    logger.info(
        f"Generated {settings.mode} instance: n = {lat.n}, d = {d}, Q_max = {settings.Q_max}, "
        f"|Phi_true - Id| = {settings.pert_norm:.3e}, v_min = {system.v_min}"
    )
    return Instance(system=system, phi_true=None if planted else identity + g, planted=planted)


def instance_summary(instance: Instance) -> dict[str, Any]:
    sys = instance.system
    return {
        "n": sys.n,
        "d": sys.d,
        "Q_max": sys.q_max,
        "P_max": sys.p_max,
        "v_min": sys.v_min,
        "terms": [len(f) for f in sys.pert],
        "residual": max((norm_upper(f, sys.lat, sys.domain) for f in sys.pert), default=0.0),
        "planted": instance.planted,
    }


def instance_deck(cfg: ExperimentConfig) -> LinearDeck:
    """Linear part of the configured instance, without drawing the perturbation when possible."""
    settings = cfg.instance
    if settings.mode == "custom-file":
        return gen_instance(cfg).system.linear
    linear = cfg.linear_deck()
    if settings.mode == "planted-resonance":
        P0 = list(settings.planted_P) if settings.planted_P is not None else [0] * cfg.lattice.n
        return planted_deck(linear, P0)
    return linear
