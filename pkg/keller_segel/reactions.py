"""
Reactions Module - kinetic networks, chemotactic coefficients and the cut-off clamp.

Every callable in this module is evaluated elementwise on numpy arrays (or plain floats) and is pure, so
networks and coefficient pairs can be shared between threads.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from keller_segel.constants import (
    CUTOFF_DELTA_ERROR,
    DEFAULT_DELTA,
    KAPPA_FLOOR_ERROR,
    KAPPA_FLOOR_VALUE_ERROR,
    NEGATIVE_RATE_ERROR,
    NON_FINITE_INPUT_ERROR,
    NON_FINITE_OUTPUT_ERROR,
    SAMPLES_ERROR,
    SPECIES,
    UNKNOWN_PRESET_ERROR,
)
from keller_segel.exceptions import CoefficientError, ConfigurationError, ReactionEvaluationError
from keller_segel.utils import sup_norm

if TYPE_CHECKING:
    from typing import Any, Callable, Sequence

    Range = tuple[float, float]

logger = logging.getLogger(__name__)


class ConstantFunction:
    """
    A function of any number of arguments returning ``value`` in the shape of its first argument.
    """

    def __init__(self, value: float) -> None:
        self.value = float(value)

    def __call__(self, *args: Any) -> Any:
        if args and np.ndim(args[0]) > 0:
            return np.full(np.shape(args[0]), self.value)
        return self.value

    def __repr__(self) -> str:
        return f"ConstantFunction({self.value})"


def constant_production(value: float) -> ConstantFunction:
    return ConstantFunction(value)


def _as_function(value: float | Callable) -> Callable:
    return value if callable(value) else ConstantFunction(value)


def _broadcast(value: Any, shape: tuple[int, ...]) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=float), shape).astype(float)


def _check_finite(name: str, *values: Any) -> None:
    for value in values:
        if not np.all(np.isfinite(value)):
            raise ReactionEvaluationError(NON_FINITE_INPUT_ERROR.format(name=name))


@dataclass(frozen=True)
class KineticParams:
    """
    Rates of the enzyme/attractant/complex kinetics and the production functions.

    :param f: attractant production per unit density, a function of v
    :param g: enzyme production per unit density, a function of (v, p)
    """

    r1: float = 1.0
    r_neg1: float = 1.0
    r2: float = 1.0
    f: Callable = field(default_factory=lambda: ConstantFunction(0.0))
    g: Callable = field(default_factory=lambda: ConstantFunction(0.0))

    def __post_init__(self) -> None:
        for name in ("r1", "r_neg1", "r2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigurationError(NEGATIVE_RATE_ERROR.format(name=name, value=value))
        object.__setattr__(self, "f", _as_function(self.f))
        object.__setattr__(self, "g", _as_function(self.g))


@dataclass(frozen=True)
class Cutoff:
    """
    Clamp that is the identity on [-M, M] and saturates at +-(M+1), where M = delta + reference_sup.

    On M < |x| < M+1 the clamp follows the cubic H(s) = M + s + s^2 - s^3, s = |x| - M, which joins both
    pieces with matching value and slope; it is monotone with slope at most 4/3.
    """

    delta: float = DEFAULT_DELTA
    reference_sup: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ConfigurationError(CUTOFF_DELTA_ERROR.format(delta=self.delta))

    @property
    def level(self) -> float:
        return self.delta + self.reference_sup

    @classmethod
    def from_level(cls, level: float, delta: float = DEFAULT_DELTA) -> Cutoff:
        return cls(delta=delta, reference_sup=level - delta)

    @classmethod
    def from_initial_data(cls, v: np.ndarray, p: np.ndarray, w: np.ndarray, delta: float = DEFAULT_DELTA) -> Cutoff:
        return cls(delta=delta, reference_sup=max(sup_norm(v), sup_norm(p), sup_norm(w)))

    def margin(self, current_sup: float) -> float:
        """
        M minus the current sup norm; equals delta exactly when the current sup is the reference one.
        """
        return self.delta + (self.reference_sup - current_sup)

    def __call__(self, x: Any) -> Any:
        return eval_cutoff(self, x)


def eval_cutoff(cutoff: Cutoff, x: Any) -> Any:
    level = cutoff.level
    values = np.asarray(x, dtype=float)
    magnitude = np.abs(values)
    s = np.clip(magnitude - level, 0.0, 1.0)
    blended = np.sign(values) * (level + s + s * s - s * s * s)
    result = np.where(magnitude <= level, values, blended)
    return float(result) if np.ndim(result) == 0 else result


@dataclass(frozen=True)
class CoefficientPair:
    """
    Diffusion coefficient kappa(u, v) > kappa_floor and chemotactic sensitivity sigma(u, v) of either sign.
    """

    kappa: Callable
    sigma: Callable
    kappa_floor: float = 1e-6
    name: str = "custom"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kappa_floor) and self.kappa_floor > 0):
            raise ConfigurationError(KAPPA_FLOOR_VALUE_ERROR.format(value=self.kappa_floor))
        object.__setattr__(self, "kappa", _as_function(self.kappa))
        object.__setattr__(self, "sigma", _as_function(self.sigma))

    @classmethod
    def classical(cls, chi: float, kappa_floor: float = 1e-6) -> CoefficientPair:
        """
        kappa = 1, sigma = -chi * u.
        """
        return cls(ConstantFunction(1.0), lambda u, v: -chi * u, kappa_floor, "classical")

    @classmethod
    def logarithmic(cls, chi: float, v_floor: float = 1e-6, kappa_floor: float = 1e-6) -> CoefficientPair:
        """
        kappa = 1, sigma = -chi * u / v with v kept above v_floor.
        """
        return cls(ConstantFunction(1.0), lambda u, v: -chi * u / np.maximum(v, v_floor), kappa_floor, "logarithmic")

    @classmethod
    def pure_diffusion(cls, kappa: float = 1.0, kappa_floor: float = 1e-6) -> CoefficientPair:
        return cls(ConstantFunction(kappa), ConstantFunction(0.0), kappa_floor, "pure_diffusion")

    @classmethod
    def custom(cls, kappa: float | Callable, sigma: float | Callable, kappa_floor: float = 1e-6) -> CoefficientPair:
        return cls(kappa, sigma, kappa_floor, "custom")


COEFFICIENT_PRESETS = ("classical", "logarithmic", "pure_diffusion", "custom")


def eval_coefficients(pair: CoefficientPair, u: Any, v: Any) -> tuple[Any, Any]:
    """
    Evaluate (kappa, sigma) elementwise.

    :raises: ReactionEvaluationError for non-finite inputs or outputs, CoefficientError when kappa drops below
        the floor anywhere
    """
    _check_finite("eval_coefficients", u, v)
    shape = np.broadcast(np.asarray(u), np.asarray(v)).shape
    with np.errstate(all="ignore"):
        kappa = _broadcast(pair.kappa(u, v), shape)
        sigma = _broadcast(pair.sigma(u, v), shape)
    if not (np.all(np.isfinite(kappa)) and np.all(np.isfinite(sigma))):
        raise ReactionEvaluationError(NON_FINITE_OUTPUT_ERROR.format(name=f"coefficient pair `{pair.name}`"))
    below = np.flatnonzero(kappa.reshape(-1) < pair.kappa_floor)
    if len(below):
        node = int(below[0])
        raise CoefficientError(
            KAPPA_FLOOR_ERROR.format(value=float(kappa.reshape(-1)[node]), node=node, floor=pair.kappa_floor)
        )
    if not shape:
        return float(kappa), float(sigma)
    return kappa, sigma


def _zero(u: Any, v: Any, p: Any, w: Any) -> Any:
    return ConstantFunction(0.0)(u)


@dataclass(frozen=True)
class ReactionNetwork:
    """
    The four kinetic functions R1..R4 of (u, v, p, w) and an optional cut-off applied to the v, p, w arguments.
    """

    kind: str
    terms: tuple[Callable, Callable, Callable, Callable]
    params: KineticParams | None = None
    cutoff: Cutoff | None = None

    @classmethod
    def full_keller_segel(cls, params: KineticParams, cutoff: Cutoff | None = None) -> ReactionNetwork:
        """
        R1 = 0, R2 = -r1 v p + r_neg1 w + u f(v), R3 = -r1 v p + (r_neg1 + r2) w + u g(v, p),
        R4 = r1 v p - (r_neg1 + r2) w.
        """
        r1, r_neg1, r2 = params.r1, params.r_neg1, params.r2

        def attractant(u: Any, v: Any, p: Any, w: Any) -> Any:
            return -r1 * v * p + r_neg1 * w + u * params.f(v)

        def enzyme(u: Any, v: Any, p: Any, w: Any) -> Any:
            return -r1 * v * p + (r_neg1 + r2) * w + u * params.g(v, p)

        def complex_(u: Any, v: Any, p: Any, w: Any) -> Any:
            return r1 * v * p - (r_neg1 + r2) * w

        return cls("full_keller_segel", (_zero, attractant, enzyme, complex_), params, cutoff)

    @classmethod
    def simplified(cls, k: float | Callable, f: float | Callable, cutoff: Cutoff | None = None) -> ReactionNetwork:
        """
        Two-species model: R2 = -k(v) v + u f(v); p and w stay frozen.
        """
        decay, production = _as_function(k), _as_function(f)

        def attractant(u: Any, v: Any, p: Any, w: Any) -> Any:
            return -decay(v) * v + u * production(v)

        return cls("simplified", (_zero, attractant, _zero, _zero), None, cutoff)

    @classmethod
    def custom(cls, terms: Sequence[float | Callable], cutoff: Cutoff | None = None) -> ReactionNetwork:
        r1, r2, r3, r4 = (_as_function(term) for term in terms)
        return cls("custom", (r1, r2, r3, r4), None, cutoff)

    @classmethod
    def zero(cls, cutoff: Cutoff | None = None) -> ReactionNetwork:
        return cls("zero", (_zero, _zero, _zero, _zero), None, cutoff)

    def with_cutoff(self, cutoff: Cutoff | None) -> ReactionNetwork:
        return replace(self, cutoff=cutoff)


NETWORK_PRESETS = ("full", "classical", "custom", "zero")


def eval_reactions(network: ReactionNetwork, u: Any, v: Any, p: Any, w: Any) -> tuple[Any, Any, Any, Any]:
    """
    Evaluate (R1, R2, R3, R4) elementwise; with a cut-off, every R_i sees clamped v, p, w and the raw u.

    :raises: ReactionEvaluationError for non-finite inputs or outputs
    """
    _check_finite("eval_reactions", u, v, p, w)
    shape = np.broadcast(*(np.asarray(x) for x in (u, v, p, w))).shape
    if network.cutoff is not None:
        v, p, w = (network.cutoff(x) for x in (v, p, w))
    with np.errstate(all="ignore"):
        values = tuple(_broadcast(term(u, v, p, w), shape) for term in network.terms)
    for species, value in zip(SPECIES, values):
        if not np.all(np.isfinite(value)):
            raise ReactionEvaluationError(NON_FINITE_OUTPUT_ERROR.format(name=f"reaction term of `{species}`"))
    if not shape:
        return tuple(float(value) for value in values)  # type: ignore[return-value]
    return values  # type: ignore[return-value]


@dataclass(frozen=True)
class Witness:
    species: str
    point: tuple[float, float, float, float]
    value: float


@dataclass(frozen=True)
class QuasipositivityReport:
    ok: bool
    witness: Witness | None = None
    samples: int = 0


def check_quasipositivity(
    network: ReactionNetwork, box: Sequence[Range] = ((0.0, 1.0),) * 4, samples: int = 5
) -> QuasipositivityReport:
    """
    Sample R2(u, 0, p, w) >= 0, R3(u, v, 0, w) >= 0 and R4(u, v, p, 0) >= 0 on a grid.

    ``box`` holds the (lower, upper) range of u, v, p and w; the ranges of v, p and w are cut at 0 from below.
    A failed sample is reported as the most negative witness; passing is no proof.
    """
    if samples < 1:
        raise ConfigurationError(SAMPLES_ERROR.format(samples=samples))
    axes = []
    for index, (lower, upper) in enumerate(box):
        if index > 0:
            lower, upper = max(lower, 0.0), max(upper, 0.0)
        axes.append(np.linspace(lower, upper, samples) if samples > 1 else np.array([lower]))
    worst: Witness | None = None
    total = 0
    for index in range(1, 4):
        grids = [axis if position != index else np.zeros(1) for position, axis in enumerate(axes)]
        points = [grid.reshape(-1) for grid in np.meshgrid(*grids, indexing="ij")]
        value = eval_reactions(network, *points)[index]
        total += len(value)
        position = int(np.argmin(value))
        if value[position] < 0 and (worst is None or value[position] < worst.value):
            point = tuple(float(coordinate[position]) for coordinate in points)
            worst = Witness(SPECIES[index], point, float(value[position]))  # type: ignore[arg-type]
    if worst is not None:
        logger.debug("Quasipositivity violated by %s", worst)
    return QuasipositivityReport(ok=worst is None, witness=worst, samples=total)


def reaction_sup(
    network: ReactionNetwork, cutoff: Cutoff, species: str, u_range: Range, samples: int = 9
) -> float:
    """
    Sampled sup of |R_i| over u in u_range and v, p, w in the clamp box [-(M+1), M+1].
    """
    index = SPECIES.index(species)
    bound = cutoff.level + 1.0
    clamped = network.with_cutoff(cutoff)
    u_axis = np.linspace(u_range[0], u_range[1], samples)
    box_axis = np.linspace(-bound, bound, samples)
    supremum = 0.0
    for u_value, v_value in itertools.product(u_axis, box_axis):
        p_grid, w_grid = np.meshgrid(box_axis, box_axis, indexing="ij")
        value = eval_reactions(clamped, u_value, v_value, p_grid.reshape(-1), w_grid.reshape(-1))[index]
        supremum = max(supremum, sup_norm(np.atleast_1d(value)))
    return supremum


def coefficient_preset(name: str, **parameters: Any) -> CoefficientPair:
    builders: dict[str, Callable[..., CoefficientPair]] = {
        "classical": CoefficientPair.classical,
        "logarithmic": CoefficientPair.logarithmic,
        "pure_diffusion": CoefficientPair.pure_diffusion,
        "custom": CoefficientPair.custom,
    }
    if name not in builders:
        raise ConfigurationError(
            UNKNOWN_PRESET_ERROR.format(kind="coefficient", preset=name, available=", ".join(builders))
        )
    return builders[name](**parameters)
