# This file contains the cost-constrained error and secrecy exponents of the OOK wiretap channel,
# the randomness-rate balancing between them, and the tool registrations for them.

import logging
import math
from dataclasses import dataclass, replace
from typing import Annotated, Any, Callable, Dict, cast

import numpy as np
from numpy.typing import ArrayLike
from pydantic import Field
from scipy.optimize import bisect, minimize_scalar
from scipy.special import logsumexp

ToolAnnotations = Any

from .wiretap_channel import build_channels, mutual_information, secrecy_objective
from .wiretap_common import (
    InfeasibleResultError,
    InputStrategy,
    LinkGeometry,
    PhysicalParams,
    RateValue,
    as_output,
    physical_params_from_user_units,
    validate_nonnegative,
    validate_probability,
)
from .wiretap_optimize import maximize_secrecy_rate

logger = logging.getLogger(__name__)

RHO_GRID_POINTS = 200
RHO_EVE_MIN = 1e-9
RHO_EVE_MAX = 1.0 - 1e-6
RHO_XATOL = 1e-10
R_MAX_DOUBLINGS = 60
R_XATOL_REL = 1e-6
BALANCE_RTOL = 1e-6
ZERO_ATOL = 1e-14  # nats; log-sum-exp rounding noise around phi(0) = 0


@dataclass(frozen=True)
class RatePair:
    """Coding rate R_B = m/n and randomness rate R_E = l/n of a wiretap code."""

    r_b: RateValue
    r_e: RateValue

    def __post_init__(self) -> None:
        validate_nonnegative("Coding rate", "R_B", self.r_b.nats_per_use)
        validate_nonnegative("Randomness rate", "R_E", self.r_e.nats_per_use)
        if self.r_b.bits_per_use + self.r_e.bits_per_use > 1.0 + 1e-12:
            raise ValueError(
                f"R_B + R_E must not exceed 1 bit per use on a binary input. Got: {self.r_b.bits_per_use + self.r_e.bits_per_use}"
            )

    @property
    def total_nats(self) -> float:
        return self.r_b.nats_per_use + self.r_e.nats_per_use

    def as_dict(self) -> Dict:
        return {"r_b": self.r_b.as_dict(), "r_e": self.r_e.as_dict()}


@dataclass(frozen=True)
class ExponentSup:
    """Value of an exponent in bits per use and the (rho, r) attaining it."""

    value: float
    rho: float
    r: float

    def as_dict(self) -> Dict:
        return {"value": self.value, "rho": self.rho, "r": self.r}


@dataclass(frozen=True)
class ExponentReport:
    rates: RatePair
    strategy: InputStrategy
    error: ExponentSup
    secrecy: ExponentSup
    mi_bob: RateValue
    mi_eve: RateValue

    @property
    def f_c(self) -> float:
        return self.error.value

    @property
    def h_c(self) -> float:
        return self.secrecy.value

    def as_dict(self) -> Dict:
        return {
            "f_c": self.f_c,
            "h_c": self.h_c,
            "argmax_f": {"rho": self.error.rho, "r": self.error.r},
            "argmax_h": {"rho": self.secrecy.rho, "r": self.secrecy.r},
            "operating_point": {"q": self.strategy.q_on, "n_a": self.strategy.n_a},
            "rates": self.rates.as_dict(),
            "mi_bob": self.mi_bob.as_dict(),
            "mi_eve": self.mi_eve.as_dict(),
        }


@dataclass(frozen=True)
class BalancedRandomness:
    r_e: RateValue
    f_c: float
    h_c: float

    def as_dict(self) -> Dict:
        return {"r_e": self.r_e.as_dict(), "f_c": self.f_c, "h_c": self.h_c}


def _log_transition(eta: float, n_a: float, dark_rate: float, slot_seconds: float) -> np.ndarray:
    """ln W(y|x) indexed [x, y]; ln(1 - click) is the exposure itself, so no cancellation near click = 1."""
    exposure = np.array([dark_rate * slot_seconds, eta * n_a + dark_rate * slot_seconds])
    with np.errstate(divide="ignore"):
        log_click = np.log(-np.expm1(-exposure))
    return np.stack([-exposure, log_click], axis=1)


def _log_cost_weights(params: PhysicalParams, n_a: float, r: float) -> np.ndarray:
    """ln of the weights e^{rP} (off) and e^{r(P - n_a h f0 / Delta)} (on)."""
    p = params.power_watts
    return np.array([r * p, r * (p - n_a * params.watts_per_photon_rate)])


def _gallager_phi(log_w: np.ndarray, q: float, log_weights: np.ndarray, power: np.ndarray) -> np.ndarray:
    """-ln sum_y (sum_x Q(x) W(y|x)^{1/s} w_x)^s, evaluated in the log domain for every s in power."""
    s = np.asarray(power, dtype=float)[..., None, None]
    with np.errstate(divide="ignore"):
        log_q = np.log(np.array([1.0 - q, q]))
    terms = log_q[:, None] + log_weights[:, None] + log_w / s
    inner = logsumexp(terms, axis=-2)
    return -logsumexp(s[..., 0] * inner, axis=-1)


def _check_operating_point(q: float, n_a: float, r: float) -> None:
    validate_probability("On-probability", "q", q)
    validate_nonnegative("Photons per on-pulse", "n_a", n_a)
    validate_nonnegative("Cost multiplier", "r", r)


def phi_bob(
    rho: ArrayLike, params: PhysicalParams, geom: LinkGeometry, q: float, n_a: float, r: float = 0.0
) -> float | np.ndarray:
    """Gallager function phi(rho | W_B, q, r) of the main channel with the power-cost weights, in nats."""
    rho = np.asarray(rho, dtype=float)
    if np.any(np.isnan(rho)) or np.any(rho < 0) or np.any(rho > 1):
        raise ValueError(f"Exponent parameter (rho) must lie in [0, 1]. Got: {rho}")
    _check_operating_point(q, n_a, r)
    log_w = _log_transition(geom.eta_bob, n_a, params.dcr_bob, params.slot_seconds)
    values = _gallager_phi(log_w, q, _log_cost_weights(params, n_a, r), 1.0 + rho)
    if r == 0:
        values = np.where(rho == 0, 0.0, values)
    return as_output(values)


def phi_eve(
    rho: ArrayLike, params: PhysicalParams, geom: LinkGeometry, q: float, n_a: float, r: float = 0.0
) -> float | np.ndarray:
    """phi(-rho | W_E, q, r) of the wiretapper channel, in nats; rho is clamped to at most 1 - 1e-6."""
    rho = np.asarray(rho, dtype=float)
    if np.any(np.isnan(rho)) or np.any(rho < 0) or np.any(rho >= 1):
        raise ValueError(f"Exponent parameter (rho) must lie in [0, 1). Got: {rho}")
    _check_operating_point(q, n_a, r)
    rho = np.minimum(rho, RHO_EVE_MAX)
    log_w = _log_transition(geom.eta_eve, n_a, params.dcr_eve, params.slot_seconds)
    values = _gallager_phi(log_w, q, _log_cost_weights(params, n_a, r), 1.0 - rho)
    if r == 0:
        values = np.where(rho == 0, 0.0, values)
    return as_output(values)


def _sup_over_rho(objective: Callable[[ArrayLike], Any], lo: float, hi: float) -> tuple[float, float]:
    grid = np.linspace(lo, hi, RHO_GRID_POINTS)
    values = np.asarray(objective(grid))
    i = int(np.argmax(values))
    best_rho, best = float(grid[i]), float(values[i])
    left, right = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if right > left:
        res = minimize_scalar(
            lambda x: -float(objective(x)), bounds=(left, right), method="bounded", options={"xatol": RHO_XATOL}
        )
        if -res.fun > best:
            best_rho, best = float(res.x), float(-res.fun)
    return best, best_rho


def _sup_over_r(inner: Callable[[float], tuple[float, float]], r0: float) -> ExponentSup:
    """Expanding bracket r in {0, r0, 2 r0, ...} until the inner supremum drops, then a bounded refinement."""
    points = [0.0]
    values = [inner(0.0)]
    r = r0
    for _ in range(R_MAX_DOUBLINGS):
        points.append(r)
        values.append(inner(r))
        if values[-1][0] < values[-2][0]:
            break
        r *= 2.0
    k = int(np.argmax([v[0] for v in values]))
    best = ExponentSup(values[k][0], values[k][1], points[k])
    left, right = points[max(k - 1, 0)], points[min(k + 1, len(points) - 1)]
    if right > left:
        res = minimize_scalar(
            lambda x: -inner(x)[0], bounds=(left, right), method="bounded", options={"xatol": R_XATOL_REL * r0}
        )
        r_star = max(float(res.x), 0.0)
        value, rho = inner(r_star)
        if value > best.value:
            best = ExponentSup(value, rho, r_star)
    if best.value <= ZERO_ATOL:
        return ExponentSup(0.0, 0.0, 0.0)
    return best


def _in_bits(result: ExponentSup) -> ExponentSup:
    # exponents are quoted in base 2 while the bounds keep 2 e^{-n F}
    return replace(result, value=result.value / math.log(2.0))


def error_exponent(params: PhysicalParams, geom: LinkGeometry, q: float, n_a: float, rates: RatePair) -> ExponentSup:
    """
    F_c = sup_{r>=0} sup_{0<=rho<=1} [phi_bob(rho, r) - rho (R_B + R_E)], searched in nats and reported
    in bits per use.
    """
    total = rates.total_nats

    def inner(r: float) -> tuple[float, float]:
        return _sup_over_rho(lambda rho: phi_bob(rho, params, geom, q, n_a, r) - np.asarray(rho) * total, 0.0, 1.0)

    result = _in_bits(_sup_over_r(inner, 1.0 / params.power_watts))
    logger.debug("error exponent at R=%.6e nats: %.6e bits (rho=%.4g, r=%.4g)", total, result.value, result.rho, result.r)
    return result


def secrecy_exponent(params: PhysicalParams, geom: LinkGeometry, q: float, n_a: float, r_e: RateValue) -> ExponentSup:
    """H_c = sup_{r>=0} sup_{0<rho<1} [phi_eve(rho, r) + rho R_E], in bits per use."""
    validate_nonnegative("Randomness rate", "R_E", r_e.nats_per_use)
    rate = r_e.nats_per_use

    def inner(r: float) -> tuple[float, float]:
        return _sup_over_rho(lambda rho: phi_eve(rho, params, geom, q, n_a, r) + np.asarray(rho) * rate, RHO_EVE_MIN, RHO_EVE_MAX)

    result = _in_bits(_sup_over_r(inner, 1.0 / params.power_watts))
    logger.debug("secrecy exponent at R_E=%.6e nats: %.6e bits (rho=%.4g, r=%.4g)", rate, result.value, result.rho, result.r)
    return result


def _mutual_informations(params: PhysicalParams, geom: LinkGeometry, q: float, n_a: float) -> tuple[RateValue, RateValue]:
    w_b, w_e = build_channels(params, geom, n_a)
    return mutual_information(w_b, q, params.slot_seconds), mutual_information(w_e, q, params.slot_seconds)


def exponent_report(params: PhysicalParams, geom: LinkGeometry, q: float, n_a: float, rates: RatePair) -> ExponentReport:
    mi_bob, mi_eve = _mutual_informations(params, geom, q, n_a)
    return ExponentReport(
        rates=rates,
        strategy=InputStrategy(q_on=q, n_a=n_a),
        error=error_exponent(params, geom, q, n_a, rates),
        secrecy=secrecy_exponent(params, geom, q, n_a, rates.r_e),
        mi_bob=mi_bob,
        mi_eve=mi_eve,
    )


def balance_randomness_rate(
    params: PhysicalParams, geom: LinkGeometry, q: float, n_a: float, r_b: RateValue
) -> BalancedRandomness:
    """
    Randomness rate R_E* in (I(X;Z), I(X;Y) - R_B) at which the error and secrecy exponents coincide.
    F_c decreases and H_c increases in R_E, so the crossing is unique.
    """
    validate_nonnegative("Coding rate", "R_B", r_b.nats_per_use)
    mi_bob, mi_eve = _mutual_informations(params, geom, q, n_a)
    lo, hi = mi_eve.nats_per_use, mi_bob.nats_per_use - r_b.nats_per_use
    if not hi - lo > BALANCE_RTOL * abs(hi):
        raise InfeasibleResultError(
            f"No randomness rate balances the exponents: I(X;Z) = {lo:.6e} nats is not below I(X;Y) - R_B = {hi:.6e} nats."
        )
    slot = params.slot_seconds

    def gap(r_e: float) -> float:
        rates = RatePair(r_b, RateValue(r_e, slot))
        diff = error_exponent(params, geom, q, n_a, rates).value - secrecy_exponent(params, geom, q, n_a, rates.r_e).value
        logger.debug("balance R_E=%.9e nats: F_c - H_c = %.6e", r_e, diff)
        return diff

    r_e_star = float(bisect(gap, lo, hi, xtol=BALANCE_RTOL * hi))
    rates = RatePair(r_b, RateValue(r_e_star, slot))
    return BalancedRandomness(
        r_e=rates.r_e,
        f_c=error_exponent(params, geom, q, n_a, rates).value,
        h_c=secrecy_exponent(params, geom, q, n_a, rates.r_e).value,
    )


def resolve_operating_point(
    params: PhysicalParams, geom: LinkGeometry, q: float | None = None, n_a: float | None = None
) -> tuple[float, float, RateValue]:
    """
    (q, n_a) with the secrecy rate I(X;Y) - I(X;Z) (clamped at 0) they achieve; the secrecy-rate
    optimum when either coordinate is missing.
    """
    if q is not None and n_a is not None:
        raw = secrecy_objective(params, geom, InputStrategy(q_on=q, n_a=n_a))
        return q, n_a, RateValue(max(raw.nats_per_use, 0.0), raw.slot_seconds)
    optimum = maximize_secrecy_rate(params, geom)
    return optimum.strategy.q_on, optimum.strategy.n_a, optimum.objective


def coding_rate(secrecy_rate: RateValue, rb_bps: float | None, rb_frac: float | None, slot_seconds: float) -> RateValue:
    """R_B from an absolute bit rate or as a fraction of the secrecy rate."""
    if rb_bps is not None:
        validate_nonnegative("Coding rate", "rb_bps", rb_bps)
        return RateValue.from_bits_per_second(rb_bps, slot_seconds)
    if rb_frac is None:
        raise ValueError("Either a coding rate in bit/s or a fraction of the secrecy rate is required.")
    validate_probability("Coding rate fraction", "rb_frac", rb_frac)
    return secrecy_rate.scaled(rb_frac)


def register_exponents_tool(mcp):
    """Register the error/secrecy exponent tool with the MCP server.

    Args:
        mcp: The FastMCP instance to register the tool with.

    Returns:
        The registered tool function.
    """
    @mcp.tool(
        annotations=cast(
            ToolAnnotations,
            {
                "title": "OOK Wiretap Error and Secrecy Exponents",
                "summary": "Finite-length exponents under the power constraint",
                "description": "Returns the error exponent F_c and secrecy exponent H_c (bits per use) for a coding rate and a randomness rate.",
                "readOnlyHint": True,
                "idempotentHint": True,
            },
        )
    )
    def wiretap_exponents(
        attenuation_db: Annotated[float, Field(description="Attenuation alpha towards Bob in dB", ge=0.0, examples=[70.0])],
        rb_bps: Annotated[float, Field(description="Coding rate R_B in bit/s", ge=0.0, examples=[2.21e7])],
        re_bps: Annotated[float, Field(description="Randomness rate R_E in bit/s", ge=0.0, examples=[6.41e8])],
        eta_zy: Annotated[float, Field(description="Relative transmittance eta_z/eta_y", ge=0.0, examples=[0.9])] = 0.9,
        q_on: Annotated[float | None, Field(description="On-probability; defaults to the secrecy-rate optimum", ge=0.0, le=1.0)] = None,
        n_a: Annotated[float | None, Field(description="Photons per on-pulse; defaults to the secrecy-rate optimum", ge=0.0)] = None,
        power_mw: Annotated[float, Field(description="Maximum average transmit power in mW", gt=0.0)] = 10.0,
        dcr_bob_cps: Annotated[float, Field(description="Bob's dark-count rate in counts/s", ge=0.0)] = 1e4,
        dcr_eve_cps: Annotated[float, Field(description="Eve's dark-count rate in counts/s", ge=0.0)] = 1.0,
        slot_ns: Annotated[float, Field(description="Detector slot width in ns", gt=0.0)] = 1.0,
        f0_thz: Annotated[float, Field(description="Optical center frequency in THz", gt=0.0)] = 200.0,
    ) -> Dict:
        """Compute the error and secrecy exponents. USE THIS FUNCTION when asked how fast the decoding error and the
        leaked information of a wiretap code decay with the code length.

        Returns:
            A dictionary with f_c, h_c, their maximizing (rho, r), the operating point and mutual informations.
        """
        try:
            params = physical_params_from_user_units(power_mw, dcr_bob_cps, dcr_eve_cps, slot_ns, f0_thz)
            geom = LinkGeometry(attenuation_db=attenuation_db, relative_transmittance=eta_zy)
            q, n, _ = resolve_operating_point(params, geom, q_on, n_a)
            rates = RatePair(
                RateValue.from_bits_per_second(rb_bps, params.slot_seconds),
                RateValue.from_bits_per_second(re_bps, params.slot_seconds),
            )
            return {
                "exponents": exponent_report(params, geom, q, n, rates).as_dict(),
                "input_parameters": {"physical": params.as_dict(), "geometry": geom.as_dict()},
                "model": "ook-wiretap",
                "status": "success",
            }
        except OverflowError as e:
            raise OverflowError(f"Numerical overflow in exponent calculation. Try using more moderate input values: {str(e)}")
        except (ValueError, RuntimeError) as e:
            raise e
        except Exception as e:
            raise RuntimeError(f"Error in exponent calculation: {str(e)}")

    return wiretap_exponents


def register_balance_tool(mcp):
    """Register the randomness-rate balancing tool with the MCP server."""
    @mcp.tool(
        annotations=cast(
            ToolAnnotations,
            {
                "title": "OOK Wiretap Randomness Balancing",
                "summary": "Randomness rate equalizing the error and secrecy exponents",
                "description": "Returns R_E* with F_c = H_c for a coding rate given in bit/s or as a fraction of the secrecy rate.",
                "readOnlyHint": True,
                "idempotentHint": True,
            },
        )
    )
    def wiretap_balance_randomness(
        attenuation_db: Annotated[float, Field(description="Attenuation alpha towards Bob in dB", ge=0.0, examples=[70.0])],
        eta_zy: Annotated[float, Field(description="Relative transmittance eta_z/eta_y", ge=0.0, examples=[0.9])] = 0.9,
        rb_bps: Annotated[float | None, Field(description="Coding rate R_B in bit/s", ge=0.0)] = None,
        rb_frac: Annotated[float | None, Field(description="Coding rate as a fraction of the secrecy rate", ge=0.0, le=1.0, examples=[0.5])] = 0.5,
        q_on: Annotated[float | None, Field(description="On-probability; defaults to the secrecy-rate optimum", ge=0.0, le=1.0)] = None,
        n_a: Annotated[float | None, Field(description="Photons per on-pulse; defaults to the secrecy-rate optimum", ge=0.0)] = None,
        power_mw: Annotated[float, Field(description="Maximum average transmit power in mW", gt=0.0)] = 10.0,
        dcr_bob_cps: Annotated[float, Field(description="Bob's dark-count rate in counts/s", ge=0.0)] = 1e4,
        dcr_eve_cps: Annotated[float, Field(description="Eve's dark-count rate in counts/s", ge=0.0)] = 1.0,
        slot_ns: Annotated[float, Field(description="Detector slot width in ns", gt=0.0)] = 1.0,
        f0_thz: Annotated[float, Field(description="Optical center frequency in THz", gt=0.0)] = 200.0,
    ) -> Dict:
        """Balance the randomness rate. USE THIS FUNCTION when asked which dummy-bit rate makes a wiretap code equally
        reliable and secret."""
        try:
            params = physical_params_from_user_units(power_mw, dcr_bob_cps, dcr_eve_cps, slot_ns, f0_thz)
            geom = LinkGeometry(attenuation_db=attenuation_db, relative_transmittance=eta_zy)
            q, n, secrecy_rate = resolve_operating_point(params, geom, q_on, n_a)
            r_b = coding_rate(secrecy_rate, rb_bps, rb_frac if rb_bps is None else None, params.slot_seconds)
            balanced = balance_randomness_rate(params, geom, q, n, r_b)
            return {
                "balanced": balanced.as_dict(),
                "r_b": r_b.as_dict(),
                "operating_point": {"q": q, "n_a": n},
                "input_parameters": {"physical": params.as_dict(), "geometry": geom.as_dict()},
                "model": "ook-wiretap",
                "status": "success",
            }
        except (ValueError, RuntimeError) as e:
            raise e
        except Exception as e:
            raise RuntimeError(f"Error in randomness balancing: {str(e)}")

    return wiretap_balance_randomness
