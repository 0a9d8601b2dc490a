# This file contains attenuation sweeps, zero-secrecy threshold search and regime boundary search,
# plus the tool registrations for them.

import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Annotated, Any, Dict, Sequence, cast

from pydantic import Field
from scipy.optimize import bisect

ToolAnnotations = Any

from .wiretap_common import (
    InfeasibleResultError,
    InputStrategy,
    LinkGeometry,
    Mode,
    PhysicalParams,
    RateValue,
    Regime,
    physical_params_from_user_units,
    validate_mode,
    validate_nonnegative,
    validate_positive,
)
from .wiretap_optimize import OptResult, maximize

logger = logging.getLogger(__name__)

THRESHOLD_BRACKET_DB = (0.0, 200.0)
THRESHOLD_RESOLUTION_DB = 0.05
DEFAULT_FLOOR_BPS = 1.0
GAIN_FLOOR_BPS = 5e3  # above the kbps tail of the randomized secrecy capacity

SWEEP_CSV_HEADER = (
    "alpha_db",
    "rate_bps",
    "rate_bits_per_use",
    "q_star",
    "n_a_star",
    "n_b_star",
    "power_used_w",
    "boundary_active",
)
SWEEP_AUX_CSV_HEADER = SWEEP_CSV_HEADER + ("aux_a", "flip_1_to_0")


@dataclass(frozen=True)
class SweepRow:
    attenuation_db: float
    objective: RateValue
    q_star: float
    n_a_star: float
    n_b_star: float
    power_used: float
    boundary_active: bool
    regime: Regime
    aux_a: float | None = None
    flip_1_to_0: float | None = None

    @classmethod
    def from_result(cls, result: OptResult, attenuation_db: float) -> "SweepRow":
        aux = result.strategy.aux is not None
        return cls(
            attenuation_db=attenuation_db,
            objective=result.objective,
            q_star=result.strategy.q_on,
            n_a_star=result.strategy.n_a,
            n_b_star=result.n_b_star,
            power_used=result.power_used,
            boundary_active=result.boundary_active,
            regime=result.regime,
            aux_a=result.strategy.flip_0_to_1 if aux else None,
            flip_1_to_0=result.strategy.flip_1_to_0 if aux else None,
        )

    def csv_cells(self) -> list:
        cells = [
            self.attenuation_db,
            self.objective.bits_per_second,
            self.objective.bits_per_use,
            self.q_star,
            self.n_a_star,
            self.n_b_star,
            self.power_used,
            self.boundary_active,
        ]
        if self.aux_a is not None:
            cells += [self.aux_a, self.flip_1_to_0]
        return cells

    def as_dict(self) -> Dict:
        return dict(zip(SWEEP_AUX_CSV_HEADER, self.csv_cells())) | {"regime": self.regime}


def _warm_seed(previous: OptResult, geom: LinkGeometry) -> InputStrategy:
    # keep n_B, which is what the interior optimum fixes
    return InputStrategy(q_on=previous.strategy.q_on, n_a=previous.n_b_star / geom.eta_bob, aux=previous.strategy.aux)


def sweep_attenuation(
    params: PhysicalParams,
    alphas: Sequence[float],
    mode: Mode,
    eta_zy: float,
    *,
    warm_start: bool = True,
    workers: int = 1,
) -> list[SweepRow]:
    """
    One optimum per attenuation, rows sorted by strictly increasing alpha. Warm starts seed each
    row with the previous optimum at equal n_B; without them rows may run on a thread pool.
    """
    validate_mode(mode)
    if len(alphas) == 0:
        raise ValueError("At least one attenuation value is required.")
    for alpha in alphas:
        validate_nonnegative("Attenuation", "alpha_db", alpha)
    grid = sorted(set(float(a) for a in alphas))
    base = LinkGeometry(attenuation_db=grid[0], relative_transmittance=eta_zy)

    if warm_start:
        rows, previous = [], None
        for alpha in grid:
            geom = base.with_attenuation(alpha)
            seeds = [_warm_seed(previous, geom)] if previous is not None else []
            previous = maximize(params, geom, mode, seeds=seeds)
            rows.append(SweepRow.from_result(previous, alpha))
            logger.debug("sweep %s alpha=%.2f dB rate=%.6e bps", mode, alpha, previous.objective.bits_per_second)
        return rows

    def solve(alpha: float) -> SweepRow:
        return SweepRow.from_result(maximize(params, base.with_attenuation(alpha), mode), alpha)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(solve, grid))
    return [solve(alpha) for alpha in grid]


def _check_secrecy_mode(mode: str) -> None:
    validate_mode(mode, ("secrecy", "secrecy-aux"))


def find_zero_threshold(
    params: PhysicalParams,
    eta_zy: float,
    mode: Mode = "secrecy",
    floor_bps: float = DEFAULT_FLOOR_BPS,
    *,
    bracket: tuple[float, float] = THRESHOLD_BRACKET_DB,
    resolution_db: float = THRESHOLD_RESOLUTION_DB,
) -> float | None:
    """
    Largest attenuation [dB] at which the optimized secrecy rate still reaches floor_bps,
    or None when the rate stays above the floor over the whole bracket.
    """
    _check_secrecy_mode(mode)
    validate_positive("Rate floor", "floor_bps", floor_bps)
    lo, hi = bracket

    @functools.lru_cache(maxsize=None)
    def margin(alpha: float) -> float:
        geom = LinkGeometry(attenuation_db=alpha, relative_transmittance=eta_zy)
        rate = maximize(params, geom, mode).objective.bits_per_second
        logger.debug("threshold %s eta_zy=%.3g alpha=%.3f dB rate=%.6e bps", mode, eta_zy, alpha, rate)
        return rate - floor_bps

    if margin(lo) < 0:
        raise InfeasibleResultError(
            f"Secrecy rate at {lo} dB is already below the floor of {floor_bps} bps; the threshold is not bracketed."
        )
    if margin(hi) >= 0:
        return None
    alpha = float(bisect(margin, lo, hi, xtol=resolution_db))
    # bisect lands within xtol of the crossing, possibly on the far side
    return alpha if margin(alpha) >= 0 else max(lo, alpha - resolution_db)


@dataclass(frozen=True)
class ThresholdGain:
    """Zero-secrecy thresholds without and with the randomizing channel, at one common floor."""

    plain_db: float
    aux_db: float
    floor_bps: float

    @property
    def gain_db(self) -> float:
        return self.aux_db - self.plain_db

    def as_dict(self) -> Dict:
        return {"plain_threshold_db": self.plain_db, "aux_threshold_db": self.aux_db, "gain_db": self.gain_db, "floor_bps": self.floor_bps}


def threshold_gain(
    params: PhysicalParams,
    eta_zy: float,
    floor_bps: float = GAIN_FLOOR_BPS,
    *,
    bracket: tuple[float, float] = THRESHOLD_BRACKET_DB,
    resolution_db: float = THRESHOLD_RESOLUTION_DB,
) -> ThresholdGain:
    """
    Extra attenuation the randomizing channel buys before secrecy is lost.

    The randomized secrecy capacity keeps a slowly decaying tail of a few kbps for several dB past
    the point where it stops tracking the received power, while the plain secrecy rate drops
    straight to zero. GAIN_FLOOR_BPS sits above that tail, so both thresholds mark where the curve
    falls away rather than where the tail finally ends.
    """
    plain = find_zero_threshold(params, eta_zy, "secrecy", floor_bps, bracket=bracket, resolution_db=resolution_db)
    aux = find_zero_threshold(params, eta_zy, "secrecy-aux", floor_bps, bracket=bracket, resolution_db=resolution_db)
    if plain is None or aux is None:
        raise InfeasibleResultError(f"Secrecy does not fall below {floor_bps} bps within {bracket} dB; no gain to compare.")
    gain = ThresholdGain(plain_db=plain, aux_db=aux, floor_bps=floor_bps)
    logger.debug("threshold gain eta_zy=%.3g at %.3g bps: %.2f -> %.2f dB", eta_zy, floor_bps, plain, aux)
    return gain


def regime_boundary(
    params: PhysicalParams,
    eta_zy: float,
    mode: Mode = "secrecy",
    *,
    bracket: tuple[float, float] = THRESHOLD_BRACKET_DB,
    resolution_db: float = THRESHOLD_RESOLUTION_DB,
) -> float | None:
    """Largest attenuation [dB] still in the loss-independent region, None if the whole bracket is."""
    validate_mode(mode)
    lo, hi = bracket

    @functools.lru_cache(maxsize=None)
    def side(alpha: float) -> float:
        geom = LinkGeometry(attenuation_db=alpha, relative_transmittance=eta_zy)
        return 1.0 if maximize(params, geom, mode).regime == "loss-independent" else -1.0

    if side(lo) < 0:
        raise InfeasibleResultError(f"The optimum is already noise-limited at {lo} dB.")
    if side(hi) > 0:
        return None
    alpha = float(bisect(side, lo, hi, xtol=resolution_db))
    return alpha if side(alpha) > 0 else max(lo, alpha - resolution_db)


def register_threshold_tool(mcp):
    """Register the zero-secrecy threshold tool with the MCP server.

    Args:
        mcp: The FastMCP instance to register the tool with.

    Returns:
        The registered tool function.
    """
    @mcp.tool(
        annotations=cast(
            ToolAnnotations,
            {
                "title": "OOK Wiretap Zero-Secrecy Threshold",
                "summary": "Find the attenuation at which secrecy collapses",
                "description": "Returns the largest attenuation in dB at which the optimized secrecy rate still reaches a floor in bit/s.",
                "readOnlyHint": True,
                "idempotentHint": True,
            },
        )
    )
    def wiretap_zero_threshold(
        eta_zy: Annotated[float, Field(description="Relative transmittance eta_z/eta_y", ge=0.0, examples=[0.9])],
        mode: Annotated[str, Field(description="'secrecy' (no auxiliary channel) or 'secrecy-aux'", examples=["secrecy"])] = "secrecy",
        floor_bps: Annotated[float, Field(description="Rate floor in bit/s below which secrecy counts as lost", gt=0.0, examples=[1.0])] = DEFAULT_FLOOR_BPS,
        power_mw: Annotated[float, Field(description="Maximum average transmit power in mW", gt=0.0)] = 10.0,
        dcr_bob_cps: Annotated[float, Field(description="Bob's dark-count rate in counts/s", ge=0.0)] = 1e4,
        dcr_eve_cps: Annotated[float, Field(description="Eve's dark-count rate in counts/s", ge=0.0)] = 1.0,
        slot_ns: Annotated[float, Field(description="Detector slot width in ns", gt=0.0)] = 1.0,
        f0_thz: Annotated[float, Field(description="Optical center frequency in THz", gt=0.0)] = 200.0,
    ) -> Dict:
        """Find the zero-secrecy attenuation threshold. USE THIS FUNCTION when asked how much loss (or how long a
        link) still supports secret communication for a given eavesdropper transmittance.

        Returns:
            A dictionary with threshold_db (None when secrecy never collapses below 200 dB) and the inputs.
        """
        try:
            params = physical_params_from_user_units(power_mw, dcr_bob_cps, dcr_eve_cps, slot_ns, f0_thz)
            threshold = find_zero_threshold(params, eta_zy, cast(Mode, mode), floor_bps)
            return {
                "threshold_db": threshold,
                "input_parameters": {"physical": params.as_dict(), "eta_zy": eta_zy, "mode": mode, "floor_bps": floor_bps},
                "model": "ook-wiretap",
                "status": "success",
            }
        except (ValueError, RuntimeError) as e:
            raise e
        except Exception as e:
            raise RuntimeError(f"Error in zero-threshold calculation: {str(e)}")

    return wiretap_zero_threshold


def register_sweep_tool(mcp):
    """Register the attenuation sweep tool with the MCP server."""
    @mcp.tool(
        annotations=cast(
            ToolAnnotations,
            {
                "title": "OOK Wiretap Attenuation Sweep",
                "summary": "Optimized rates over a range of attenuations",
                "description": "Returns one optimum (rate, q*, n_A*, n_B*, power, regime) per attenuation value.",
                "readOnlyHint": True,
                "idempotentHint": True,
            },
        )
    )
    def wiretap_sweep(
        alphas_db: Annotated[list[float], Field(description="Attenuation values in dB", min_length=1, examples=[[60.0, 70.0, 80.0]])],
        mode: Annotated[str, Field(description="'capacity', 'secrecy' or 'secrecy-aux'", examples=["secrecy"])] = "secrecy",
        eta_zy: Annotated[float, Field(description="Relative transmittance eta_z/eta_y", ge=0.0)] = 0.9,
        power_mw: Annotated[float, Field(description="Maximum average transmit power in mW", gt=0.0)] = 10.0,
        dcr_bob_cps: Annotated[float, Field(description="Bob's dark-count rate in counts/s", ge=0.0)] = 1e4,
        dcr_eve_cps: Annotated[float, Field(description="Eve's dark-count rate in counts/s", ge=0.0)] = 1.0,
        slot_ns: Annotated[float, Field(description="Detector slot width in ns", gt=0.0)] = 1.0,
        f0_thz: Annotated[float, Field(description="Optical center frequency in THz", gt=0.0)] = 200.0,
    ) -> Dict:
        """Sweep the attenuation and optimize at every point. USE THIS FUNCTION to draw rate-versus-loss curves
        and to see where the loss-independent region ends."""
        try:
            params = physical_params_from_user_units(power_mw, dcr_bob_cps, dcr_eve_cps, slot_ns, f0_thz)
            rows = sweep_attenuation(params, alphas_db, cast(Mode, mode), eta_zy)
            return {
                "rows": [row.as_dict() for row in rows],
                "input_parameters": {"physical": params.as_dict(), "eta_zy": eta_zy, "mode": mode},
                "model": "ook-wiretap",
                "status": "success",
            }
        except (ValueError, RuntimeError) as e:
            raise e
        except Exception as e:
            raise RuntimeError(f"Error in attenuation sweep: {str(e)}")

    return wiretap_sweep
