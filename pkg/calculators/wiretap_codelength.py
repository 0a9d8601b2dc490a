# This file contains the finite-length existence bounds 2 exp(-n F_c), 2 exp(-n H_c), the code length
# needed to meet error and leakage targets, and the tool registration for them.

import logging
import math
from dataclasses import dataclass
from typing import Annotated, Any, Dict, cast

import numpy as np
from pydantic import Field

ToolAnnotations = Any

from .wiretap_common import (
    InfeasibleResultError,
    LinkGeometry,
    RateValue,
    physical_params_from_user_units,
    validate_nonnegative,
    validate_positive,
)
from .wiretap_exponents import (
    RatePair,
    balance_randomness_rate,
    coding_rate,
    exponent_report,
    resolve_operating_point,
)

logger = logging.getLogger(__name__)

TABLE_N_MIN = 1e2
TABLE_N_MAX = 1e7
TABLE_POINTS_PER_DECADE = 10
CODELENGTH_CSV_HEADER = ("n", "eps_bound", "delta_bound")


@dataclass(frozen=True)
class FiniteLengthBound:
    """Upper bounds on Bob's decoding error and Eve's leaked information at code length n."""

    n: int
    eps_bound: float
    delta_bound: float

    def csv_cells(self) -> list:
        return [self.n, self.eps_bound, self.delta_bound]

    def as_dict(self) -> Dict:
        return dict(zip(CODELENGTH_CSV_HEADER, self.csv_cells()))


def _validate_exponents(f_c: float, h_c: float) -> None:
    validate_nonnegative("Error exponent", "F_c", f_c)
    validate_nonnegative("Secrecy exponent", "H_c", h_c)


def bounds_at_length(f_c: float, h_c: float, n: int) -> FiniteLengthBound:
    _validate_exponents(f_c, h_c)
    if n < 1:
        raise ValueError(f"Code length (n) must be at least 1. Got: {n}")
    return FiniteLengthBound(n=int(n), eps_bound=2.0 * math.exp(-n * f_c), delta_bound=2.0 * math.exp(-n * h_c))


def length_for_target(exponent: float, target: float, name: str = "target") -> int:
    """Smallest n >= 1 with 2 exp(-n * exponent) <= target."""
    validate_nonnegative("Exponent", "exponent", exponent)
    validate_positive("Bound target", name, target)
    if target >= 2.0:
        return 1
    if exponent == 0:
        raise InfeasibleResultError(f"A zero exponent never brings the bound 2 below the {name} of {target}.")
    return max(1, math.ceil(math.log(2.0 / target) / exponent))


def required_length(f_c: float, h_c: float, eps_target: float, delta_target: float) -> int:
    """Shortest code length meeting both the decoding-error target and the leaked-information target."""
    _validate_exponents(f_c, h_c)
    n = max(length_for_target(f_c, eps_target, "eps"), length_for_target(h_c, delta_target, "delta"))
    logger.debug("required length for eps=%g delta=%g with F=%.6e H=%.6e: %d", eps_target, delta_target, f_c, h_c, n)
    return n


def length_table(
    f_c: float,
    h_c: float,
    n_min: float = TABLE_N_MIN,
    n_max: float = TABLE_N_MAX,
    points_per_decade: int = TABLE_POINTS_PER_DECADE,
) -> list[FiniteLengthBound]:
    """Bounds on a log-spaced grid of integer code lengths, duplicates removed."""
    validate_positive("Smallest code length", "n_min", n_min)
    if n_max < n_min:
        raise ValueError(f"Largest code length (n_max) must be at least n_min. Got: {n_max} < {n_min}")
    decades = math.log10(n_max) - math.log10(n_min)
    grid = np.logspace(math.log10(n_min), math.log10(n_max), int(round(decades * points_per_decade)) + 1)
    lengths = np.unique(np.maximum(np.rint(grid), 1).astype(int))
    return [bounds_at_length(f_c, h_c, int(n)) for n in lengths]


def register_code_length_tool(mcp):
    """Register the required code length tool with the MCP server.

    Args:
        mcp: The FastMCP instance to register the tool with.

    Returns:
        The registered tool function.
    """
    @mcp.tool(
        annotations=cast(
            ToolAnnotations,
            {
                "title": "OOK Wiretap Code Length",
                "summary": "Code length meeting decoding-error and leakage targets",
                "description": "Returns the exponents and the shortest code length n with 2exp(-nF_c) <= eps and 2exp(-nH_c) <= delta.",
                "readOnlyHint": True,
                "idempotentHint": True,
            },
        )
    )
    def wiretap_code_length(
        attenuation_db: Annotated[float, Field(description="Attenuation alpha towards Bob in dB", ge=0.0, examples=[70.0])],
        eta_zy: Annotated[float, Field(description="Relative transmittance eta_z/eta_y", ge=0.0, examples=[0.9])] = 0.9,
        eps: Annotated[float, Field(description="Target decoding error probability", gt=0.0, examples=[1e-9])] = 1e-9,
        delta: Annotated[float, Field(description="Target leaked information in nats", gt=0.0, examples=[1e-9])] = 1e-9,
        rb_bps: Annotated[float | None, Field(description="Coding rate R_B in bit/s", ge=0.0)] = None,
        rb_frac: Annotated[float | None, Field(description="Coding rate as a fraction of the secrecy rate", ge=0.0, le=1.0)] = 0.5,
        re_bps: Annotated[float | None, Field(description="Randomness rate R_E in bit/s; balanced when omitted", ge=0.0)] = None,
        power_mw: Annotated[float, Field(description="Maximum average transmit power in mW", gt=0.0)] = 10.0,
        dcr_bob_cps: Annotated[float, Field(description="Bob's dark-count rate in counts/s", ge=0.0)] = 1e4,
        dcr_eve_cps: Annotated[float, Field(description="Eve's dark-count rate in counts/s", ge=0.0)] = 1.0,
        slot_ns: Annotated[float, Field(description="Detector slot width in ns", gt=0.0)] = 1.0,
        f0_thz: Annotated[float, Field(description="Optical center frequency in THz", gt=0.0)] = 200.0,
    ) -> Dict:
        """Find the code length for target error and leakage. USE THIS FUNCTION when asked how long a wiretap code
        must be to become error-free and secret at the secrecy-rate operating point.

        Returns:
            A dictionary with n, its duration in seconds, the exponents and the rates used.
        """
        try:
            params = physical_params_from_user_units(power_mw, dcr_bob_cps, dcr_eve_cps, slot_ns, f0_thz)
            geom = LinkGeometry(attenuation_db=attenuation_db, relative_transmittance=eta_zy)
            q, n_a, secrecy_rate = resolve_operating_point(params, geom)
            r_b = coding_rate(secrecy_rate, rb_bps, rb_frac if rb_bps is None else None, params.slot_seconds)
            if re_bps is None:
                r_e: RateValue = balance_randomness_rate(params, geom, q, n_a, r_b).r_e
            else:
                r_e = RateValue.from_bits_per_second(re_bps, params.slot_seconds)
            report = exponent_report(params, geom, q, n_a, RatePair(r_b, r_e))
            n = required_length(report.f_c, report.h_c, eps, delta)
            return {
                "n": n,
                "duration_seconds": n * params.slot_seconds,
                "exponents": report.as_dict(),
                "input_parameters": {"physical": params.as_dict(), "geometry": geom.as_dict(), "eps": eps, "delta": delta},
                "model": "ook-wiretap",
                "status": "success",
            }
        except (ValueError, RuntimeError) as e:
            raise e
        except Exception as e:
            raise RuntimeError(f"Error in code length calculation: {str(e)}")

    return wiretap_code_length
