# This file contains the OOK photon-counting channel model and the tool registration for it.

import math
from typing import Annotated, Any, Dict, cast

import numpy as np
from numpy.typing import ArrayLike
from pydantic import Field

ToolAnnotations = Any

from .wiretap_common import (
    DEFAULT_SLOT_SECONDS,
    BinaryChannel,
    InputStrategy,
    LinkGeometry,
    PhysicalParams,
    RateValue,
    as_output,
    binary_entropy_array,
    physical_params_from_user_units,
    validate_probability,
)


def click_probability(
    eta: ArrayLike, n_a: ArrayLike, dark_rate: ArrayLike, slot_seconds: ArrayLike
) -> float | np.ndarray:
    """
    Probability that an on-off detector clicks in one slot: 1 - exp(-(eta*n_a + lambda*Delta)).
    With n_a = 0 this is the dark-click probability.
    """
    eta, n_a, dark_rate, slot_seconds = (np.asarray(v, dtype=float) for v in (eta, n_a, dark_rate, slot_seconds))
    for name, value in (("eta", eta), ("n_a", n_a), ("dark_rate", dark_rate), ("slot_seconds", slot_seconds)):
        if np.any(np.isnan(value)):
            raise ValueError(f"Click probability input ({name}) must not be NaN.")
        if np.any(value < 0):
            raise ValueError(f"Click probability input ({name}) must be nonnegative.")
    with np.errstate(invalid="ignore"):
        # 0 * inf only appears for eta = 0 with unbounded photon numbers; no light reaches the detector.
        signal = np.where(eta == 0, 0.0, eta * n_a)
    return as_output(-np.expm1(-(signal + dark_rate * slot_seconds)))


def build_channels(params: PhysicalParams, geom: LinkGeometry, n_a: float) -> tuple[BinaryChannel, BinaryChannel]:
    """Main channel W_B = (a_y, b_y) and wiretapper channel W_E = (a_z, b_z) for n_a photons per on-pulse."""
    if math.isnan(n_a) or n_a < 0:
        raise ValueError(f"Photons per on-pulse (n_a) must be nonnegative. Got: {n_a}")
    a_y = click_probability(geom.eta_bob, 0.0, params.dcr_bob, params.slot_seconds)
    b_y = click_probability(geom.eta_bob, n_a, params.dcr_bob, params.slot_seconds)
    a_z = click_probability(geom.eta_eve, 0.0, params.dcr_eve, params.slot_seconds)
    b_z = click_probability(geom.eta_eve, n_a, params.dcr_eve, params.slot_seconds)
    return BinaryChannel(a_y, b_y), BinaryChannel(a_z, b_z)


def mutual_information_array(p1_given_0: ArrayLike, p1_given_1: ArrayLike, q: ArrayLike) -> np.ndarray:
    """I(X;Y) = H(Y) - H(Y|X) in nats for binary channels, elementwise over broadcast inputs."""
    p1_given_0 = np.asarray(p1_given_0, dtype=float)
    p1_given_1 = np.asarray(p1_given_1, dtype=float)
    q = np.asarray(q, dtype=float)
    p_y1 = (1.0 - q) * p1_given_0 + q * p1_given_1
    info = (
        binary_entropy_array(p_y1)
        - (1.0 - q) * binary_entropy_array(p1_given_0)
        - q * binary_entropy_array(p1_given_1)
    )
    # identical rows or a constant input carry nothing; entropy rounding leaves about 1e-17 behind
    silent = (p1_given_0 == p1_given_1) | (q == 0.0) | (q == 1.0)
    return np.where(silent, 0.0, np.maximum(info, 0.0))


def mutual_information(ch: BinaryChannel, q: float, slot_seconds: float = DEFAULT_SLOT_SECONDS) -> RateValue:
    """Mutual information between the OOK input (P(X=1) = q) and the click output of a binary channel."""
    validate_probability("On-probability", "q", q)
    nats = float(mutual_information_array(ch.p1_given_0, ch.p1_given_1, q))
    return RateValue(nats, slot_seconds)


def concatenate_array(a: ArrayLike, b: ArrayLike, p1_given_0: ArrayLike, p1_given_1: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return (1.0 - a) * p1_given_0 + a * p1_given_1, (1.0 - b) * p1_given_0 + b * p1_given_1


def concatenate(aux: tuple[float, float], ch: BinaryChannel) -> BinaryChannel:
    """Channel V -> Y obtained by feeding the flip channel P(X=1|V=0) = a, P(X=1|V=1) = b into ch."""
    a, b = aux
    validate_probability("Auxiliary flip probability", "a", a)
    validate_probability("Auxiliary keep probability", "b", b)
    p10, p11 = concatenate_array(a, b, ch.p1_given_0, ch.p1_given_1)
    return BinaryChannel(float(p10), float(p11))


def input_marginal(q: float, aux: tuple[float, float]) -> float:
    """P(X = 1) = (1-q) a + q b for V ~ Bernoulli(q) passed through the flip channel."""
    a, b = aux
    validate_probability("On-probability", "q", q)
    validate_probability("Auxiliary flip probability", "a", a)
    validate_probability("Auxiliary keep probability", "b", b)
    return (1.0 - q) * a + q * b


def power_used(q_x: float, n_a: float, params: PhysicalParams) -> float:
    """Average transmit power q_x * n_a * h f0 / Delta [W]."""
    if q_x < 0 or n_a < 0:
        raise ValueError(f"Power accounting needs nonnegative inputs. Got: q_x={q_x}, n_a={n_a}")
    if q_x == 0:
        return 0.0
    return q_x * n_a * params.watts_per_photon_rate


def objective_array(
    params: PhysicalParams,
    geom: LinkGeometry,
    q: ArrayLike,
    n_a: ArrayLike,
    a: ArrayLike = 0.0,
    b: ArrayLike = 1.0,
    include_eve: bool = True,
) -> np.ndarray:
    """
    Vectorized I(V;Y) - I(V;Z) (or I(V;Y) alone) in nats. With a = 0, b = 1 this is the
    plain objective over X; n_a is used as given, no power projection is applied.
    """
    q = np.asarray(q, dtype=float)
    n_a = np.asarray(n_a, dtype=float)
    delta = params.slot_seconds
    a_y = click_probability(geom.eta_bob, 0.0, params.dcr_bob, delta)
    b_y = click_probability(geom.eta_bob, n_a, params.dcr_bob, delta)
    main = mutual_information_array(*concatenate_array(a, b, a_y, b_y), q)
    if not include_eve:
        return main
    a_z = click_probability(geom.eta_eve, 0.0, params.dcr_eve, delta)
    b_z = click_probability(geom.eta_eve, n_a, params.dcr_eve, delta)
    eve = mutual_information_array(*concatenate_array(a, b, a_z, b_z), q)
    return main - eve


def secrecy_objective(params: PhysicalParams, geom: LinkGeometry, strategy: InputStrategy) -> RateValue:
    """I(main) - I(eve) for the strategy; may be negative."""
    a, b = strategy.aux if strategy.aux is not None else (0.0, 1.0)
    nats = float(objective_array(params, geom, strategy.q_on, strategy.n_a, a, b))
    if not math.isfinite(nats):
        raise RuntimeError("Secrecy objective resulted in a non-finite value. Please check your input parameters.")
    return RateValue(nats, params.slot_seconds)


def channel_report(params: PhysicalParams, geom: LinkGeometry, strategy: InputStrategy) -> Dict:
    """Channel matrices, mutual informations, secrecy objective and power accounting at one strategy."""
    w_b, w_e = build_channels(params, geom, strategy.n_a)
    report: Dict = {
        "w_bob": w_b.as_dict(),
        "w_eve": w_e.as_dict(),
        "mi_bob": mutual_information(w_b, strategy.input_marginal, params.slot_seconds).as_dict(),
        "mi_eve": mutual_information(w_e, strategy.input_marginal, params.slot_seconds).as_dict(),
    }
    if strategy.aux is not None:
        w_b_plus = concatenate(strategy.aux, w_b)
        w_e_plus = concatenate(strategy.aux, w_e)
        report["w_bob_aux"] = w_b_plus.as_dict()
        report["w_eve_aux"] = w_e_plus.as_dict()
        report["mi_bob_aux"] = mutual_information(w_b_plus, strategy.q_on, params.slot_seconds).as_dict()
        report["mi_eve_aux"] = mutual_information(w_e_plus, strategy.q_on, params.slot_seconds).as_dict()
    used = power_used(strategy.input_marginal, strategy.n_a, params)
    report["secrecy_objective"] = secrecy_objective(params, geom, strategy).as_dict()
    report["power_used_w"] = used
    report["feasible"] = used <= params.power_watts * (1.0 + 1e-9)
    return report


def register_channel_tool(mcp):
    """Register the wiretap channel evaluation tool with the MCP server.

    Args:
        mcp: The FastMCP instance to register the tool with.

    Returns:
        The registered tool function.
    """
    @mcp.tool(
        annotations=cast(
            ToolAnnotations,
            {
                "title": "OOK Wiretap Channel",
                "summary": "Evaluate Bob's and Eve's photon-counting channels",
                "description": "Returns the click-probability matrices, mutual informations, secrecy objective and transmit power for one OOK strategy.",
                "readOnlyHint": True,
                "idempotentHint": True,
            },
        )
    )
    def wiretap_channel(
        attenuation_db: Annotated[float, Field(description="Attenuation alpha towards Bob in dB", ge=0.0, examples=[70.0])],
        eta_zy: Annotated[float, Field(description="Relative transmittance eta_z/eta_y", ge=0.0, examples=[0.9])],
        q_on: Annotated[float, Field(description="Probability of sending an on-pulse", ge=0.0, le=1.0, examples=[0.544])],
        n_a: Annotated[float, Field(description="Mean photons per on-pulse at Alice", ge=0.0, examples=[1.94e7])],
        power_mw: Annotated[float, Field(description="Maximum average transmit power in mW", gt=0.0, examples=[10.0])] = 10.0,
        dcr_bob_cps: Annotated[float, Field(description="Bob's dark-count rate in counts/s", ge=0.0, examples=[1e4])] = 1e4,
        dcr_eve_cps: Annotated[float, Field(description="Eve's dark-count rate in counts/s", ge=0.0, examples=[1.0])] = 1.0,
        slot_ns: Annotated[float, Field(description="Detector slot width in ns", gt=0.0, examples=[1.0])] = 1.0,
        aux_a: Annotated[float | None, Field(description="Optional P(X=1|V=0) of the randomizing channel", ge=0.0, le=1.0)] = None,
        aux_b: Annotated[float | None, Field(description="Optional P(X=1|V=1) of the randomizing channel", ge=0.0, le=1.0)] = None,
    ) -> Dict:
        """Evaluate the OOK wiretap channel at one operating point. USE THIS FUNCTION when asked for click
        probabilities, the mutual information of Bob or Eve, or the secrecy rate achieved by a given on-probability
        and pulse photon number.

        Returns:
            A dictionary with the channel matrices, mutual informations (nats, bits/use, bit/s), the secrecy
            objective, the power used and the input parameters.
        """
        try:
            params = physical_params_from_user_units(power_mw, dcr_bob_cps, dcr_eve_cps, slot_ns)
            geom = LinkGeometry(attenuation_db=attenuation_db, relative_transmittance=eta_zy)
            aux = None if aux_a is None or aux_b is None else (aux_a, aux_b)
            strategy = InputStrategy(q_on=q_on, n_a=n_a, aux=aux)
            return {
                "channel": channel_report(params, geom, strategy),
                "input_parameters": {"physical": params.as_dict(), "geometry": geom.as_dict(), "strategy": strategy.as_dict()},
                "model": "ook-wiretap",
                "status": "success",
            }
        except OverflowError as e:
            raise OverflowError(f"Numerical overflow in channel calculation. Try using more moderate input values: {str(e)}")
        except ValueError as e:
            raise e
        except RuntimeError as e:
            raise e
        except Exception as e:
            raise RuntimeError(f"Error in wiretap channel calculation: {str(e)}")

    return wiretap_channel
