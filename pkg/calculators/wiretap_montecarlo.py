# This file contains the slot-by-slot Monte Carlo simulation of Bob's and Eve's detector clicks,
# empirical channel and mutual-information estimates, and the tool registration for them.

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Annotated, Any, Dict, cast

import numpy as np
from pydantic import Field
from scipy.special import entr
from scipy.stats import chi2_contingency

ToolAnnotations = Any

from .wiretap_channel import build_channels
from .wiretap_common import (
    DEFAULT_SLOT_SECONDS,
    BinaryChannel,
    InputStrategy,
    LinkGeometry,
    PhysicalParams,
    RateValue,
    physical_params_from_user_units,
)

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "Philox"
DEFAULT_BLOCKS = 100
MAX_POISSON_MEAN = 1e6  # a zero count is already impossible in double precision


@dataclass(frozen=True, eq=False)
class ClickTally:
    """Counts of (input symbol X, click outcome) for one receiver, kept per simulation block."""

    block_counts: np.ndarray  # shape (blocks, 2, 2), indexed [block, x, click]

    @property
    def counts(self) -> np.ndarray:
        return self.block_counts.sum(axis=0)

    @property
    def n00(self) -> int:
        return int(self.counts[0, 0])

    @property
    def n01(self) -> int:
        return int(self.counts[0, 1])

    @property
    def n10(self) -> int:
        return int(self.counts[1, 0])

    @property
    def n11(self) -> int:
        return int(self.counts[1, 1])

    @property
    def trials(self) -> tuple[int, int]:
        """Slots per input symbol (0, 1)."""
        rows = self.counts.sum(axis=1)
        return int(rows[0]), int(rows[1])

    def merge(self, other: "ClickTally") -> "ClickTally":
        return ClickTally(np.concatenate([self.block_counts, other.block_counts]))

    def __add__(self, other: "ClickTally") -> "ClickTally":
        return self.merge(other)

    def channel_estimate(self) -> tuple[BinaryChannel, tuple[float, float]]:
        """Empirical (p(1|0), p(1|1)) and their binomial standard errors."""
        trials = self.trials
        if min(trials) == 0:
            raise ValueError(f"Channel estimate needs both input symbols to be sent. Got trials per symbol: {trials}")
        p = (self.n01 / trials[0], self.n11 / trials[1])
        se = tuple(math.sqrt(pi * (1.0 - pi) / n) for pi, n in zip(p, trials))
        return BinaryChannel(*p), cast(tuple[float, float], se)

    def as_dict(self) -> Dict:
        return {"n00": self.n00, "n01": self.n01, "n10": self.n10, "n11": self.n11, "trials": list(self.trials)}


@dataclass(frozen=True, eq=False)
class JointClickTally:
    """Counts over (X, Bob click, Eve click) per simulation block."""

    block_counts: np.ndarray  # shape (blocks, 2, 2, 2), indexed [block, x, y, z]

    @property
    def counts(self) -> np.ndarray:
        return self.block_counts.sum(axis=0)

    @property
    def n_slots(self) -> int:
        return int(self.block_counts.sum())

    def bob(self) -> ClickTally:
        return ClickTally(self.block_counts.sum(axis=3))

    def eve(self) -> ClickTally:
        return ClickTally(self.block_counts.sum(axis=2))

    def merge(self, other: "JointClickTally") -> "JointClickTally":
        return JointClickTally(np.concatenate([self.block_counts, other.block_counts]))

    def __add__(self, other: "JointClickTally") -> "JointClickTally":
        return self.merge(other)


@dataclass(frozen=True)
class EmpiricalRate:
    """Plug-in mutual information with its standard error, both in nats per use."""

    rate: RateValue
    std_error_nats: float
    method: str

    def as_dict(self) -> Dict:
        return self.rate.as_dict() | {
            "std_error_nats": self.std_error_nats,
            "std_error_bits": self.std_error_nats / math.log(2.0),
            "method": self.method,
        }


def _block_sizes(n_slots: int, blocks: int) -> list[int]:
    blocks = min(blocks, n_slots)
    base, extra = divmod(n_slots, blocks)
    return [base + 1 if i < extra else base for i in range(blocks)]


def _clicks(rng: np.random.Generator, x: np.ndarray, mean_off: float, mean_on: float) -> np.ndarray:
    means = np.minimum(np.where(x, mean_on, mean_off), MAX_POISSON_MEAN)
    return rng.poisson(means) > 0


def _simulate_block(
    seed: np.random.SeedSequence, size: int, strategy: InputStrategy, means: tuple[float, float, float, float]
) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.random(size) < strategy.q_on
    if strategy.aux is None:
        x = v
    else:
        a, b = strategy.aux
        u = rng.random(size)
        x = np.where(v, u < b, u < a)
    # Bob and Eve are conditionally independent given X.
    y = _clicks(rng, x, means[0], means[1])
    z = _clicks(rng, x, means[2], means[3])
    cells = 4 * x.astype(np.int64) + 2 * y.astype(np.int64) + z.astype(np.int64)
    return np.bincount(cells, minlength=8).reshape(2, 2, 2)


def simulate_joint_clicks(
    params: PhysicalParams,
    geom: LinkGeometry,
    strategy: InputStrategy,
    n_slots: int,
    seed: int,
    *,
    blocks: int = DEFAULT_BLOCKS,
    workers: int = 1,
) -> JointClickTally:
    """
    Draw X (through the auxiliary channel when present) and Poisson photon counts for both receivers
    in every slot; a click is at least one count. Blocks use disjoint Philox substreams spawned from
    seed, so the tally does not depend on workers.
    """
    if n_slots < 1:
        raise ValueError(f"Number of slots (n_slots) must be at least 1. Got: {n_slots}")
    if blocks < 1:
        raise ValueError(f"Number of blocks (blocks) must be at least 1. Got: {blocks}")
    delta = params.slot_seconds
    means = (
        params.dcr_bob * delta,
        geom.eta_bob * strategy.n_a + params.dcr_bob * delta,
        params.dcr_eve * delta,
        geom.eta_eve * strategy.n_a + params.dcr_eve * delta,
    )
    sizes = _block_sizes(int(n_slots), blocks)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    logger.debug("simulating %d slots in %d blocks (seed=%d, workers=%d)", n_slots, len(sizes), seed, workers)

    def run(i: int) -> np.ndarray:
        return _simulate_block(streams[i], sizes[i], strategy, means)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_block = list(pool.map(run, range(len(sizes))))
    else:
        per_block = [run(i) for i in range(len(sizes))]
    return JointClickTally(np.stack(per_block))


def simulate_clicks(
    params: PhysicalParams,
    geom: LinkGeometry,
    strategy: InputStrategy,
    n_slots: int,
    seed: int,
    *,
    blocks: int = DEFAULT_BLOCKS,
    workers: int = 1,
) -> tuple[ClickTally, ClickTally]:
    """Bob's and Eve's click tallies from one joint simulation."""
    joint = simulate_joint_clicks(params, geom, strategy, n_slots, seed, blocks=blocks, workers=workers)
    return joint.bob(), joint.eve()


def _plug_in_mi(counts: np.ndarray) -> float:
    joint = counts / counts.sum()
    p_x = joint.sum(axis=1)
    p_y = joint.sum(axis=0)
    h_y = float(entr(p_y).sum())
    h_xy = float(entr(joint).sum())
    h_x = float(entr(p_x).sum())
    return max(h_y + h_x - h_xy, 0.0)


def _density_std_error(counts: np.ndarray) -> float:
    """sqrt(Var[i(X;Y)] / N) with i the empirical information density."""
    n = counts.sum()
    joint = counts / n
    outer = np.outer(joint.sum(axis=1), joint.sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.where(joint > 0, np.log(joint / outer), 0.0)
    mean = float((joint * density).sum())
    var = float((joint * (density - mean) ** 2).sum())
    return math.sqrt(max(var, 0.0) / n)


def empirical_mutual_information(tally: ClickTally, slot_seconds: float = DEFAULT_SLOT_SECONDS) -> EmpiricalRate:
    """Plug-in I(X; click) of the tally, standard error by the leave-one-block-out jackknife."""
    counts = tally.counts
    if min(tally.trials) == 0:
        raise ValueError(f"Mutual information estimate needs both input symbols to be sent. Got trials per symbol: {tally.trials}")
    value = _plug_in_mi(counts)
    blocks = tally.block_counts
    leave_one_out = counts[None, :, :] - blocks
    if blocks.shape[0] < 2 or np.any(leave_one_out.sum(axis=2) == 0):
        return EmpiricalRate(RateValue(value, slot_seconds), _density_std_error(counts), "information-density")
    replicates = np.array([_plug_in_mi(c) for c in leave_one_out])
    b = replicates.size
    std_error = math.sqrt((b - 1) / b * float(((replicates - replicates.mean()) ** 2).sum()))
    return EmpiricalRate(RateValue(value, slot_seconds), std_error, "jackknife")


def conditional_independence_pvalues(joint: JointClickTally) -> tuple[float, float]:
    """Chi-square p-values of Bob's click being independent of Eve's given X = 0 and X = 1."""
    pvalues = []
    for table in joint.counts:
        if np.any(table.sum(axis=0) == 0) or np.any(table.sum(axis=1) == 0):
            # a constant outcome is trivially independent
            pvalues.append(1.0)
            continue
        result = chi2_contingency(table, correction=False)
        pvalues.append(float(result[1]))
    return pvalues[0], pvalues[1]


def simulation_report(
    params: PhysicalParams, geom: LinkGeometry, strategy: InputStrategy, n_slots: int, seed: int, *, workers: int = 1
) -> Dict:
    """Tallies, empirical against analytic channels, mutual-information estimates and independence p-values."""
    joint = simulate_joint_clicks(params, geom, strategy, n_slots, seed, workers=workers)
    w_b, w_e = build_channels(params, geom, strategy.n_a)
    report: Dict = {"rng": {"algorithm": RNG_ALGORITHM, "seed": seed, "blocks": int(joint.block_counts.shape[0])}}
    for name, tally, analytic in (("bob", joint.bob(), w_b), ("eve", joint.eve(), w_e)):
        entry: Dict = {"tally": tally.as_dict(), "analytic": analytic.as_dict()}
        if min(tally.trials) > 0:
            estimate, se = tally.channel_estimate()
            entry["empirical"] = estimate.as_dict() | {"std_error": list(se)}
            entry["mutual_information"] = empirical_mutual_information(tally, params.slot_seconds).as_dict()
        report[name] = entry
    p0, p1 = conditional_independence_pvalues(joint)
    report["independence_pvalues"] = {"x0": p0, "x1": p1}
    return report


def register_simulate_tool(mcp):
    """Register the click simulation tool with the MCP server.

    Args:
        mcp: The FastMCP instance to register the tool with.

    Returns:
        The registered tool function.
    """
    @mcp.tool(
        annotations=cast(
            ToolAnnotations,
            {
                "title": "OOK Wiretap Click Simulation",
                "summary": "Monte Carlo check of the photon-counting channels",
                "description": "Simulates detector clicks slot by slot and compares empirical channels and mutual informations with the analytic model.",
                "readOnlyHint": True,
                "idempotentHint": True,
            },
        )
    )
    def wiretap_simulate_clicks(
        attenuation_db: Annotated[float, Field(description="Attenuation alpha towards Bob in dB", ge=0.0, examples=[70.0])],
        q_on: Annotated[float, Field(description="Probability of sending an on-pulse", ge=0.0, le=1.0, examples=[0.544])],
        n_a: Annotated[float, Field(description="Mean photons per on-pulse at Alice", ge=0.0, examples=[1.94e7])],
        eta_zy: Annotated[float, Field(description="Relative transmittance eta_z/eta_y", ge=0.0)] = 0.9,
        n_slots: Annotated[int, Field(description="Number of simulated slots", ge=1, le=10_000_000, examples=[1_000_000])] = 1_000_000,
        seed: Annotated[int, Field(description="Seed of the random number generator", ge=0, examples=[1])] = 1,
        aux_a: Annotated[float | None, Field(description="Optional P(X=1|V=0) of the randomizing channel", ge=0.0, le=1.0)] = None,
        aux_b: Annotated[float | None, Field(description="Optional P(X=1|V=1) of the randomizing channel", ge=0.0, le=1.0)] = None,
        power_mw: Annotated[float, Field(description="Maximum average transmit power in mW", gt=0.0)] = 10.0,
        dcr_bob_cps: Annotated[float, Field(description="Bob's dark-count rate in counts/s", ge=0.0)] = 1e4,
        dcr_eve_cps: Annotated[float, Field(description="Eve's dark-count rate in counts/s", ge=0.0)] = 1.0,
        slot_ns: Annotated[float, Field(description="Detector slot width in ns", gt=0.0)] = 1.0,
    ) -> Dict:
        """Simulate detector clicks. USE THIS FUNCTION to validate the analytic click probabilities and mutual
        informations with an independent stochastic experiment."""
        try:
            params = physical_params_from_user_units(power_mw, dcr_bob_cps, dcr_eve_cps, slot_ns)
            geom = LinkGeometry(attenuation_db=attenuation_db, relative_transmittance=eta_zy)
            aux = None if aux_a is None or aux_b is None else (aux_a, aux_b)
            strategy = InputStrategy(q_on=q_on, n_a=n_a, aux=aux)
            return {
                "simulation": simulation_report(params, geom, strategy, n_slots, seed),
                "input_parameters": {"physical": params.as_dict(), "geometry": geom.as_dict(), "strategy": strategy.as_dict()},
                "model": "ook-wiretap",
                "status": "success",
            }
        except (ValueError, RuntimeError) as e:
            raise e
        except Exception as e:
            raise RuntimeError(f"Error in click simulation: {str(e)}")

    return wiretap_simulate_clicks
