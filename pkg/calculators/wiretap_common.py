# This file contains the shared types, constants and validation helpers for the OOK wiretap calculators.

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import entr

PLANCK_CONSTANT = 6.62607015e-34  # J*s, exact SI value

# Reference link (P = 10 mW, 10 kcps / 1 cps dark counts, 1 ns slots, 200 THz carrier)
DEFAULT_POWER_WATTS = 10e-3
DEFAULT_DCR_BOB = 1e4
DEFAULT_DCR_EVE = 1.0
DEFAULT_SLOT_SECONDS = 1e-9
DEFAULT_PULSE_SECONDS = 1e-10
DEFAULT_OPTICAL_FREQ_HZ = 2e14

LN2 = math.log(2.0)

Mode = Literal["capacity", "secrecy", "secrecy-aux"]
Regime = Literal["loss-independent", "noise-limited"]
MODES: tuple[str, ...] = ("capacity", "secrecy", "secrecy-aux")


class InfeasibleResultError(RuntimeError):
    """Raised when a requested quantity does not exist for the given inputs."""


def validate_positive(name: str, symbol: str, value: float) -> None:
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} ({symbol}) must be positive. Got: {value}")


def validate_nonnegative(name: str, symbol: str, value: float) -> None:
    if math.isnan(value) or value < 0:
        raise ValueError(f"{name} ({symbol}) must be nonnegative. Got: {value}")


def validate_probability(name: str, symbol: str, value: float) -> None:
    if math.isnan(value) or value < 0 or value > 1:
        raise ValueError(f"{name} ({symbol}) must lie in [0, 1]. Got: {value}")


def validate_mode(mode: str, allowed: tuple[str, ...] = MODES) -> None:
    if mode not in allowed:
        raise ValueError(f"Mode must be one of {', '.join(allowed)}. Got: {mode}")


@dataclass(frozen=True)
class PhysicalParams:
    """Physical description of the link: power budget, detectors and timing."""

    power_watts: float = DEFAULT_POWER_WATTS
    dcr_bob: float = DEFAULT_DCR_BOB
    dcr_eve: float = DEFAULT_DCR_EVE
    slot_seconds: float = DEFAULT_SLOT_SECONDS
    pulse_seconds: float = DEFAULT_PULSE_SECONDS
    optical_freq_hz: float = DEFAULT_OPTICAL_FREQ_HZ
    planck: float = PLANCK_CONSTANT

    def __post_init__(self) -> None:
        validate_positive("Maximum average power", "power_watts", self.power_watts)
        validate_nonnegative("Dark-count rate", "dcr_bob", self.dcr_bob)
        validate_nonnegative("Dark-count rate", "dcr_eve", self.dcr_eve)
        validate_positive("Slot width", "slot_seconds", self.slot_seconds)
        validate_positive("Pulse width", "pulse_seconds", self.pulse_seconds)
        validate_positive("Optical frequency", "optical_freq_hz", self.optical_freq_hz)
        validate_positive("Planck constant", "planck", self.planck)
        if not math.isfinite(self.dcr_bob) or not math.isfinite(self.dcr_eve):
            raise ValueError("Dark-count rates must be finite.")
        if self.pulse_seconds >= self.slot_seconds:
            raise ValueError(
                f"Pulse width ({self.pulse_seconds} s) must be shorter than the slot width ({self.slot_seconds} s)."
            )

    @property
    def photon_energy_joules(self) -> float:
        return self.planck * self.optical_freq_hz

    @property
    def watts_per_photon_rate(self) -> float:
        """Average power of one photon per slot, h*f0/Delta [W]."""
        return self.photon_energy_joules / self.slot_seconds

    @property
    def max_photons_per_slot(self) -> float:
        """Photons per on-pulse that exhaust the power budget when q = 1."""
        return self.power_watts * self.slot_seconds / self.photon_energy_joules

    @property
    def bandwidth_hz(self) -> float:
        # B * Delta_p = 1
        return 1.0 / self.pulse_seconds

    @property
    def dark_mean_bob(self) -> float:
        return self.dcr_bob * self.slot_seconds

    @property
    def dark_mean_eve(self) -> float:
        return self.dcr_eve * self.slot_seconds

    def as_dict(self) -> dict:
        return {
            "power_watts": self.power_watts,
            "dcr_bob": self.dcr_bob,
            "dcr_eve": self.dcr_eve,
            "slot_seconds": self.slot_seconds,
            "pulse_seconds": self.pulse_seconds,
            "optical_freq_hz": self.optical_freq_hz,
            "planck": self.planck,
        }


@dataclass(frozen=True)
class LinkGeometry:
    """Channel loss alpha [dB] towards Bob and Eve's share eta_zy of Bob's received power."""

    attenuation_db: float = 70.0
    relative_transmittance: float = 0.9

    def __post_init__(self) -> None:
        validate_nonnegative("Attenuation", "attenuation_db", self.attenuation_db)
        validate_nonnegative("Relative transmittance", "eta_zy", self.relative_transmittance)
        if not math.isfinite(self.attenuation_db):
            raise ValueError(f"Attenuation (attenuation_db) must be finite. Got: {self.attenuation_db}")
        if self.eta_eve > 1.0:
            raise ValueError(
                f"Eve's transmittance eta_zy * eta_y = {self.eta_eve} exceeds 1; lower eta_zy or raise the attenuation."
            )

    @property
    def eta_bob(self) -> float:
        return 10.0 ** (-self.attenuation_db / 10.0)

    @property
    def eta_eve(self) -> float:
        return self.relative_transmittance * self.eta_bob

    def with_attenuation(self, attenuation_db: float) -> "LinkGeometry":
        return LinkGeometry(attenuation_db=attenuation_db, relative_transmittance=self.relative_transmittance)

    def as_dict(self) -> dict:
        return {
            "attenuation_db": self.attenuation_db,
            "relative_transmittance": self.relative_transmittance,
            "eta_bob": self.eta_bob,
            "eta_eve": self.eta_eve,
        }


@dataclass(frozen=True)
class BinaryChannel:
    """2x2 stochastic matrix given by the click probabilities p(1|0) and p(1|1)."""

    p1_given_0: float
    p1_given_1: float

    def __post_init__(self) -> None:
        validate_probability("Click probability", "p(1|0)", self.p1_given_0)
        validate_probability("Click probability", "p(1|1)", self.p1_given_1)

    def as_matrix(self) -> np.ndarray:
        """Rows are inputs x, columns are outputs y."""
        return np.array(
            [
                [1.0 - self.p1_given_0, self.p1_given_0],
                [1.0 - self.p1_given_1, self.p1_given_1],
            ]
        )

    def as_dict(self) -> dict:
        return {"p1_given_0": self.p1_given_0, "p1_given_1": self.p1_given_1}


@dataclass(frozen=True)
class InputStrategy:
    """Alice's choices: on-probability q, photons per on-pulse n_a and an optional flip channel (a, b)."""

    q_on: float
    n_a: float
    aux: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        validate_probability("On-probability", "q_on", self.q_on)
        validate_nonnegative("Photons per on-pulse", "n_a", self.n_a)
        if self.aux is not None:
            a, b = self.aux
            validate_probability("Auxiliary flip probability", "a = P(X=1|V=0)", a)
            validate_probability("Auxiliary keep probability", "b = P(X=1|V=1)", b)

    @property
    def input_marginal(self) -> float:
        """P(X = 1) after the auxiliary channel."""
        if self.aux is None:
            return self.q_on
        a, b = self.aux
        return (1.0 - self.q_on) * a + self.q_on * b

    @property
    def flip_0_to_1(self) -> float:
        return 0.0 if self.aux is None else self.aux[0]

    @property
    def flip_1_to_0(self) -> float:
        return 0.0 if self.aux is None else 1.0 - self.aux[1]

    def as_dict(self) -> dict:
        return {
            "q_on": self.q_on,
            "n_a": self.n_a,
            "aux": None if self.aux is None else {"a": self.aux[0], "b": self.aux[1]},
            "flip_0_to_1": self.flip_0_to_1,
            "flip_1_to_0": self.flip_1_to_0,
        }


@dataclass(frozen=True)
class RateValue:
    """A rate held in nats per channel use, with bits/use and bits/s views at slot width Delta."""

    nats_per_use: float
    slot_seconds: float = field(default=DEFAULT_SLOT_SECONDS)

    @classmethod
    def from_bits_per_use(cls, bits: float, slot_seconds: float = DEFAULT_SLOT_SECONDS) -> "RateValue":
        return cls(bits * LN2, slot_seconds)

    @classmethod
    def from_bits_per_second(cls, bps: float, slot_seconds: float = DEFAULT_SLOT_SECONDS) -> "RateValue":
        return cls(bps * slot_seconds * LN2, slot_seconds)

    @property
    def bits_per_use(self) -> float:
        return self.nats_per_use / LN2

    @property
    def bits_per_second(self) -> float:
        return self.bits_per_use / self.slot_seconds

    def scaled(self, factor: float) -> "RateValue":
        return RateValue(self.nats_per_use * factor, self.slot_seconds)

    def as_dict(self) -> dict:
        return {
            "nats_per_use": self.nats_per_use,
            "bits_per_use": self.bits_per_use,
            "bits_per_second": self.bits_per_second,
        }


def as_output(values: np.ndarray) -> float | np.ndarray:
    """Return a Python float for 0-d results and the array otherwise."""
    return float(values) if np.ndim(values) == 0 else values


def binary_entropy_array(p: ArrayLike) -> np.ndarray:
    """Binary entropy in nats, elementwise, with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    return entr(p) + entr(1.0 - p)


def binary_entropy(p: float) -> float:
    """Binary entropy h(p) = -p ln p - (1-p) ln(1-p) in nats."""
    validate_probability("Probability", "p", p)
    # 1 - L is exact for L in [0.5, 1], so h(p) and h(1-p) see identical operands.
    large = max(p, 1.0 - p)
    return float(entr(1.0 - large) + entr(large))


def physical_params_from_user_units(
    power_mw: float = DEFAULT_POWER_WATTS * 1e3,
    dcr_bob_cps: float = DEFAULT_DCR_BOB,
    dcr_eve_cps: float = DEFAULT_DCR_EVE,
    slot_ns: float = DEFAULT_SLOT_SECONDS * 1e9,
    f0_thz: float = DEFAULT_OPTICAL_FREQ_HZ / 1e12,
) -> PhysicalParams:
    """Build PhysicalParams from mW, counts/s, ns and THz; the pulse width is a tenth of the slot."""
    return PhysicalParams(
        power_watts=power_mw / 1e3,
        dcr_bob=dcr_bob_cps,
        dcr_eve=dcr_eve_cps,
        slot_seconds=slot_ns / 1e9,
        pulse_seconds=slot_ns / 1e10,
        optical_freq_hz=f0_thz * 1e12,
    )
