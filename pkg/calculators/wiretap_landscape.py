# This file contains objective maps over (q, n_B), the gain of the randomizing channel at fixed n_B,
# and the more-capable comparison of the two channels.

import logging
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .wiretap_channel import objective_array
from .wiretap_common import LinkGeometry, PhysicalParams, RateValue, validate_mode, validate_nonnegative, validate_probability

logger = logging.getLogger(__name__)

LANDSCAPE_CSV_HEADER = ("q", "n_b", "objective_bits", "feasible")
AUX_GAIN_CSV_HEADER = ("q", "f_be_bits", "f_be_aux_bits", "a_star", "flip_1_to_0")

_SMALL = np.logspace(-9.0, -1.0, 33)
FLIP_GRID = np.unique(np.concatenate([[0.0], _SMALL, np.linspace(0.1, 0.9, 17), 1.0 - _SMALL, [1.0]]))
LOGIT_CLIP = 30.0


@dataclass(frozen=True)
class Landscape:
    """Objective in nats per use on the grid q x n_B, with the power-feasibility mask."""

    qs: np.ndarray
    n_bs: np.ndarray
    values: np.ndarray  # shape (len(qs), len(n_bs))
    feasible: np.ndarray
    slot_seconds: float

    def rows(self) -> list[list]:
        out = []
        for i, q in enumerate(self.qs):
            for j, n_b in enumerate(self.n_bs):
                bits = RateValue(float(self.values[i, j]), self.slot_seconds).bits_per_use
                out.append([float(q), float(n_b), bits, bool(self.feasible[i, j])])
        return out


@dataclass(frozen=True)
class AuxGainPoint:
    q: float
    f_be: RateValue
    f_be_aux: RateValue
    a_star: float
    b_star: float

    def csv_cells(self) -> list:
        return [self.q, self.f_be.bits_per_use, self.f_be_aux.bits_per_use, self.a_star, 1.0 - self.b_star]

    def as_dict(self) -> Dict:
        return dict(zip(AUX_GAIN_CSV_HEADER, self.csv_cells()))


@dataclass(frozen=True)
class MoreCapableCheck:
    more_capable: bool
    min_margin_nats: float
    q_at_min: float

    def as_dict(self) -> Dict:
        return {"more_capable": self.more_capable, "min_margin_nats": self.min_margin_nats, "q_at_min": self.q_at_min}


def _as_grid(name: str, values: Sequence[float], probability: bool) -> np.ndarray:
    grid = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError(f"Grid ({name}) must be a non-empty sequence.")
    for v in grid:
        if probability:
            validate_probability("Grid value", name, float(v))
        else:
            validate_nonnegative("Grid value", name, float(v))
    return grid


def objective_landscape(
    params: PhysicalParams, geom: LinkGeometry, qs: Sequence[float], n_bs: Sequence[float], mode: str = "secrecy"
) -> Landscape:
    """
    f_B (mode 'capacity') or f_BE (mode 'secrecy') over q and received photons n_B = eta_y n_A.
    Cells with q n_B h f0 / Delta > eta_y P lie beyond the power boundary and are flagged infeasible.
    """
    validate_mode(mode, ("capacity", "secrecy"))
    q_grid = _as_grid("qs", qs, probability=True)
    nb_grid = _as_grid("n_bs", n_bs, probability=False)
    q_mesh, nb_mesh = np.meshgrid(q_grid, nb_grid, indexing="ij")
    values = objective_array(params, geom, q_mesh, nb_mesh / geom.eta_bob, include_eve=mode == "secrecy")
    received_power = q_mesh * nb_mesh * params.watts_per_photon_rate
    feasible = received_power <= geom.eta_bob * params.power_watts * (1.0 + 1e-12)
    return Landscape(q_grid, nb_grid, values, feasible, params.slot_seconds)


def _best_flip(params: PhysicalParams, geom: LinkGeometry, q: float, n_a: float) -> tuple[float, float, float]:
    a_mesh, b_mesh = np.meshgrid(FLIP_GRID, FLIP_GRID, indexing="ij")
    values = objective_array(params, geom, q, n_a, a_mesh, b_mesh)
    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    best = (float(values[i, j]), float(FLIP_GRID[i]), float(FLIP_GRID[j]))

    def negative(x: np.ndarray) -> float:
        a, b = expit(np.clip(x, -LOGIT_CLIP, LOGIT_CLIP))
        return -float(objective_array(params, geom, q, n_a, a, b))

    x0 = np.clip(logit(np.array([best[1], best[2]])), -LOGIT_CLIP, LOGIT_CLIP)
    res = minimize(negative, x0, method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-14})
    if -res.fun > best[0]:
        a, b = expit(np.clip(res.x, -LOGIT_CLIP, LOGIT_CLIP))
        best = (float(-res.fun), float(a), float(b))
    return best


def aux_gain_profile(params: PhysicalParams, eta_zy: float, n_b: float, qs: Sequence[float]) -> list[AuxGainPoint]:
    """
    Per q at fixed received photons n_B: the plain objective f_BE and its maximum over the
    randomizing channel (a, b). The power budget is not applied. Both objectives depend on the
    link only through n_B and eta_zy.
    """
    validate_nonnegative("Received photons per on-pulse", "n_b", n_b)
    q_grid = _as_grid("qs", qs, probability=True)
    geom = LinkGeometry(attenuation_db=0.0, relative_transmittance=eta_zy)
    points = []
    for q in q_grid:
        plain = float(objective_array(params, geom, q, n_b))
        value, a, b = _best_flip(params, geom, float(q), n_b)
        points.append(
            AuxGainPoint(
                q=float(q),
                f_be=RateValue(plain, params.slot_seconds),
                f_be_aux=RateValue(max(value, plain), params.slot_seconds),
                a_star=a if value > plain else 0.0,
                b_star=b if value > plain else 1.0,
            )
        )
        logger.debug("aux gain q=%.4g: plain %.6e, with aux %.6e nats", q, plain, value)
    return points


def is_more_capable(params: PhysicalParams, geom: LinkGeometry, n_a: float, qs: Sequence[float]) -> MoreCapableCheck:
    """Whether I(X;Y) >= I(X;Z) at every q on the grid; if so the randomizing channel cannot help at this n_a."""
    validate_nonnegative("Photons per on-pulse", "n_a", n_a)
    q_grid = _as_grid("qs", qs, probability=True)
    margins = objective_array(params, geom, q_grid, n_a)
    k = int(np.argmin(margins))
    return MoreCapableCheck(bool(margins[k] >= 0.0), float(margins[k]), float(q_grid[k]))
