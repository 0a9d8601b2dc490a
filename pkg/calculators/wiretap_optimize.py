# This file contains the constrained maximization of capacity, secrecy rate and secrecy capacity
# over Alice's OOK strategy, plus the tool registrations for them.

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Annotated, Any, Dict, Sequence, cast

import numpy as np
from pydantic import Field
from scipy.optimize import minimize
from scipy.special import expit, logit

ToolAnnotations = Any

from .wiretap_channel import build_channels, mutual_information, objective_array, power_used, secrecy_objective
from .wiretap_common import (
    InputStrategy,
    LinkGeometry,
    Mode,
    PhysicalParams,
    RateValue,
    Regime,
    physical_params_from_user_units,
    validate_mode,
    validate_nonnegative,
    validate_probability,
)

logger = logging.getLogger(__name__)

# Grid seeding
NA_GRID_MIN = 1e-3
NA_GRID_MAX = 1e12
NA_POINTS_PER_DECADE = 20
NB_GRID_CEILING = 1e3  # the n_a grid always reaches this many photons at Bob
Q_GRID = np.unique(np.concatenate([np.logspace(-9.0, -1.0, 81), np.linspace(0.1, 1.0, 91)]))
AUX_A_GRID = (0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.3)
AUX_B_GRID = (1.0, 0.99, 0.9, 0.7)
TOP_K = 5

# Refinement
SIMPLEX_STEP = 0.5
XATOL = 1e-6
FATOL = 1e-8  # on the objective scaled by its seed value
MAX_ITER_PER_DIM = 1000
LOGIT_CLIP = 30.0

# Reporting
FEASIBILITY_RTOL = 1e-9
BOUNDARY_RTOL = 1e-6
TIE_RTOL = 1e-12
PLATEAU_RTOL = 1e-4
NOISE_FLOOR_NATS = 1e-12  # at or below this the optimum is a dark-count artifact


@dataclass(frozen=True)
class OptResult:
    """Optimum of one of the rate problems and the strategy attaining it."""

    mode: Mode
    objective: RateValue
    raw_objective: RateValue
    strategy: InputStrategy
    n_b_star: float
    n_e_star: float
    power_used: float
    boundary_active: bool
    regime: Regime

    def as_dict(self) -> Dict:
        return {
            "mode": self.mode,
            "rate_bps": self.objective.bits_per_second,
            "rate_bits_per_use": self.objective.bits_per_use,
            "rate_nats_per_use": self.objective.nats_per_use,
            "raw_rate_bits_per_use": self.raw_objective.bits_per_use,
            "q_star": self.strategy.q_on,
            "n_a_star": self.strategy.n_a,
            "n_b_star": self.n_b_star,
            "n_e_star": self.n_e_star,
            "aux_a": self.strategy.flip_0_to_1 if self.strategy.aux is not None else None,
            "flip_1_to_0": self.strategy.flip_1_to_0 if self.strategy.aux is not None else None,
            "power_used_w": self.power_used,
            "boundary_active": self.boundary_active,
            "regime": self.regime,
        }


@dataclass(frozen=True)
class _Candidate:
    value: float
    q: float
    n_a: float
    a: float = 0.0
    b: float = 1.0


@dataclass(frozen=True)
class _Problem:
    params: PhysicalParams
    geom: LinkGeometry
    mode: Mode
    q_fixed: float | None
    n_a_fixed: float | None

    @property
    def include_eve(self) -> bool:
        return self.mode != "capacity"

    @property
    def uses_aux(self) -> bool:
        return self.mode == "secrecy-aux"

    @property
    def free(self) -> tuple[str, ...]:
        names = []
        if self.q_fixed is None:
            names.append("q")
        if self.n_a_fixed is None:
            names.append("n_a")
        if self.uses_aux:
            names.extend(("a", "b"))
        return tuple(names)


def photon_grid(geom: LinkGeometry) -> np.ndarray:
    """Log grid of photons per on-pulse, wide enough to put NB_GRID_CEILING photons at Bob."""
    upper = max(NA_GRID_MAX, NB_GRID_CEILING / geom.eta_bob)
    decades = math.log10(upper) - math.log10(NA_GRID_MIN)
    return np.logspace(math.log10(NA_GRID_MIN), math.log10(upper), int(round(decades * NA_POINTS_PER_DECADE)) + 1)


def project_to_budget(params: PhysicalParams, q: np.ndarray, n_a: np.ndarray, a: Any = 0.0, b: Any = 1.0) -> np.ndarray:
    """Clip n_a onto the power boundary n_a = P*Delta/(q_x*h*f0) wherever the budget is exceeded."""
    q_x = (1.0 - np.asarray(q, dtype=float)) * a + np.asarray(q, dtype=float) * b
    with np.errstate(divide="ignore"):
        limit = np.where(q_x > 0, params.max_photons_per_slot / np.where(q_x > 0, q_x, 1.0), np.inf)
    return np.minimum(n_a, limit)


def _evaluate(problem: _Problem, q: Any, n_a: Any, a: Any = 0.0, b: Any = 1.0) -> tuple[np.ndarray, np.ndarray]:
    n_eff = project_to_budget(problem.params, q, n_a, a, b)
    values = objective_array(problem.params, problem.geom, q, n_eff, a, b, include_eve=problem.include_eve)
    return np.where(np.isnan(values), -np.inf, values), n_eff


def _grid_seeds(problem: _Problem) -> list[_Candidate]:
    qs = np.array([problem.q_fixed]) if problem.q_fixed is not None else Q_GRID
    nas = np.array([problem.n_a_fixed]) if problem.n_a_fixed is not None else photon_grid(problem.geom)
    pairs = [(a, b) for a, b in itertools.product(AUX_A_GRID, AUX_B_GRID) if a < b] if problem.uses_aux else [(0.0, 1.0)]
    q_mesh, na_mesh = np.meshgrid(qs, nas, indexing="ij")

    values, n_effs, q_all, a_all, b_all = [], [], [], [], []
    for a, b in pairs:
        vals, n_eff = _evaluate(problem, q_mesh, na_mesh, a, b)
        vals, n_eff = vals.ravel(), np.broadcast_to(n_eff, q_mesh.shape).ravel()
        keep = np.lexsort((n_eff, -vals))[:TOP_K]
        values.append(vals[keep])
        n_effs.append(n_eff[keep])
        q_all.append(q_mesh.ravel()[keep])
        a_all.append(np.full(keep.size, a))
        b_all.append(np.full(keep.size, b))
    values, n_effs, q_all = np.concatenate(values), np.concatenate(n_effs), np.concatenate(q_all)
    a_all, b_all = np.concatenate(a_all), np.concatenate(b_all)
    order = np.lexsort((n_effs, -values))[:TOP_K]
    logger.debug("grid seeding over %d points, best %.6e nats", q_mesh.size * len(pairs), values[order[0]])
    return [_Candidate(float(values[i]), float(q_all[i]), float(n_effs[i]), float(a_all[i]), float(b_all[i])) for i in order]


def _encode(problem: _Problem, cand: _Candidate) -> np.ndarray:
    coords = {
        "q": logit(cand.q),
        "n_a": math.log(cand.n_a) if cand.n_a > 0 else math.log(NA_GRID_MIN),
        "a": logit(cand.a),
        "b": logit(cand.b),
    }
    return np.array([np.clip(coords[name], -LOGIT_CLIP, LOGIT_CLIP) if name != "n_a" else coords[name] for name in problem.free])


def _decode(problem: _Problem, x: np.ndarray, base: _Candidate) -> tuple[float, float, float, float]:
    values = {"q": base.q, "n_a": base.n_a, "a": base.a, "b": base.b}
    if problem.q_fixed is not None:
        values["q"] = problem.q_fixed
    if problem.n_a_fixed is not None:
        values["n_a"] = problem.n_a_fixed
    for name, coord in zip(problem.free, x):
        if name == "n_a":
            values[name] = math.exp(min(coord, 700.0))
        else:
            values[name] = float(expit(np.clip(coord, -LOGIT_CLIP, LOGIT_CLIP)))
    return values["q"], values["n_a"], values["a"], values["b"]


def _candidate(problem: _Problem, q: float, n_a: float, a: float, b: float) -> _Candidate:
    value, n_eff = _evaluate(problem, q, n_a, a, b)
    return _Candidate(float(value), q, float(n_eff), a, b)


def _refine(problem: _Problem, seed: _Candidate) -> _Candidate:
    if not problem.free:
        return seed
    x0 = _encode(problem, seed)
    scale = max(abs(seed.value), 1e-30)

    def negative_scaled(x: np.ndarray) -> float:
        value, _ = _evaluate(problem, *_decode(problem, x, seed))
        return -float(value) / scale

    simplex = np.vstack([x0] + [x0 + SIMPLEX_STEP * row for row in np.eye(x0.size)])
    res = minimize(
        negative_scaled,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": XATOL,
            "fatol": FATOL,
            "maxiter": MAX_ITER_PER_DIM * x0.size,
            "maxfev": 2 * MAX_ITER_PER_DIM * x0.size,
            "adaptive": x0.size > 2,
        },
    )
    refined = _candidate(problem, *_decode(problem, res.x, seed))
    logger.debug("refined seed %.6e -> %.6e nats in %d evaluations", seed.value, refined.value, res.nfev)
    return refined


def _snap_aux(problem: _Problem, cand: _Candidate) -> _Candidate:
    """Prefer exact a = 0 and/or b = 1 when the objective does not get worse."""
    if not problem.uses_aux:
        return cand
    variants = [
        _candidate(problem, cand.q, cand.n_a, 0.0, 1.0),
        _candidate(problem, cand.q, cand.n_a, 0.0, cand.b),
        _candidate(problem, cand.q, cand.n_a, cand.a, 1.0),
        cand,
    ]
    best = max(v.value for v in variants)
    tol = TIE_RTOL * abs(best)
    return next(v for v in variants if v.value >= best - tol)


def _select(candidates: Sequence[_Candidate]) -> _Candidate:
    best = max(c.value for c in candidates)
    tol = TIE_RTOL * abs(best)
    tied = [c for c in candidates if c.value >= best - tol]
    return min(tied, key=lambda c: c.n_a)


def _seed_candidates(problem: _Problem, seeds: Sequence[InputStrategy]) -> list[_Candidate]:
    out = []
    for s in seeds:
        a, b = s.aux if (s.aux is not None and problem.uses_aux) else (0.0, 1.0)
        q = problem.q_fixed if problem.q_fixed is not None else s.q_on
        n_a = problem.n_a_fixed if problem.n_a_fixed is not None else s.n_a
        out.append(_candidate(problem, q, n_a, a, b))
    return out


def _classify(problem: _Problem, best: _Candidate, boundary_active: bool) -> Regime:
    if best.value <= NOISE_FLOOR_NATS:
        return "noise-limited"
    if not boundary_active:
        return "loss-independent"
    relaxed = float(objective_array(problem.params, problem.geom, best.q, 2.0 * best.n_a, best.a, best.b, include_eve=problem.include_eve))
    gain = relaxed - best.value
    return "loss-independent" if gain <= PLATEAU_RTOL * max(abs(best.value), 1e-300) else "noise-limited"


def _solve(problem: _Problem, seeds: Sequence[InputStrategy] = ()) -> OptResult:
    params, geom = problem.params, problem.geom
    grid = _grid_seeds(problem)
    warm = _seed_candidates(problem, seeds)
    refined = [_snap_aux(problem, _refine(problem, c)) for c in grid + warm]
    best = _select(grid + warm + refined)

    aux = (best.a, best.b) if problem.uses_aux else None
    strategy = InputStrategy(q_on=best.q, n_a=best.n_a, aux=aux)
    if problem.mode == "capacity":
        w_b, _ = build_channels(params, geom, best.n_a)
        raw = mutual_information(w_b, best.q, params.slot_seconds)
    else:
        raw = secrecy_objective(params, geom, strategy)
    used = power_used(strategy.input_marginal, best.n_a, params)
    if used > params.power_watts * (1.0 + FEASIBILITY_RTOL):
        raise RuntimeError(f"Optimizer returned an infeasible point using {used} W of {params.power_watts} W.")
    boundary_active = abs(used - params.power_watts) / params.power_watts < BOUNDARY_RTOL
    result = OptResult(
        mode=problem.mode,
        objective=RateValue(max(raw.nats_per_use, 0.0), params.slot_seconds),
        raw_objective=raw,
        strategy=strategy,
        n_b_star=geom.eta_bob * best.n_a,
        n_e_star=geom.eta_eve * best.n_a,
        power_used=used,
        boundary_active=boundary_active,
        regime=_classify(problem, best, boundary_active),
    )
    logger.debug(
        "%s at %.2f dB: %.6e bit/s (q*=%.6g, n_a*=%.6g, boundary=%s)",
        problem.mode, geom.attenuation_db, result.objective.bits_per_second, best.q, best.n_a, boundary_active,
    )
    return result


def _make_problem(
    params: PhysicalParams, geom: LinkGeometry, mode: Mode, q_fixed: float | None, n_a_fixed: float | None
) -> _Problem:
    validate_mode(mode)
    if q_fixed is not None:
        validate_probability("Fixed on-probability", "q_fixed", q_fixed)
    if n_a_fixed is not None:
        validate_nonnegative("Fixed photons per on-pulse", "n_a_fixed", n_a_fixed)
    return _Problem(params=params, geom=geom, mode=mode, q_fixed=q_fixed, n_a_fixed=n_a_fixed)


def maximize_capacity(
    params: PhysicalParams,
    geom: LinkGeometry,
    *,
    q_fixed: float | None = None,
    n_a_fixed: float | None = None,
    seeds: Sequence[InputStrategy] = (),
) -> OptResult:
    """
    Channel capacity C = max f_B(q, n_A) under the average power constraint.
    f_B is nondecreasing in n_A at fixed q, so unless n_a_fixed is given the search runs
    along the power boundary and boundary_active is always true.
    """
    fixed = math.inf if n_a_fixed is None else n_a_fixed
    return _solve(_make_problem(params, geom, "capacity", q_fixed, fixed), seeds)


def maximize_secrecy_rate(
    params: PhysicalParams,
    geom: LinkGeometry,
    *,
    q_fixed: float | None = None,
    n_a_fixed: float | None = None,
    seeds: Sequence[InputStrategy] = (),
) -> OptResult:
    """Secrecy rate R_S = max f_BE(q, n_A); a negative maximum is reported as 0 with its argmax kept."""
    return _solve(_make_problem(params, geom, "secrecy", q_fixed, n_a_fixed), seeds)


def maximize_secrecy_capacity(
    params: PhysicalParams,
    geom: LinkGeometry,
    *,
    q_fixed: float | None = None,
    n_a_fixed: float | None = None,
    seeds: Sequence[InputStrategy] = (),
) -> OptResult:
    """Secrecy capacity C_S = max over (q, n_A, a, b) of f+_BE, with the budget applied to P(X = 1)."""
    plain = maximize_secrecy_rate(params, geom, q_fixed=q_fixed, n_a_fixed=n_a_fixed, seeds=seeds)
    identity = InputStrategy(q_on=plain.strategy.q_on, n_a=plain.strategy.n_a, aux=(0.0, 1.0))
    return _solve(_make_problem(params, geom, "secrecy-aux", q_fixed, n_a_fixed), [identity, *seeds])


def maximize(params: PhysicalParams, geom: LinkGeometry, mode: Mode, **kwargs) -> OptResult:
    """Dispatch to the maximizer for mode."""
    validate_mode(mode)
    if mode == "capacity":
        return maximize_capacity(params, geom, **kwargs)
    if mode == "secrecy":
        return maximize_secrecy_rate(params, geom, **kwargs)
    return maximize_secrecy_capacity(params, geom, **kwargs)


def _register_optimum_tool(mcp, mode: Mode, name: str, title: str, description: str):
    @mcp.tool(
        name=name,
        description=description,
        annotations=cast(
            ToolAnnotations,
            {
                "title": title,
                "summary": f"Maximize the {mode} objective over Alice's OOK strategy",
                "description": description,
                "readOnlyHint": True,
                "idempotentHint": True,
            },
        ),
    )
    def optimum_tool(
        attenuation_db: Annotated[float, Field(description="Attenuation alpha towards Bob in dB", ge=0.0, examples=[70.0])],
        eta_zy: Annotated[float, Field(description="Relative transmittance eta_z/eta_y", ge=0.0, examples=[0.9])] = 0.9,
        power_mw: Annotated[float, Field(description="Maximum average transmit power in mW", gt=0.0, examples=[10.0])] = 10.0,
        dcr_bob_cps: Annotated[float, Field(description="Bob's dark-count rate in counts/s", ge=0.0, examples=[1e4])] = 1e4,
        dcr_eve_cps: Annotated[float, Field(description="Eve's dark-count rate in counts/s", ge=0.0, examples=[1.0])] = 1.0,
        slot_ns: Annotated[float, Field(description="Detector slot width in ns", gt=0.0, examples=[1.0])] = 1.0,
        f0_thz: Annotated[float, Field(description="Optical center frequency in THz", gt=0.0, examples=[200.0])] = 200.0,
    ) -> Dict:
        try:
            params = physical_params_from_user_units(power_mw, dcr_bob_cps, dcr_eve_cps, slot_ns, f0_thz)
            geom = LinkGeometry(attenuation_db=attenuation_db, relative_transmittance=eta_zy)
            result = maximize(params, geom, mode)
            return {
                "optimum": result.as_dict(),
                "input_parameters": {"physical": params.as_dict(), "geometry": geom.as_dict()},
                "model": "ook-wiretap",
                "status": "success",
            }
        except OverflowError as e:
            raise OverflowError(f"Numerical overflow in {mode} optimization. Try using more moderate input values: {str(e)}")
        except ValueError as e:
            raise e
        except RuntimeError as e:
            raise e
        except Exception as e:
            raise RuntimeError(f"Error in {mode} optimization: {str(e)}")

    return optimum_tool


def register_capacity_tool(mcp):
    """Register the power-constrained channel capacity tool with the MCP server."""
    return _register_optimum_tool(
        mcp,
        "capacity",
        "wiretap_capacity",
        "OOK Channel Capacity",
        "Returns Bob's power-constrained OOK channel capacity, the optimal on-probability and photon number. "
        "USE THIS FUNCTION when asked for the capacity of a photon-counting free-space optical link.",
    )


def register_secrecy_rate_tool(mcp):
    """Register the secrecy rate tool with the MCP server."""
    return _register_optimum_tool(
        mcp,
        "secrecy",
        "wiretap_secrecy_rate",
        "OOK Wiretap Secrecy Rate",
        "Returns the secrecy rate max I(X;Y) - I(X;Z) under the power constraint and the optimal strategy. "
        "USE THIS FUNCTION when asked how fast Alice can send secret bits to Bob without auxiliary randomization.",
    )


def register_secrecy_capacity_tool(mcp):
    """Register the secrecy capacity (with auxiliary randomization) tool with the MCP server."""
    return _register_optimum_tool(
        mcp,
        "secrecy-aux",
        "wiretap_secrecy_capacity",
        "OOK Wiretap Secrecy Capacity",
        "Returns the secrecy capacity optimized also over the randomizing channel P(X|V), with the optimal flip "
        "probabilities. USE THIS FUNCTION when asked for the best secret rate allowing dummy pulses.",
    )
