# This file contains the command-line front end: argument parsing into a validated RunConfig,
# one subcommand per calculation, and the JSON / CSV / SVG outputs.

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .wiretap_channel import channel_report
from .wiretap_codelength import CODELENGTH_CSV_HEADER, length_for_target, length_table, required_length
from .wiretap_common import (
    InfeasibleResultError,
    InputStrategy,
    LinkGeometry,
    Mode,
    PhysicalParams,
    RateValue,
    physical_params_from_user_units,
)
from .wiretap_exponents import RatePair, balance_randomness_rate, coding_rate, exponent_report, resolve_operating_point
from .wiretap_landscape import AUX_GAIN_CSV_HEADER, LANDSCAPE_CSV_HEADER, aux_gain_profile, objective_landscape
from .wiretap_montecarlo import simulation_report
from .wiretap_optimize import maximize
from .wiretap_plotting import plot_curves
from .wiretap_sweep import SWEEP_AUX_CSV_HEADER, SWEEP_CSV_HEADER, SweepRow, find_zero_threshold, sweep_attenuation

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "channel",
    "capacity",
    "secrecy-rate",
    "secrecy-capacity",
    "threshold",
    "sweep",
    "exponents",
    "balance",
    "codelength",
    "simulate",
    "landscape",
    "aux-gain",
)
LANDSCAPE_QS = np.linspace(0.01, 1.0, 100)
LANDSCAPE_NBS = np.logspace(-2.0, 2.0, 81)
AUX_GAIN_QS = np.linspace(0.01, 0.99, 99)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2


class RunConfig(BaseModel):
    """Fully resolved inputs of one invocation, in user units."""

    model_config = ConfigDict(extra="forbid")

    command: str = Field(description="Subcommand name")
    power_mw: float = Field(default=10.0, gt=0.0, description="Maximum average transmit power in mW", examples=[10.0])
    dcr_bob_cps: float = Field(default=1e4, ge=0.0, description="Bob's dark-count rate in counts/s", examples=[1e4])
    dcr_eve_cps: float = Field(default=1.0, ge=0.0, description="Eve's dark-count rate in counts/s", examples=[1.0])
    slot_ns: float = Field(default=1.0, gt=0.0, description="Detector slot width in ns", examples=[1.0])
    f0_thz: float = Field(default=200.0, gt=0.0, description="Optical center frequency in THz", examples=[200.0])
    alphas_db: list[float] = Field(default_factory=lambda: [70.0], min_length=1, description="Attenuation values in dB")
    eta_zy: float = Field(default=0.9, ge=0.0, description="Relative transmittance eta_z/eta_y", examples=[0.9])
    mode: Literal["capacity", "secrecy", "secrecy-aux"] | None = Field(default=None, description="Objective for sweeps")
    aux: bool = Field(default=False, description="Optimize over the randomizing channel P(X|V)")
    aux_a: float | None = Field(default=None, ge=0.0, le=1.0, description="P(X=1|V=0) of an explicit randomizing channel")
    aux_b: float | None = Field(default=None, ge=0.0, le=1.0, description="P(X=1|V=1) of an explicit randomizing channel")
    q: float | None = Field(default=None, ge=0.0, le=1.0, description="On-probability of an explicit operating point")
    n_a: float | None = Field(default=None, ge=0.0, description="Photons per on-pulse of an explicit operating point")
    n_b: float = Field(default=1.0, gt=0.0, description="Received photons per on-pulse for aux-gain profiles")
    rb_bps: float | None = Field(default=None, ge=0.0, description="Coding rate R_B in bit/s")
    rb_frac: float = Field(default=0.5, ge=0.0, le=1.0, description="Coding rate as a fraction of the secrecy rate")
    re_bps: float | None = Field(default=None, ge=0.0, description="Randomness rate R_E in bit/s; balanced when omitted")
    eps: float = Field(default=1e-9, gt=0.0, description="Target decoding error probability")
    delta: float = Field(default=1e-9, gt=0.0, description="Target leaked information")
    floor_bps: float = Field(default=1.0, gt=0.0, description="Secrecy rate floor for thresholds in bit/s")
    seed: int = Field(default=1, ge=0, description="Monte Carlo seed")
    slots: int = Field(default=1_000_000, ge=1, description="Monte Carlo slots")
    workers: int = Field(default=1, ge=1, description="Worker threads for sweeps and simulations")
    out: str | None = Field(default=None, description="CSV output path")
    svg: str | None = Field(default=None, description="SVG plot output path")
    json_path: str | None = Field(default=None, description="JSON output path; stdout when omitted")
    verbose: bool = False

    def physical(self) -> PhysicalParams:
        return physical_params_from_user_units(self.power_mw, self.dcr_bob_cps, self.dcr_eve_cps, self.slot_ns, self.f0_thz)

    @property
    def alpha_db(self) -> float:
        if len(self.alphas_db) != 1:
            raise ValueError(f"Subcommand {self.command} takes a single attenuation. Got: {len(self.alphas_db)} values")
        return self.alphas_db[0]

    def geometry(self) -> LinkGeometry:
        return LinkGeometry(attenuation_db=self.alpha_db, relative_transmittance=self.eta_zy)

    @property
    def aux_pair(self) -> tuple[float, float] | None:
        if self.aux_a is None and self.aux_b is None:
            return None
        return (0.0 if self.aux_a is None else self.aux_a, 1.0 if self.aux_b is None else self.aux_b)

    @property
    def secrecy_mode(self) -> Mode:
        if self.mode == "capacity":
            raise ValueError(f"Subcommand {self.command} needs a secrecy objective (secrecy or secrecy-aux). Got: capacity")
        return "secrecy-aux" if self.aux or self.mode == "secrecy-aux" else "secrecy"


@dataclass
class PlotSpec:
    series: Dict[str, tuple[Sequence[float], Sequence[float]]]
    xlabel: str
    ylabel: str
    logx: bool = False
    logy: bool = False
    title: str = ""


@dataclass
class CommandOutput:
    result: Dict
    csv_header: Sequence[str] = ()
    csv_rows: list[list] = field(default_factory=list)
    plot: PlotSpec | None = None


def parse_range(text: str) -> list[float]:
    """'70' -> [70.0]; 'start:stop:step' -> start, start+step, ... up to and including stop."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or start:stop:step, got {text!r}") from None
    if len(values) == 1:
        return values
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    start, stop, step = values
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"range needs step > 0 and stop >= start, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return f"{float(value):.16e}"


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _optimum_rows(result, alpha: float) -> tuple[Sequence[str], list[list]]:
    row = SweepRow.from_result(result, alpha)
    return (SWEEP_AUX_CSV_HEADER if row.aux_a is not None else SWEEP_CSV_HEADER), [row.csv_cells()]


def _cmd_channel(cfg: RunConfig) -> CommandOutput:
    params, geom = cfg.physical(), cfg.geometry()
    q, n_a, _ = resolve_operating_point(params, geom, cfg.q, cfg.n_a)
    strategy = InputStrategy(q_on=q, n_a=n_a, aux=cfg.aux_pair)
    return CommandOutput({"strategy": strategy.as_dict(), "channel": channel_report(params, geom, strategy)})


def _optimum_command(mode: Mode) -> Callable[[RunConfig], CommandOutput]:
    def run(cfg: RunConfig) -> CommandOutput:
        params, geom = cfg.physical(), cfg.geometry()
        result = maximize(params, geom, mode)
        header, rows = _optimum_rows(result, cfg.alpha_db)
        return CommandOutput(result.as_dict(), header, rows)

    return run


def _cmd_threshold(cfg: RunConfig) -> CommandOutput:
    mode = cfg.secrecy_mode
    threshold = find_zero_threshold(cfg.physical(), cfg.eta_zy, mode, cfg.floor_bps)
    return CommandOutput({"threshold_db": threshold, "mode": mode, "eta_zy": cfg.eta_zy, "floor_bps": cfg.floor_bps})


def _cmd_sweep(cfg: RunConfig) -> CommandOutput:
    mode: Mode = cfg.mode or "secrecy"
    if cfg.aux and mode == "secrecy":
        mode = "secrecy-aux"
    rows = sweep_attenuation(cfg.physical(), cfg.alphas_db, mode, cfg.eta_zy, warm_start=cfg.workers == 1, workers=cfg.workers)
    header = SWEEP_AUX_CSV_HEADER if mode == "secrecy-aux" else SWEEP_CSV_HEADER
    plot = PlotSpec(
        {f"{mode}, eta_zy={cfg.eta_zy:g}": ([r.attenuation_db for r in rows], [r.objective.bits_per_second for r in rows])},
        xlabel="Attenuation alpha [dB]",
        ylabel="Rate [bit/s]",
        logy=True,
    )
    return CommandOutput({"mode": mode, "rows": [r.as_dict() for r in rows]}, header, [r.csv_cells() for r in rows], plot)


def _rates(cfg: RunConfig, params: PhysicalParams, geom: LinkGeometry) -> tuple[float, float, RateValue, RateValue, bool]:
    q, n_a, secrecy_rate = resolve_operating_point(params, geom, cfg.q, cfg.n_a)
    r_b = coding_rate(secrecy_rate, cfg.rb_bps, cfg.rb_frac, params.slot_seconds)
    if cfg.re_bps is not None:
        return q, n_a, r_b, RateValue.from_bits_per_second(cfg.re_bps, params.slot_seconds), False
    return q, n_a, r_b, balance_randomness_rate(params, geom, q, n_a, r_b).r_e, True


def _cmd_exponents(cfg: RunConfig) -> CommandOutput:
    params, geom = cfg.physical(), cfg.geometry()
    q, n_a, r_b, r_e, balanced = _rates(cfg, params, geom)
    report = exponent_report(params, geom, q, n_a, RatePair(r_b, r_e))
    return CommandOutput(report.as_dict() | {"balanced": balanced})


def _cmd_balance(cfg: RunConfig) -> CommandOutput:
    params, geom = cfg.physical(), cfg.geometry()
    q, n_a, secrecy_rate = resolve_operating_point(params, geom, cfg.q, cfg.n_a)
    r_b = coding_rate(secrecy_rate, cfg.rb_bps, cfg.rb_frac, params.slot_seconds)
    balanced = balance_randomness_rate(params, geom, q, n_a, r_b)
    return CommandOutput(balanced.as_dict() | {"r_b": r_b.as_dict(), "operating_point": {"q": q, "n_a": n_a}})


def _cmd_codelength(cfg: RunConfig) -> CommandOutput:
    params, geom = cfg.physical(), cfg.geometry()
    q, n_a, r_b, r_e, balanced = _rates(cfg, params, geom)
    report = exponent_report(params, geom, q, n_a, RatePair(r_b, r_e))
    n = required_length(report.f_c, report.h_c, cfg.eps, cfg.delta)
    table = length_table(report.f_c, report.h_c)
    result = {
        "n": n,
        "duration_seconds": n * params.slot_seconds,
        "n_eps": length_for_target(report.f_c, cfg.eps, "eps"),
        "n_delta": length_for_target(report.h_c, cfg.delta, "delta"),
        "balanced": balanced,
        "exponents": report.as_dict(),
    }
    plot = PlotSpec(
        {
            "decoding error bound": ([b.n for b in table], [b.eps_bound for b in table]),
            "leaked information bound": ([b.n for b in table], [b.delta_bound for b in table]),
        },
        xlabel="Code length n",
        ylabel="Upper bound",
        logx=True,
        logy=True,
    )
    return CommandOutput(result, CODELENGTH_CSV_HEADER, [b.csv_cells() for b in table], plot)


def _cmd_simulate(cfg: RunConfig) -> CommandOutput:
    params, geom = cfg.physical(), cfg.geometry()
    q, n_a, _ = resolve_operating_point(params, geom, cfg.q, cfg.n_a)
    strategy = InputStrategy(q_on=q, n_a=n_a, aux=cfg.aux_pair)
    report = simulation_report(params, geom, strategy, cfg.slots, cfg.seed, workers=cfg.workers)
    return CommandOutput({"strategy": strategy.as_dict(), "simulation": report})


def _cmd_landscape(cfg: RunConfig) -> CommandOutput:
    mode = "capacity" if cfg.mode == "capacity" else "secrecy"
    landscape = objective_landscape(cfg.physical(), cfg.geometry(), LANDSCAPE_QS, LANDSCAPE_NBS, mode)
    best = np.where(landscape.feasible, landscape.values, -np.inf).max(axis=0) / math.log(2.0)
    plot = PlotSpec(
        {"best over feasible q": (landscape.n_bs, best), "best over all q": (landscape.n_bs, landscape.values.max(axis=0) / math.log(2.0))},
        xlabel="Received photons per on-pulse n_B",
        ylabel="Objective [bit/use]",
        logx=True,
    )
    k = np.unravel_index(int(np.argmax(np.where(landscape.feasible, landscape.values, -np.inf))), landscape.values.shape)
    result = {
        "mode": mode,
        "best_feasible": {
            "q": float(landscape.qs[k[0]]),
            "n_b": float(landscape.n_bs[k[1]]),
            "objective_bits": float(landscape.values[k]) / math.log(2.0),
        },
        "grid": {"q_points": int(landscape.qs.size), "n_b_points": int(landscape.n_bs.size)},
    }
    return CommandOutput(result, LANDSCAPE_CSV_HEADER, landscape.rows(), plot)


def _cmd_aux_gain(cfg: RunConfig) -> CommandOutput:
    points = aux_gain_profile(cfg.physical(), cfg.eta_zy, cfg.n_b, AUX_GAIN_QS)
    qs = [p.q for p in points]
    plot = PlotSpec(
        {"without P(X|V)": (qs, [p.f_be.bits_per_use for p in points]), "with P(X|V)": (qs, [p.f_be_aux.bits_per_use for p in points])},
        xlabel="q",
        ylabel="Secrecy objective [bit/use]",
    )
    return CommandOutput({"n_b": cfg.n_b, "points": [p.as_dict() for p in points]}, AUX_GAIN_CSV_HEADER, [p.csv_cells() for p in points], plot)


COMMANDS: Dict[str, Callable[[RunConfig], CommandOutput]] = {
    "channel": _cmd_channel,
    "capacity": _optimum_command("capacity"),
    "secrecy-rate": _optimum_command("secrecy"),
    "secrecy-capacity": _optimum_command("secrecy-aux"),
    "threshold": _cmd_threshold,
    "sweep": _cmd_sweep,
    "exponents": _cmd_exponents,
    "balance": _cmd_balance,
    "codelength": _cmd_codelength,
    "simulate": _cmd_simulate,
    "landscape": _cmd_landscape,
    "aux-gain": _cmd_aux_gain,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    link = common.add_argument_group("link")
    link.add_argument("--power-mw", type=float, help="maximum average transmit power [mW] (10)")
    link.add_argument("--dcr-bob-cps", type=float, help="Bob's dark-count rate [counts/s] (1e4)")
    link.add_argument("--dcr-eve-cps", type=float, help="Eve's dark-count rate [counts/s] (1)")
    link.add_argument("--slot-ns", type=float, help="slot width [ns] (1)")
    link.add_argument("--f0-thz", type=float, help="optical frequency [THz] (200)")
    link.add_argument("--alpha-db", dest="alphas_db", type=parse_range, help="attenuation [dB] or start:stop:step (70)")
    link.add_argument("--eta-zy", type=float, help="relative transmittance eta_z/eta_y (0.9)")

    strategy = common.add_argument_group("strategy")
    strategy.add_argument("--mode", choices=("capacity", "secrecy", "secrecy-aux"), help="objective for sweep and landscape")
    strategy.add_argument("--aux", action="store_true", default=None, help="optimize over the randomizing channel P(X|V)")
    strategy.add_argument("--aux-a", type=float, help="explicit P(X=1|V=0)")
    strategy.add_argument("--aux-b", type=float, help="explicit P(X=1|V=1)")
    strategy.add_argument("--q", type=float, help="explicit on-probability")
    strategy.add_argument("--n-a", type=float, help="explicit photons per on-pulse")
    strategy.add_argument("--n-b", type=float, help="received photons per on-pulse for aux-gain (1)")

    coding = common.add_argument_group("coding")
    rb = coding.add_mutually_exclusive_group()
    rb.add_argument("--rb-bps", type=float, help="coding rate R_B [bit/s]")
    rb.add_argument("--rb-frac", type=float, help="coding rate as a fraction of the secrecy rate (0.5)")
    coding.add_argument("--re-bps", type=float, help="randomness rate R_E [bit/s]; balanced when omitted")
    coding.add_argument("--eps", type=float, help="decoding error target (1e-9)")
    coding.add_argument("--delta", type=float, help="leaked information target (1e-9)")
    coding.add_argument("--floor-bps", type=float, help="secrecy rate floor for threshold [bit/s] (1)")

    run = common.add_argument_group("run")
    run.add_argument("--seed", type=int, help="Monte Carlo seed (1)")
    run.add_argument("--slots", type=int, help="Monte Carlo slots (1e6)")
    run.add_argument("--workers", type=int, help="worker threads (1)")
    run.add_argument("--out", help="CSV output path")
    run.add_argument("--svg", help="SVG plot output path")
    run.add_argument("--json", dest="json_path", help="JSON output path (stdout when omitted)")
    run.add_argument("--verbose", action="store_true", default=None, help="log at DEBUG level")

    parser = argparse.ArgumentParser(prog="ook-wiretap", description="OOK free-space optical wiretap channel calculations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} calculation")
    return parser


def _write_csv(path: str, header: Sequence[str], rows: list[list]) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows([_format_cell(v) for v in row] for row in rows)
    logger.info("wrote %d rows to %s", len(rows), target)


def _emit(document: Dict, cfg: RunConfig) -> None:
    text = json.dumps(document, indent=2, default=_json_default)
    if cfg.json_path is None:
        sys.stdout.write(text + "\n")
        return
    target = Path(cfg.json_path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text + "\n")
    logger.info("wrote %s", target)


def run_subcommand(argv: Sequence[str]) -> int:
    """Run one subcommand; returns 0 on success, 1 for infeasible results and 2 for argument errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = RunConfig(**{k: v for k, v in vars(args).items() if v is not None})
    except ValidationError as e:
        sys.stderr.write(f"{parser.prog} {args.command}: error: invalid configuration\n{e}\n")
        return EXIT_USAGE

    provenance = {"version": __version__, "seed": cfg.seed}
    config = cfg.model_dump()
    logger.info("running %s", cfg.command)
    try:
        output = COMMANDS[cfg.command](cfg)
    except InfeasibleResultError as e:
        logger.warning("%s: %s", cfg.command, e)
        _emit({"config": config, "error": {"type": type(e).__name__, "message": str(e)}, "provenance": provenance}, cfg)
        return EXIT_INFEASIBLE
    except ValueError as e:
        sys.stderr.write(f"{parser.prog} {cfg.command}: error: {e}\n")
        return EXIT_USAGE

    _emit({"config": config, "result": output.result, "provenance": provenance}, cfg)
    if cfg.out is not None:
        if output.csv_header:
            _write_csv(cfg.out, output.csv_header, output.csv_rows)
        else:
            logger.warning("%s produces no table; --out ignored", cfg.command)
    if cfg.svg is not None:
        if output.plot is not None:
            plot = output.plot
            plot_curves(cfg.svg, plot.series, xlabel=plot.xlabel, ylabel=plot.ylabel, title=plot.title, logx=plot.logx, logy=plot.logy)
        else:
            logger.warning("%s produces no curve; --svg ignored", cfg.command)
    return EXIT_OK


def main() -> None:
    sys.exit(run_subcommand(sys.argv[1:]))
