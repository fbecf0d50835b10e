"""Command-line front end: ``qpufsim <command> [flags]``.

Each command has a parameter schema.  Values come from the schema defaults,
then an optional flat JSON config file, then explicit flags; later sources
win and a flag that overrides a different file value adds a warning to the
report.  Reports are JSON (canonical), CSV or a human-readable table.

Exit codes: 0 ok, 1 other library error, 2 configuration, 3 query budget,
4 numerical failure, 5 refusal.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from .eqtest import TestKind, TestPolicy, compound_accept_prob, sample_tests, swap_accept_prob, swap_circuit_oracle
from .exceptions import ConfigError, QpufSimError
from .games import (
    ChallengeSource,
    DistinguisherKind,
    GameConfig,
    Stage,
    estimate_distinguishing,
    estimate_win_rate,
)
from .adversaries import AdversaryKind
from .matrix_io import read_matrix, write_matrix
from .montecarlo import binomial_estimate
from .protocols import (
    HrProtocolConfig,
    HrProver,
    LrProtocolConfig,
    LrProver,
    estimate_protocol_rates,
    hr_random_adversary_oracle,
    hr_soundness_envelope,
    lr_accept_oracle,
    run_hr_protocol,
    run_lr_protocol,
)
from .qmath import basis_state
from .qpuf import Family, QpufParams, qgen, uniqueness_test
from .sampling import RngStream, haar_state
from .spectral import SpectralFamily, spectral_report

log = logging.getLogger("qpufsim")

# stream id for scenario-level setup draws, disjoint from per-trial streams
SETUP_STREAM = 2 ** 63


# ---------------------------------------------------------------------------
# parameter schema
# ---------------------------------------------------------------------------


def _int_list(text) -> list[int]:
    if isinstance(text, list):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def _optional(conv: Callable) -> Callable:
    def parse(value):
        if value is None or (isinstance(value, str) and value.lower() in ("", "none", "auto")):
            return None
        return conv(value)
    parse.__name__ = conv.__name__
    return parse


def _strict_int(value) -> int:
    if isinstance(value, bool):
        raise ValueError("boolean is not an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"{value} is not an integer")
        return int(value)
    return int(value)


@dataclass(frozen=True)
class Key:
    name: str
    type: Callable
    default: Any
    units: str
    help: str
    choices: tuple[str, ...] | None = None

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    def convert(self, value):
        try:
            out = self.type(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"key '{self.name}': cannot convert {value!r} ({exc})") from None
        if self.choices is not None and out is not None and out not in self.choices:
            raise ConfigError(f"key '{self.name}': {out!r} is not one of {', '.join(self.choices)}")
        return out


def _choices(enum_cls) -> tuple[str, ...]:
    return tuple(e.value for e in enum_cls)


SEED = Key("seed", _strict_int, 0, "integer", "master seed; trial i uses stream (seed, i)")


def _trials(default: int, units: str = "trials") -> Key:
    return Key("trials", _strict_int, default, units, "Monte Carlo repetitions")


CHALLENGE_SOURCE = Key("challenge_source", str, "haar", "-", "challenge distribution",
                       _choices(ChallengeSource))
DEVICE_FAMILY = Key("device_family", str, "haar", "-", "device unitary family", _choices(Family))
PRU_DEPTH = Key("pru_depth", _optional(_strict_int), None, "brickwork layers",
                "PRU circuit depth (default 4 x qubits)")
FIXED_UNITARY = Key("fixed_unitary", _optional(str), None, "path",
                    "matrix file for device_family=fixed")

SCHEMAS: dict[str, tuple[str, list[Key]]] = {
    "swap-demo": ("Closed-form and sampled equality-test acceptance for a pair of states.", [
        Key("dim", _strict_int, 4, "Hilbert-space dimension", "state dimension"),
        Key("states", str, "orthogonal", "-",
            "state pair: orthogonal basis states, identical, two Haar states, "
            "or a noisy device response against its ideal response",
            ("orthogonal", "identical", "haar", "device")),
        Key("test_kind", str, "swap", "-", "equality test", _choices(TestKind)),
        Key("copies", _strict_int, 1, "copies", "SWAP repetitions or GSWAP reference copies"),
        Key("epsilon_noise", float, 0.0, "probability", "contractive noise weight (states=device)"),
        DEVICE_FAMILY, PRU_DEPTH, FIXED_UNITARY,
        SEED, _trials(100_000),
    ]),
    "game": ("Unforgeability game win rates against the (d~+1)/d bound, one row per dimension.", [
        Key("dims", _int_list, [2, 4, 8, 16], "comma-separated dimensions", "dimensions to sweep"),
        Key("adversary", str, "subspace_emulation", "-", "forging adversary", _choices(AdversaryKind)),
        Key("learning_queries", _strict_int, 1, "queries",
            "learning-phase query budget (capped at each dimension)"),
        Key("kappa", _strict_int, 3, "copies", "GSWAP reference copies in the final test"),
        CHALLENGE_SOURCE, DEVICE_FAMILY, PRU_DEPTH, FIXED_UNITARY,
        SEED, _trials(1000),
    ]),
    "reduction": ("Success of a distinguisher in one stage of the PRS-to-unforgeability hybrid ladder.", [
        Key("stage", str, "game2", "-", "hybrid stage", _choices(Stage)),
        Key("dim", _strict_int, 8, "Hilbert-space dimension", "state dimension"),
        Key("copies", _strict_int, 4, "copies", "total copies m"),
        Key("l", _optional(_strict_int), None, "copies", "unrotated copies (game4/game5)"),
        Key("l_prime", _optional(_strict_int), None, "copies", "rotated copies (game4/game5)"),
        Key("distinguisher", str, "overlap_collision", "-", "distinguisher", _choices(DistinguisherKind)),
        Key("learning_queries", _strict_int, 0, "queries", "oracle queries for the forgery distinguisher"),
        Key("calibration_trials", _strict_int, 400, "trials", "held-out trials for threshold calibration"),
        DEVICE_FAMILY, PRU_DEPTH,
        SEED, _trials(1000),
    ]),
    "protocol-hr": ("Acceptance rate of the high-resource identification protocol.", [
        Key("dim", _strict_int, 16, "Hilbert-space dimension", "device dimension"),
        Key("prover", str, "honest", "-", "prover strategy", _choices(HrProver)),
        Key("n_challenges", _strict_int, 3, "challenges", "challenges K stored at setup"),
        Key("copies", _strict_int, 3, "copies", "copies M per challenge"),
        Key("rounds", _strict_int, 3, "rounds", "identification rounds R"),
        Key("test_kind", str, "gswap", "-", "equality test", _choices(TestKind)),
        Key("adversary_queries", _strict_int, 0, "queries", "learning queries for replay_adv"),
        CHALLENGE_SOURCE, DEVICE_FAMILY, PRU_DEPTH,
        SEED, _trials(1000),
    ]),
    "protocol-lr": ("Acceptance rate of the low-resource protocol with classical verification.", [
        Key("dim", _strict_int, 16, "Hilbert-space dimension", "device dimension"),
        Key("prover", str, "honest", "-", "prover strategy", _choices(LrProver)),
        Key("rounds", _strict_int, 32, "rounds", "rounds N (must be even)"),
        Key("delta", float, 0.5, "fraction", "expected fraction of 1s on trap rounds"),
        Key("delta_er", _optional(float), None, "count",
            "trap-count tolerance (default: Hoeffding radius at failure 1e-3)"),
        CHALLENGE_SOURCE, DEVICE_FAMILY, PRU_DEPTH,
        SEED, _trials(1000),
    ]),
    "spectral": ("Eigenphase statistics of a unitary family against Wieand's CUE formulas.", [
        Key("family", str, "haar", "-", "unitary family", _choices(SpectralFamily)),
        Key("dim", _strict_int, 64, "Hilbert-space dimension", "matrix dimension"),
        Key("theta", float, math.pi, "radians", "arc length"),
        Key("epsilon", float, 0.05, "diamond distance", "uniqueness slack for family=maxunique"),
        PRU_DEPTH,
        SEED, _trials(200, "sampled unitaries"),
    ]),
    "uniqueness": ("Pairwise diamond distances between independently generated devices.", [
        Key("dim", _strict_int, 8, "Hilbert-space dimension", "device dimension"),
        Key("n_devices", _strict_int, 10, "devices", "devices generated"),
        Key("delta_u", float, 1.9, "diamond distance", "uniqueness threshold"),
        Key("epsilon_noise", float, 0.0, "probability", "contractive noise weight recorded on each device"),
        Key("export_device", _optional(str), None, "path", "write the first device's unitary here"),
        DEVICE_FAMILY, PRU_DEPTH, FIXED_UNITARY,
        SEED,
    ]),
}


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


@dataclass
class Scenario:
    command: str
    params: dict[str, Any]
    output_format: str = "json"
    n_jobs: int = 1
    warnings: list[str] = field(default_factory=list)
    verbose: bool = False
    # optional per-trial detail attached to the report (``--verbose``)
    detail: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.params["seed"]

    @property
    def trials(self) -> int | None:
        return self.params.get("trials")


def _keys(command: str) -> dict[str, Key]:
    try:
        return {k.name: k for k in SCHEMAS[command][1]}
    except KeyError:
        raise ConfigError(f"unknown command {command!r}") from None


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a flat JSON object")
    return data


def _validate(command: str, params: dict) -> None:
    if "seed" in params and not 0 <= params["seed"] < 2 ** 64:
        raise ConfigError(f"key 'seed' must lie in [0, 2^64), got {params['seed']}")
    if params.get("trials") is not None and params["trials"] < 1:
        raise ConfigError(f"key 'trials' must be >= 1, got {params['trials']}")
    if command == "protocol-lr" and params["rounds"] % 2:
        raise ConfigError(f"key 'rounds' must be even (N/2 valid rounds and N/2 trap rounds), "
                          f"got {params['rounds']}")
    if params.get("device_family") == "fixed" and not params.get("fixed_unitary"):
        raise ConfigError("device_family=fixed needs key 'fixed_unitary'")


def build_scenario(command: str, flag_values: dict, config: dict | None = None,
                   output_format: str = "json", n_jobs: int = 1, verbose: bool = False) -> Scenario:
    """Merge defaults, file values and flag values into a validated scenario."""
    keys = _keys(command)
    params = {name: key.default for name, key in keys.items()}
    warnings = []
    file_values = {}
    for name, raw in (config or {}).items():
        if name == "command":
            if raw != command:
                raise ConfigError(f"config file is for command {raw!r}, not {command!r}")
            continue
        if name not in keys:
            raise ConfigError(f"unknown key {name!r} for command {command!r}")
        file_values[name] = keys[name].convert(raw)
    params.update(file_values)
    for name, raw in flag_values.items():
        if name not in keys:
            raise ConfigError(f"unknown key {name!r} for command {command!r}")
        value = keys[name].convert(raw)
        if name in file_values and file_values[name] != value:
            warnings.append(f"{keys[name].flag}={value!r} overrides config value {file_values[name]!r}")
        params[name] = value
    _validate(command, params)
    return Scenario(command, params, output_format, n_jobs, warnings, verbose)


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def _metric(value, std_err=None) -> dict:
    return {"value": float(value), "std_err": None if std_err is None else float(std_err)}


def _estimate(est) -> dict:
    return _metric(est.value, est.std_err)


def _setup_rng(seed: int) -> np.random.Generator:
    return RngStream(seed, SETUP_STREAM).generator()


def _fixed_unitary(p) -> np.ndarray | None:
    return read_matrix(p["fixed_unitary"]) if p.get("fixed_unitary") else None


def _device_params(p, dim, **extra) -> QpufParams:
    return QpufParams(dim=dim, family=p["device_family"], pru_depth=p.get("pru_depth"),
                      fixed_unitary=_fixed_unitary(p), **extra)


def _run_swap_demo(s: Scenario) -> dict:
    p = s.params
    d = p["dim"]
    rng = _setup_rng(s.seed)
    if p["states"] == "orthogonal":
        rho, psi = basis_state(d, 0), basis_state(d, 1)
    elif p["states"] == "identical":
        rho = psi = basis_state(d, 0)
    elif p["states"] == "haar":
        rho, psi = haar_state(d, rng), haar_state(d, rng)
    else:
        device = qgen(_device_params(p, d, epsilon_noise=p["epsilon_noise"]), rng)
        phi = haar_state(d, rng)
        rho, psi = device.channel(phi), device.unitary @ phi
    policy = TestPolicy(p["test_kind"], p["copies"])
    metrics = {
        "swap.p_accept": _metric(swap_accept_prob(rho, psi)),
        "test.p_accept": _metric(compound_accept_prob(policy, rho, psi)),
    }
    if d <= 16:
        metrics["swap.circuit_p_accept"] = _metric(swap_circuit_oracle(rho, psi))
    bits = sample_tests(policy, rho, psi, s.trials, RngStream(s.seed, 0).generator())
    metrics["test.sampled_accept_rate"] = _estimate(binomial_estimate(bits))
    return metrics


def _run_game(s: Scenario) -> dict:
    p = s.params
    metrics = {}
    for d in p["dims"]:
        q = min(p["learning_queries"], d)
        config = GameConfig(dim=d, challenge_source=p["challenge_source"], learning_budget_q=q,
                            test_copies_kappa=p["kappa"], trials=s.trials, seed=s.seed)
        rep = estimate_win_rate(config, _device_params(p, d), p["adversary"], n_jobs=s.n_jobs)
        log.info("game d=%d: accept %.4f forged %.4f bound %.4f", d, rep.accept.value,
                 rep.forged.value, rep.bound)
        tag = f"d{d}"
        metrics[f"unforgeability.{tag}.win_rate"] = _estimate(rep.accept)
        metrics[f"unforgeability.{tag}.fidelity_win_rate"] = _estimate(rep.forged)
        metrics[f"unforgeability.{tag}.mean_fidelity_sq"] = _estimate(rep.fidelity_sq)
        metrics[f"unforgeability.{tag}.bound"] = _metric(rep.bound)
        metrics[f"unforgeability.{tag}.accept_floor"] = _metric(rep.accept_floor)
        metrics[f"unforgeability.{tag}.learned_dim"] = _metric(rep.learned_dim)
    return metrics


def _run_reduction(s: Scenario) -> dict:
    p = s.params
    device = None
    if p["stage"] == Stage.GAME5.value:
        device = _device_params(p, p["dim"])
    rep = estimate_distinguishing(
        p["stage"], p["dim"], p["copies"], p["l"], p["l_prime"], trials=s.trials, seed=s.seed,
        distinguisher_kind=p["distinguisher"], calibration_trials=p["calibration_trials"],
        device_params=device, learning_queries=p["learning_queries"], n_jobs=s.n_jobs)
    metrics = {
        "reduction.success": _estimate(rep.success),
        "reduction.advantage": _metric(rep.advantage, rep.success.std_err),
    }
    if rep.accept_prs is not None:
        metrics["reduction.accept_prs"] = _estimate(rep.accept_prs)
        metrics["reduction.accept_haar"] = _estimate(rep.accept_haar)
    return metrics


def _transcript(outcome) -> dict:
    rows = [{k: v for k, v in vars(r).items() if v is not None} for r in outcome.per_round]
    return {"accepted": outcome.accepted, "rounds": rows}


def _run_protocol_hr(s: Scenario) -> dict:
    p = s.params
    config = HrProtocolConfig(dim=p["dim"], n_challenges=p["n_challenges"], copies=p["copies"],
                              rounds=p["rounds"], test_kind=p["test_kind"],
                              challenge_source=p["challenge_source"], device_family=p["device_family"],
                              pru_depth=p["pru_depth"], adversary_queries=p["adversary_queries"])
    metrics = {"hr.accept_rate": _estimate(estimate_protocol_rates(config, p["prover"], s.trials,
                                                                   s.seed, s.n_jobs))}
    if p["prover"] == HrProver.RANDOM_ADV.value:
        metrics["hr.oracle_accept"] = _metric(hr_random_adversary_oracle(config))
        metrics["hr.soundness_envelope"] = _metric(hr_soundness_envelope(config))
    if s.verbose:
        s.detail["transcript"] = _transcript(run_hr_protocol(config, p["prover"], RngStream(s.seed, 0).generator()))
    return metrics


def _run_protocol_lr(s: Scenario) -> dict:
    p = s.params
    config = LrProtocolConfig(dim=p["dim"], rounds=p["rounds"], delta=p["delta"], delta_er=p["delta_er"],
                              challenge_source=p["challenge_source"], device_family=p["device_family"],
                              pru_depth=p["pru_depth"])
    if s.verbose:
        s.detail["transcript"] = _transcript(run_lr_protocol(config, p["prover"], RngStream(s.seed, 0).generator()))
    return {
        "lr.accept_rate": _estimate(estimate_protocol_rates(config, p["prover"], s.trials, s.seed,
                                                            s.n_jobs)),
        "lr.oracle_accept": _metric(lr_accept_oracle(config, p["prover"])),
        "lr.delta_er": _metric(config.delta_er),
    }


def _run_spectral(s: Scenario) -> dict:
    p = s.params
    d = p["dim"]
    rep = spectral_report(p["family"], d, s.trials, _setup_rng(s.seed), theta=p["theta"],
                          pru_depth=p["pru_depth"], epsilon=p["epsilon"])
    ks = np.asarray(rep.kolmogorov_per_sample)
    arc = rep.arc_stats
    return {
        "spectral.kolmogorov_mean": _metric(ks.mean(), ks.std(ddof=1) / math.sqrt(ks.size)),
        "spectral.kolmogorov_bound": _metric(3.0 * math.log(d) / d),
        "spectral.arc_mean": _metric(arc.mean_count, math.sqrt(arc.var_count / arc.n_samples)),
        "spectral.arc_var": _metric(arc.var_count),
        "spectral.wieand_mean": _metric(rep.wieand_mean),
        "spectral.wieand_var": _metric(rep.wieand_var),
    }


def _run_uniqueness(s: Scenario) -> dict:
    p = s.params
    params = _device_params(p, p["dim"], epsilon_noise=p["epsilon_noise"], delta_u=p["delta_u"])
    rng = _setup_rng(s.seed)
    if p["export_device"]:
        # export from a copy of the stream so the report does not depend on exporting
        write_matrix(p["export_device"], qgen(params, _setup_rng(s.seed)).unitary)
    rep = uniqueness_test(params, p["n_devices"], rng)
    return {
        "uniqueness.fraction": _metric(rep.fraction_above),
        "uniqueness.min_distance": _metric(rep.min_distance),
        "uniqueness.mean_distance": _metric(rep.mean_distance),
    }


RUNNERS: dict[str, Callable[[Scenario], dict]] = {
    "swap-demo": _run_swap_demo,
    "game": _run_game,
    "reduction": _run_reduction,
    "protocol-hr": _run_protocol_hr,
    "protocol-lr": _run_protocol_lr,
    "spectral": _run_spectral,
    "uniqueness": _run_uniqueness,
}


def execute(scenario: Scenario) -> dict:
    """Run a scenario and return the report as a plain dict."""
    start = time.perf_counter()
    metrics = RUNNERS[scenario.command](scenario)
    report = {
        "scenario": {"command": scenario.command, "params": scenario.params},
        "metrics": metrics,
        "warnings": list(scenario.warnings),
        "seed": scenario.seed,
        "version": __version__,
        "wall_time": time.perf_counter() - start,
    }
    if scenario.detail:
        report["per_trial"] = scenario.detail
    return report


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def render_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "value", "std_err"])
    for name in sorted(report["metrics"]):
        m = report["metrics"][name]
        writer.writerow([name, repr(m["value"]), "" if m["std_err"] is None else repr(m["std_err"])])
    return buf.getvalue()


def render_human(report: dict) -> str:
    lines = [f"qpufsim {report['version']}  {report['scenario']['command']}  seed={report['seed']}"]
    width = max((len(n) for n in report["metrics"]), default=0)
    for name in sorted(report["metrics"]):
        m = report["metrics"][name]
        se = "" if m["std_err"] is None else f" +/- {m['std_err']:.3g}"
        lines.append(f"  {name:<{width}}  {m['value']:.6g}{se}")
    for w in report["warnings"]:
        lines.append(f"  warning: {w}")
    lines.append(f"  wall time {report['wall_time']:.2f} s")
    return "\n".join(lines) + "\n"


RENDERERS = {"json": render_json, "csv": render_csv, "human": render_human}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _help_text(key: Key) -> str:
    default = "auto" if key.default is None else key.default
    if isinstance(default, list):
        default = ",".join(map(str, default))
    choices = f" {{{', '.join(key.choices)}}}" if key.choices else ""
    return f"{key.help}{choices} [{key.units}] (default: {default})"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpufsim", description="Quantum PUF simulation experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command, (description, keys) in SCHEMAS.items():
        cmd = sub.add_parser(command, help=description, description=description)
        for key in keys:
            cmd.add_argument(key.flag, dest=key.name, default=argparse.SUPPRESS, metavar=key.name.upper(),
                             help=_help_text(key))
        if any(k.name == "dims" for k in keys):
            cmd.add_argument("--dim", dest="dims", default=argparse.SUPPRESS, metavar="DIM",
                             help="single-dimension shorthand for --dims")
        cmd.add_argument("--config", metavar="FILE", help="flat JSON file of key/value pairs")
        cmd.add_argument("--output", choices=tuple(RENDERERS), default="json", help="report format")
        cmd.add_argument("--jobs", type=int, default=1, help="worker threads (results are identical)")
        cmd.add_argument("--out-file", metavar="FILE", help="write the report here instead of stdout")
        cmd.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    return parser


_META = ("command", "config", "output", "jobs", "out_file", "verbose")


def parse_scenario(argv) -> tuple[Scenario, argparse.Namespace]:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in _META}
    config = _load_config(args.config) if args.config else None
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    return build_scenario(args.command, flags, config, args.output, args.jobs, args.verbose), args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        scenario, args = parse_scenario(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        for w in scenario.warnings:
            log.warning(w)
        text = RENDERERS[scenario.output_format](execute(scenario))
        if args.out_file:
            with open(args.out_file, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except QpufSimError as exc:
        print(f"qpufsim: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
