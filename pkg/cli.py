"""Command-line front end for rieszlab.

Subcommands:

    check          run the sequence criteria and write verdicts (exit 0 holds, 1 fails, 2 inconclusive)
    spectral       analyse a finite truncation of T = A + V (exit 0 when every check passes)
    sweep          tabulate G, sigma_N or G-tilde over a grid of one or two model parameters
    scenario-list  print the registered scenarios and their default parameters

Run configuration is a TOML document with these sections (every key optional):

    seed
    spectrum.kind, spectrum.params.{c, d, gamma, q, values}
    weights.kind, weights.params.{alpha, a, values, scale, parts}
    perturbation.{source, path, amplitude, bandwidth}     source: none | scenario | file | random
    scenario.{name, params}
    criteria.{epsilon, horizon, depth, fast_route, schatten_p, g_tilde_k, g_tilde_n1,
              g_tilde_log2_min, g_tilde_log2_max, sigma_n}
    spectral.{size, buffer, quad_nodes, draws, n0, h1, h2, contour_checks,
              box_contour_max_size, riesz_start, depth}
    sweep.{quantity, parameter, values, parameter2, values2, log2_min, log2_max, model,
           depth, k, n1}
    output.dir

Later sources win: built-in defaults, then the config file, then the scenario, then flags.
The merged document is echoed to ``config.toml`` in the run directory.

Output files (numbers with 17 significant digits):

    check     g_values.csv     n,value,tail_upper,method
              sigma.csv        N,value,tail_upper,argmax,at_boundary
              g_tilde.csv      k,value,tail_upper,method
              g_tilde_growth.csv  depth,partial,increment
              schur.csv        N,k_N,bound_m,bound_m_prime,rho_N,sigma_N,sigma_kN,tau_N
              rate_fits.csv    model,beta,intercept,residual
              verdicts.txt, summary.txt
    spectral  eigenvalues.csv  index,re,im,region
              projections.csv  n,norm,rank,idem_residual
              riesz_sums.csv   draw,partial_sum
              perturbation.txt, summary.txt
    sweep     sweep.csv        param[,param2],n_or_k,value,tail,tail_lower
              rate_fits.csv    param[,param2],model,beta,intercept,residual

In sweep.csv ``n_or_k`` is the index n for G and sigma_N, and the outer truncation
depth for G-tilde partial sums.
"""

import argparse
import copy
import itertools
import logging
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from cache import SimpleCache, cache, cache_sweep_cell, cached_sweep_cell, sweep_cell_key
from config import (
    BOX_CONTOUR_MAX_SIZE,
    DEFAULT_CONTOUR_CHECKS,
    DEFAULT_DRAWS,
    DEFAULT_EPSILON,
    DEFAULT_GTILDE_K,
    DEFAULT_GTILDE_LOG2,
    DEFAULT_GTILDE_N1,
    DEFAULT_HORIZON,
    DEFAULT_QUAD_NODES,
    DEFAULT_SCHATTEN_P,
    DEFAULT_SEED,
    DEFAULT_SIZE,
    EXIT_FAILS,
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    EXIT_SOFTWARE,
    EXIT_USAGE,
    MAX_SWEEP_CELLS,
    OUTPUT_DIR,
    SWEEP_WORKERS,
    logger,
)
from criteria import (
    ConvergenceError,
    CriteriaParams,
    CriteriaReport,
    RateModel,
    VerdictStatus,
    criteria_tables,
    evaluate_criteria,
    g_samples,
    g_tilde_partial_sums,
    overall_status,
    rate_fit,
)
from operator_lab import (
    PerturbationMatrix,
    build_truncated_T,
    random_certified_perturbation,
    read_perturbation,
    write_perturbation,
    zero_perturbation,
)
from performance import PerformanceMonitor
from scenarios import REGISTRY, Scenario, build_scenario, scenario_names
from sequence_models import Spectrum, TailBound, WeightSequence, spectrum_from_config, weights_from_config
from spectral_analysis import (
    ContourError,
    DefectiveEigenvalueError,
    SpectralParams,
    SpectralReport,
    analyze_spectrum,
)
from utils import ensure_directory_exists, format_number, write_csv, write_text


class ConfigError(ValueError):
    """Malformed configuration or command-line arguments."""


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(message)


DEFAULTS: dict[str, Any] = {
    "seed": DEFAULT_SEED,
    "spectrum": {"kind": "linear", "params": {}},
    "weights": {"kind": "zero", "params": {}},
    "perturbation": {"source": None, "path": None, "amplitude": 1.0, "bandwidth": None},
    "scenario": {"name": None, "params": {}},
    "criteria": {
        "epsilon": DEFAULT_EPSILON,
        "horizon": DEFAULT_HORIZON,
        "depth": None,
        "fast_route": False,
        "schatten_p": list(DEFAULT_SCHATTEN_P),
        "g_tilde_k": DEFAULT_GTILDE_K,
        "g_tilde_n1": DEFAULT_GTILDE_N1,
        "g_tilde_log2_min": DEFAULT_GTILDE_LOG2[0],
        "g_tilde_log2_max": DEFAULT_GTILDE_LOG2[1],
        "sigma_n": [],
    },
    "spectral": {
        "size": None,
        "buffer": None,
        "quad_nodes": DEFAULT_QUAD_NODES,
        "draws": DEFAULT_DRAWS,
        "n0": None,
        "h1": None,
        "h2": None,
        "contour_checks": DEFAULT_CONTOUR_CHECKS,
        "box_contour_max_size": BOX_CONTOUR_MAX_SIZE,
        "riesz_start": None,
        "depth": None,
    },
    "sweep": {
        "quantity": "g",
        "parameter": None,
        "values": [],
        "parameter2": None,
        "values2": [],
        "log2_min": 6,
        "log2_max": 20,
        "model": None,
        "depth": None,
        "k": DEFAULT_GTILDE_K,
        "n1": DEFAULT_GTILDE_N1,
    },
    "output": {"dir": None},
}

SWEEP_QUANTITIES = ("g", "sigma", "g_tilde")


# --------------------------------------------------------------------------- config


def merge_documents(base: Mapping[str, Any], override: Mapping[str, Any], path: str = "") -> dict[str, Any]:
    """Overlay ``override`` on ``base``; ``params`` tables are replaced, not merged."""
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(value, dict) and isinstance(base[key], dict) and key != "params":
            merged[key] = merge_documents(base[key], value, where + ".")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_document(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"malformed config {path}: {e}") from e


def parse_param(item: str) -> tuple[str, Any]:
    """Split ``K=V``; V is read as a TOML value, falling back to a bare string."""
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"--param expects K=V, got {item!r}")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def _strip_none(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _strip_none(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_strip_none(v) for v in value]
    return value


def _set_dotted(doc: dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    if len(parts) != 3 or parts[0] not in ("spectrum", "weights", "scenario") or parts[1] != "params":
        raise ConfigError(f"sweep parameter must look like spectrum|weights|scenario.params.NAME, got {key!r}")
    doc[parts[0]]["params"][parts[2]] = value


@dataclass
class RunConfig:
    """Merged run document plus the resolved output directory."""

    command: str
    document: dict[str, Any]
    output_dir: Path
    use_cache: bool = True

    @property
    def seed(self) -> int:
        return int(self.document["seed"])

    @property
    def label(self) -> str:
        name = self.document["scenario"]["name"]
        if name:
            return str(name)
        return f"{self.document['spectrum']['kind']}-{self.document['weights']['kind']}"

    def criteria_params(self) -> CriteriaParams:
        c = self.document["criteria"]
        return CriteriaParams(
            epsilon=float(c["epsilon"]),
            horizon=int(c["horizon"]),
            depth=None if c["depth"] is None else int(c["depth"]),
            fast_route=bool(c["fast_route"]),
            schatten_p=tuple(float(p) for p in c["schatten_p"]),
            g_tilde_k=int(c["g_tilde_k"]),
            g_tilde_n1=int(c["g_tilde_n1"]),
            g_tilde_log2=(int(c["g_tilde_log2_min"]), int(c["g_tilde_log2_max"])),
            sigma_n=tuple(int(n) for n in c["sigma_n"]),
        )

    def spectral_params(self, size: int) -> SpectralParams:
        s = self.document["spectral"]

        def opt(key: str, cast):
            return None if s[key] is None else cast(s[key])

        return SpectralParams(
            size=size,
            buffer=opt("buffer", int),
            quad_nodes=int(s["quad_nodes"]),
            draws=int(s["draws"]),
            n0=opt("n0", int),
            h1=opt("h1", float),
            h2=opt("h2", float),
            contour_checks=int(s["contour_checks"]),
            box_contour_max_size=int(s["box_contour_max_size"]),
            riesz_start=opt("riesz_start", int),
            depth=opt("depth", int),
        )

    def echo(self) -> Path:
        """Write the merged document to config.toml in the run directory."""
        ensure_directory_exists(self.output_dir)
        path = self.output_dir / "config.toml"
        path.write_text(tomli_w.dumps(_strip_none(self.document)))
        return path


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and flags into a RunConfig."""
    doc = copy.deepcopy(DEFAULTS)
    if args.config:
        doc = merge_documents(doc, load_document(args.config))
        logger.info(f"Loaded configuration from {args.config}")

    if args.seed is not None:
        doc["seed"] = args.seed
    if args.scenario:
        if args.scenario != doc["scenario"]["name"]:
            doc["scenario"]["params"] = {}
        doc["scenario"]["name"] = args.scenario
    if args.param:
        if not doc["scenario"]["name"]:
            raise ConfigError("--param needs a scenario (--scenario or scenario.name)")
        doc["scenario"]["params"].update(parse_param(item) for item in args.param)
    if args.size is not None:
        doc["spectral"]["size"] = args.size
    if args.quad_nodes is not None:
        doc["spectral"]["quad_nodes"] = args.quad_nodes
    if args.epsilon is not None:
        doc["criteria"]["epsilon"] = args.epsilon
    if getattr(args, "fast_route", False):
        doc["criteria"]["fast_route"] = True

    if doc["scenario"]["name"] and doc["scenario"]["name"] not in REGISTRY:
        raise ConfigError(f"unknown scenario {doc['scenario']['name']!r}; known: {', '.join(scenario_names())}")

    config = RunConfig(args.cmd, doc, Path("."), use_cache=not args.no_cache)
    if args.out:
        config.output_dir = Path(args.out)
    elif doc["output"]["dir"]:
        config.output_dir = Path(doc["output"]["dir"])
    else:
        config.output_dir = OUTPUT_DIR / f"{args.cmd}-{config.label}"
    return config


# --------------------------------------------------------------------------- models


def resolve_models(
    doc: Mapping[str, Any], rng: np.random.Generator
) -> tuple[Spectrum, WeightSequence, Scenario | None]:
    """Spectrum and weights from the scenario if one is named, else from their sections."""
    name = doc["scenario"]["name"]
    if name:
        size = doc["spectral"]["size"]
        scenario = build_scenario(
            name, doc["scenario"]["params"], rng, None if size is None else int(size), int(doc["criteria"]["horizon"])
        )
        return scenario.spectrum, scenario.weights, scenario
    return spectrum_from_config(doc["spectrum"]), weights_from_config(doc["weights"]), None


def resolve_perturbation(
    doc: Mapping[str, Any],
    w: WeightSequence,
    scenario: Scenario | None,
    rng: np.random.Generator,
) -> PerturbationMatrix:
    section = doc["perturbation"]
    source = section["source"] or ("scenario" if scenario is not None else "none")
    size = doc["spectral"]["size"]
    if source == "scenario":
        if scenario is None:
            raise ConfigError("perturbation.source = 'scenario' needs a scenario")
        return scenario.perturbation
    if source == "file":
        if not section["path"]:
            raise ConfigError("perturbation.source = 'file' needs perturbation.path")
        return read_perturbation(section["path"], w)
    size = DEFAULT_SIZE if size is None else int(size)
    if source == "none":
        return zero_perturbation(w, size)
    if source == "random":
        bandwidth = section["bandwidth"]
        return random_certified_perturbation(
            w, size, rng, float(section["amplitude"]), None if bandwidth is None else int(bandwidth)
        )
    raise ConfigError(f"unknown perturbation source {source!r}")


# --------------------------------------------------------------------------- check


def _fit_rows(samples: Mapping[int, float], models: Sequence[RateModel]) -> list[list[Any]]:
    rows = []
    for model in models:
        try:
            fit = rate_fit(samples, model)
        except ValueError as e:
            logger.debug(f"Skipping {RateModel(model).value} fit: {e}")
            continue
        rows.append([fit.model.value, fit.beta, fit.intercept, fit.residual])
    return rows


def _dyadic_lower(g_values: Mapping[int, TailBound], lowest: int = 64) -> dict[int, float]:
    return {n: b.lower for n, b in g_values.items() if n >= lowest and n & (n - 1) == 0}


def verdict_lines(report: CriteriaReport) -> list[str]:
    lines = []
    for name, verdict in report.verdicts.items():
        mark = " [required]" if name in report.required else ""
        lines.append(f"{name} = {verdict.status.value}{mark}")
        lines.append(f"  {verdict.detail}")
        if verdict.note:
            lines.append(f"  note: {verdict.note}")
        for n, value in verdict.witness:
            lines.append(f"  witness n = {n}: {format_number(value)}")
    lines.append(f"overall = {overall_status(report).value}")
    return lines


def write_check_outputs(report: CriteriaReport, out: Path) -> None:
    write_csv(
        out / "g_values.csv",
        ["n", "value", "tail_upper", "method"],
        ([n, b.value, b.tail_upper, b.method.value] for n, b in sorted(report.g_values.items())),
    )
    write_csv(
        out / "sigma.csv",
        ["N", "value", "tail_upper", "argmax", "at_boundary"],
        ([N, s.bound.value, s.bound.tail_upper, s.argmax, s.at_boundary] for N, s in sorted(report.sigma.items())),
    )
    write_csv(
        out / "g_tilde.csv",
        ["k", "value", "tail_upper", "method"],
        ([k, b.value, b.tail_upper, b.method.value] for k, b in sorted(report.g_tilde.items())),
    )
    if report.growth is not None:
        g = report.growth
        write_csv(
            out / "g_tilde_growth.csv",
            ["depth", "partial", "increment"],
            ([d, p, None if i == 0 else g.increments[i - 1]] for i, (d, p) in enumerate(zip(g.depths, g.partial))),
        )
    write_csv(
        out / "schur.csv",
        ["N", "k_N", "bound_m", "bound_m_prime", "rho_N", "sigma_N", "sigma_kN", "tau_N"],
        (
            [N, s.k_N, s.bound_m, s.bound_m_prime, s.rho_N.upper, s.sigma_N.upper, s.sigma_kN.upper, s.tau_N]
            for N, s in sorted(report.schur.items())
        ),
    )
    write_csv(
        out / "rate_fits.csv",
        ["model", "beta", "intercept", "residual"],
        _fit_rows(_dyadic_lower(report.g_values), [RateModel.POWER, RateModel.POWER_LOG]),
    )
    write_text(out / "verdicts.txt", "\n".join(verdict_lines(report)))

    summary = [
        f"rho_1 = {format_number(report.rho_1.value)} + [{format_number(report.rho_1.tail_lower)}, "
        f"{format_number(report.rho_1.tail_upper)}] ({report.rho_1.method.value})",
    ]
    for p, b in sorted(report.schatten.items()):
        summary.append(f"schatten p = {format_number(p)}: {format_number(b.upper)} ({b.method.value})")
    summary.append(f"n0_candidate = {format_number(report.n0_candidate) or 'none'}")
    summary.append(f"n_star_candidate = {format_number(report.n_star_candidate) or 'none'}")
    summary.append(f"epsilon_index = {format_number(report.epsilon_index) or 'none'}")
    if report.growth is not None and report.growth.exponent is not None:
        summary.append(f"g_tilde_increment_exponent = {format_number(report.growth.exponent)}")
    if report.decay_check is not None:
        summary.append(f"monotone_decay_check = {report.decay_check.status.value}")
    summary.append(f"overall = {overall_status(report).value}")
    write_text(out / "summary.txt", "\n".join(summary))


_STATUS_EXIT = {
    VerdictStatus.HOLDS: EXIT_OK,
    VerdictStatus.FAILS: EXIT_FAILS,
    VerdictStatus.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


def cmd_check(config: RunConfig) -> int:
    rng = np.random.default_rng(config.seed)
    spec, w, _ = resolve_models(config.document, rng)
    report = evaluate_criteria(spec, w, config.criteria_params())
    config.echo()
    write_check_outputs(report, config.output_dir)
    status = overall_status(report)
    logger.info(f"Criteria {status.value}; results in {config.output_dir}")
    return _STATUS_EXIT[status]


# --------------------------------------------------------------------------- spectral


def write_spectral_outputs(report: SpectralReport, out: Path) -> None:
    labels = report.localization.labels
    write_csv(
        out / "eigenvalues.csv",
        ["index", "re", "im", "region"],
        ([i + 1, lam.real, lam.imag, labels[i]] for i, lam in enumerate(report.eigenvalues)),
    )
    write_csv(
        out / "projections.csv",
        ["n", "norm", "rank", "idem_residual"],
        ([r.n, r.norm, r.rank, r.idem_residual] for r in report.projections),
    )
    write_csv(
        out / "riesz_sums.csv",
        ["draw", "partial_sum"],
        ([i + 1, s] for i, s in enumerate(report.riesz_sums)),
    )
    loc = report.localization
    summary = [
        f"n0 = {report.n0}",
        f"n_star = {format_number(report.n_star) or 'none'}",
        f"h1 = {format_number(report.h1)}",
        f"h2 = {format_number(report.h2)}",
        f"buffer = {report.buffer}",
        f"box_count = {loc.box_count}",
        f"outside = {len(loc.outside)}",
        f"excluded = {len(loc.excluded)}",
        f"disjointness = {format_number(report.disjointness)}",
        f"condition_number = {format_number(report.condition_number) or 'none'}",
        f"contour_agreement = {format_number(report.contour_agreement) or 'none'}",
        f"quadrature_stability = {format_number(report.quadrature_stability) or 'none'}",
        f"box_rank = {format_number(report.box_rank) or 'none'}",
    ]
    summary += [f"check {name} = {'ok' if ok else 'failed'}" for name, ok in report.checks.items()]
    summary += [f"note: {note}" for note in report.notes]
    summary.append(f"passed = {format_number(report.passed)}")
    write_text(out / "summary.txt", "\n".join(summary))


def cmd_spectral(config: RunConfig) -> int:
    rng = np.random.default_rng(config.seed)
    spec, w, scenario = resolve_models(config.document, rng)
    V = resolve_perturbation(config.document, w, scenario, rng)
    size = config.document["spectral"]["size"]
    size = V.size if size is None else int(size)
    T = build_truncated_T(spec, V, size)
    report = analyze_spectrum(T, config.spectral_params(size), rng)
    config.echo()
    write_perturbation(V, config.output_dir / "perturbation.txt")
    write_spectral_outputs(report, config.output_dir)
    logger.info(f"Spectral checks {'passed' if report.passed else 'failed'}; results in {config.output_dir}")
    return EXIT_OK if report.passed else EXIT_FAILS


# --------------------------------------------------------------------------- sweep


def sweep_rows(
    quantity: str, spec: Spectrum, w: WeightSequence, section: Mapping[str, Any], store: SimpleCache | None
) -> list[list[Any]]:
    """[n_or_k, value, tail_upper, tail_lower] rows of one sweep cell."""
    lo, hi = int(section["log2_min"]), int(section["log2_max"])
    if not 1 <= lo <= hi:
        raise ConfigError(f"need 1 <= sweep.log2_min <= sweep.log2_max, got {lo}, {hi}")
    ns = [1 << i for i in range(lo, hi + 1)]
    depth = int(section["depth"] or 8 * ns[-1])
    limit = spec.index_limit if spec.length is None else None
    if limit is not None and depth >= limit:
        depth = limit - 1
        if ns[-1] >= depth // 2:
            raise ConfigError(f"sweep.log2_max = {hi} is too large: mu_n overflows beyond n = {limit}")
    key_quantity = quantity
    if quantity == "g_tilde":
        key_quantity = f"g_tilde:k={int(section['k'])}:n1={int(section['n1'])}"
    key = sweep_cell_key(key_quantity, spec, w, ns, depth)
    if store is not None:
        cached = cached_sweep_cell(key, store)
        if cached is not None:
            return cached

    if quantity == "g":
        if spec.slope is not None:
            tables = criteria_tables(spec, w, ns[-1], depth)
            bounds = {n: tables.g(n) for n in ns}
        else:
            bounds = g_samples(spec, w, ns, depth)
    elif quantity == "sigma":
        tables = criteria_tables(spec, w, ns[-1], depth)
        bounds = {N: tables.sigma(N).bound for N in ns}
    else:
        sums = g_tilde_partial_sums(spec, w, int(section["k"]), int(section["n1"]), ns)
        bounds = dict(zip(ns, sums))
    rows = [[n, b.value, b.tail_upper, b.tail_lower] for n, b in sorted(bounds.items())]

    if store is not None:
        cache_sweep_cell(key, rows, store)
    return rows


def _cell_fit_samples(quantity: str, rows: Sequence[Sequence[Any]]) -> dict[int, float]:
    if quantity == "g_tilde":
        return {int(b[0]): b[1] - a[1] for a, b in zip(rows, rows[1:])}
    return {int(n): value + lower for n, value, _, lower in rows}


def cmd_sweep(config: RunConfig) -> int:
    doc = config.document
    section = doc["sweep"]
    quantity = section["quantity"]
    if quantity not in SWEEP_QUANTITIES:
        raise ConfigError(f"sweep.quantity must be one of {', '.join(SWEEP_QUANTITIES)}, got {quantity!r}")
    if not section["parameter"] or not section["values"]:
        raise ConfigError("sweep needs sweep.parameter and a non-empty sweep.values")
    axes = [(section["parameter"], list(section["values"]))]
    if section["parameter2"]:
        if not section["values2"]:
            raise ConfigError("sweep.parameter2 needs a non-empty sweep.values2")
        axes.append((section["parameter2"], list(section["values2"])))
    grid = list(itertools.product(*(values for _, values in axes)))
    if len(grid) > MAX_SWEEP_CELLS:
        raise ConfigError(f"sweep grid has {len(grid)} cells, limit is {MAX_SWEEP_CELLS}")
    model = RateModel(section["model"]) if section["model"] else None
    store = cache if config.use_cache else None
    logger.info(f"Sweeping {quantity} over {len(grid)} cells")

    def run_cell(point: tuple[Any, ...]) -> list[list[Any]]:
        cell_doc = copy.deepcopy(doc)
        for (key, _), value in zip(axes, point):
            _set_dotted(cell_doc, key, value)
        spec, w, _ = resolve_models(cell_doc, np.random.default_rng(config.seed))
        return sweep_rows(quantity, spec, w, section, store)

    results: dict[int, list[list[Any]]] = {}
    with ThreadPoolExecutor(max_workers=SWEEP_WORKERS) as executor:
        futures = {executor.submit(run_cell, point): i for i, point in enumerate(grid)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()

    params_header = ["param"] if len(axes) == 1 else ["param", "param2"]
    data, fits = [], []
    for i, point in enumerate(grid):
        rows = results[i]
        data.extend([*point, n, value, upper, lower] for n, value, upper, lower in rows)
        if model is not None:
            fits.extend([*point, *fit] for fit in _fit_rows(_cell_fit_samples(quantity, rows), [model]))

    config.echo()
    write_csv(config.output_dir / "sweep.csv", params_header + ["n_or_k", "value", "tail", "tail_lower"], data)
    if model is not None:
        write_csv(config.output_dir / "rate_fits.csv", params_header + ["model", "beta", "intercept", "residual"], fits)
    logger.info(f"Sweep written to {config.output_dir}")
    return EXIT_OK


# --------------------------------------------------------------------------- scenario-list


def cmd_scenario_list(config: RunConfig | None = None) -> int:
    for name in scenario_names():
        entry = REGISTRY[name]
        print(f"{name}: {entry.description}")
        for key, value in entry.defaults.items():
            print(f"  {key} = {value!r}")
    return EXIT_OK


# --------------------------------------------------------------------------- main


COMMANDS = {
    "check": cmd_check,
    "spectral": cmd_spectral,
    "sweep": cmd_sweep,
}


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="TOML run configuration")
    common.add_argument("--out", type=str, help="Output directory (default: output_runs/<command>-<label>)")
    common.add_argument("--seed", type=int, help=f"Random seed (default: {DEFAULT_SEED})")
    common.add_argument("--scenario", type=str, help="Registered scenario name")
    common.add_argument("--param", action="append", metavar="K=V", help="Scenario parameter override (repeatable)")
    common.add_argument("--size", type=int, help="Truncation size")
    common.add_argument("--quad-nodes", type=int, help="Quadrature nodes per contour")
    common.add_argument("--epsilon", type=float, help="Target bound for G on the tail")
    common.add_argument("--fast-route", action="store_true", help="Also require the G-tilde route verdicts")
    common.add_argument("--no-cache", action="store_true", help="Do not read or write cached sweep cells")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = ArgumentParser(description="Riesz-basis criteria and spectral diagnostics for A + V")
    sub = parser.add_subparsers(dest="cmd", required=True)
    sub.add_parser("check", parents=[common], help="Evaluate the sequence criteria")
    sub.add_parser("spectral", parents=[common], help="Eigensystem, projections and Riesz sums of a truncation")
    sub.add_parser("sweep", parents=[common], help="Tabulate a criterion quantity over a parameter grid")
    listing = sub.add_parser("scenario-list", help="List registered scenarios")
    listing.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Application entry point; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_USAGE

    level = getattr(logging, args.log_level)
    logging.getLogger().setLevel(level)
    logger.setLevel(level)

    if args.cmd == "scenario-list":
        return cmd_scenario_list()

    try:
        config = load_run_config(args)
        with PerformanceMonitor(f"rieszlab {args.cmd}"):
            return COMMANDS[args.cmd](config)
    except (ContourError, DefectiveEigenvalueError, ConvergenceError, np.linalg.LinAlgError) as e:
        logger.error(f"Numerical failure in {args.cmd}: {e}")
        return EXIT_SOFTWARE
    except ValueError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"Unexpected error in {args.cmd}: {e}")
        return EXIT_SOFTWARE


if __name__ == "__main__":
    sys.exit(main())
