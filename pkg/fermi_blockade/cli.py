"""Command line front end.

Each subcommand reproduces one table or budget from a :class:`RunConfig` and
writes it under ``--out``. All results are computed before the first file is
written, so a failed run leaves no partial output.

Exit codes: 0 success, 2 invalid configuration or input outside the domain,
3 numerical failure, 4 golden file mismatch, 5 internal error.

"""
from typing import Any, Callable, Dict, List, Optional
import io
import sys
import csv
import math
import json
import logging
import argparse
from pathlib import Path

import numpy
import scipy
import pydantic

from .blockade import SERIES_MAX_FUGACITY, SuppressionResult, suppression
from .config import RunConfig, load_config
from .errors import DomainError, EnvelopeError, NumericalError
from .gas import GasScales, derive_scales, solve_fugacity
from .observables import SweepSpec, angle_to_k, angular_map, lifetime_factor, \
    prepulse_relaxation_mc, sweep
from .optics import optical_density, photon_budget, scattering_rate
from .profile import blocked_scattering_profile, cloud_diameter, gaussian_blur, \
    map_total, radial_average
from .schemas import Method, OutputFormat, OutputSchema, SweepVariable, Table
from .version import __version__


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_GOLDEN = 4
EXIT_INTERNAL = 5

GOLDEN_RTOL = 1e-6
GOLDEN_ATOL = 1e-12

METHOD_CHOICES = {"quadrature": [Method.quadrature],
                  "mc": [Method.mc],
                  "series": [Method.series],
                  "all": [Method.homogeneous, Method.quadrature, Method.mc, Method.series]}

Files = Dict[str, str]


def versions() -> Dict[str, str]:
    return {"fermi_blockade": __version__, "numpy": numpy.__version__,
            "scipy": scipy.__version__, "pydantic": pydantic.VERSION}


def provenance(subcommand: str, config: RunConfig, seed: Optional[int] = None,
               **extra: Any) -> Dict[str, Any]:
    """Provenance block written alongside every output file."""
    return {"subcommand": subcommand, "config_sha256": config.digest(),
            "seed": seed, "versions": versions(), **extra}


def _scales(config: RunConfig) -> GasScales:
    return derive_scales(config.trap.to_trap(), config.trap.n_per_spin,
                         config.species.to_species())


def _kf_over_kr(config: RunConfig, value: Optional[float]) -> float:
    return _scales(config).ratio_kf_kr if value is None else value


def _result_table(result: SuppressionResult) -> Table:
    columns = ["k_over_kf", "t_over_tf", "s", "std_error", "samples_or_evals",
               "truncation_error"]
    row = [result.k_over_kf, result.t_over_tf, result.s_value, result.std_error,
           result.samples_or_evals, result.truncation_error]
    if result.method == Method.mc:
        columns += ["envelope_t_over_tf", "acceptance"]
        row += [result.envelope_t_over_tf, result.acceptance]
    return Table(columns=columns, rows=[row])


def run_suppression(config: RunConfig, fmt: OutputFormat,
                    methods: Optional[List[Method]] = None) -> Files:
    task = config.task.suppression
    methods = methods or [task.method]
    state = solve_fugacity(config.state.t_over_tf)
    k = task.k_over_kf
    if k is None:
        k = angle_to_k(config.detection[0].alpha, _kf_over_kr(config, task.kf_over_kr))
    prov = provenance("suppression", config, task.seed,
                      methods=[m.value for m in methods])
    files: Files = {}
    for method in methods:
        if method == Method.series and len(methods) > 1 and state.fugacity > SERIES_MAX_FUGACITY:
            logger.warning(f"Skipping the series: fugacity {state.fugacity:.4g} "
                           f"> {SERIES_MAX_FUGACITY}")
            continue
        result = suppression(k, state, method, n_samples=task.n_samples, seed=task.seed,
                             max_terms=task.max_terms)
        logger.info(f"S({k:.4g}) = {result.s_value:.6g} [{method.value}]")
        schema = OutputSchema(f"suppression-{method.value}", fmt, prov)
        files.update(schema.content(_result_table(result)))
    return files


def _sweep(config: RunConfig, fmt: OutputFormat, variable: SweepVariable) -> Files:
    if variable == SweepVariable.t_over_tf:
        task, name = config.task.sweep_temperature, "sweep-temperature"
        fixed = task.kf_over_kr
    else:
        task, name = config.task.sweep_fermi, "sweep-fermi"
        fixed = task.t_over_tf
    spec = SweepSpec(variable=variable, fixed=fixed, grid=task.grid, axes=config.axes(),
                     relative_uncertainty_t=task.relative_uncertainty_t,
                     relative_uncertainty_kf=task.relative_uncertainty_kf,
                     cone_average=task.cone_average)
    return OutputSchema(name, fmt, provenance(name, config)).content(sweep(spec))


def run_sweep_temperature(config: RunConfig, fmt: OutputFormat) -> Files:
    return _sweep(config, fmt, SweepVariable.t_over_tf)


def run_sweep_fermi(config: RunConfig, fmt: OutputFormat) -> Files:
    return _sweep(config, fmt, SweepVariable.kf_over_kr)


def run_angular_map(config: RunConfig, fmt: OutputFormat) -> Files:
    task = config.task.angular_map
    kf_over_kr = _kf_over_kr(config, task.kf_over_kr)
    table = angular_map(solve_fugacity(task.t_over_tf), kf_over_kr, task.n_alpha)
    prov = provenance("angular-map", config, kf_over_kr=kf_over_kr)
    return OutputSchema("angular-map", fmt, prov).content(table)


def run_lifetime(config: RunConfig, fmt: OutputFormat) -> Files:
    task = config.task.lifetime
    kf_over_kr = _kf_over_kr(config, task.kf_over_kr)
    result = lifetime_factor(solve_fugacity(task.t_over_tf), kf_over_kr, task.weighting,
                             config.species.to_species(), task.n_nodes)
    table = Table(columns=["t_over_tf", "kf_over_kr", "mean_s", "multiplier",
                           "natural_lifetime_s", "modified_lifetime_s"],
                  rows=[[task.t_over_tf, kf_over_kr, result.mean_s, result.multiplier,
                         result.natural_lifetime, result.modified_lifetime]],
                  units={"natural_lifetime_s": "s", "modified_lifetime_s": "s"})
    prov = provenance("lifetime", config, weighting=result.weighting.value)
    return OutputSchema("lifetime", fmt, prov).content(table)


def run_radial_profile(config: RunConfig, fmt: OutputFormat) -> Files:
    task = config.task.radial_profile
    scales = _scales(config)
    axis = config.axes()[task.axis_index]
    k = angle_to_k(axis.alpha, scales.ratio_kf_kr)
    maps = blocked_scattering_profile(scales, solve_fugacity(task.t_over_tf),
                                      config.trap.to_trap(), k, task.grid(), task.n_nodes)
    blocked = gaussian_blur(maps.blocked, task.blur_e2_width)
    unblocked = gaussian_blur(maps.unblocked, task.blur_e2_width)
    prov = provenance("radial-profile", config, axis=axis.label, k_over_kf=k)
    files: Files = {}
    for name, grid_map in (("blocked", blocked), ("unblocked", unblocked),
                           ("ratio", maps.ratio)):
        schema = OutputSchema(f"radial-profile-{name}-map", fmt, prov)
        files.update(schema.content_matrix(grid_map.values, grid_map.pixel_size,
                                           grid_map.origin, grid_map.units))
    outer = radial_average(blocked, task.bin_width)
    inner = radial_average(unblocked, task.bin_width)
    rows = [[r, b, u, b / u if u > 0 else 0.0]
            for r, b, u in zip(outer.bin_centers, outer.means, inner.means)]
    table = Table(columns=["radius_m", "blocked", "unblocked", "ratio"], rows=rows,
                  units={"radius_m": "m", "blocked": "atoms/m^2", "unblocked": "atoms/m^2"})
    files.update(OutputSchema("radial-profile", fmt, prov).content(table))
    summary = {"cloud_diameter_m": cloud_diameter(unblocked),
               "blocked_total": map_total(blocked),
               "unblocked_total": map_total(unblocked),
               "fermi_radii_m": list(scales.fermi_radii)}
    files.update(OutputSchema("radial-profile-summary", fmt, prov).content_object(summary))
    return files


def run_prepulse(config: RunConfig, fmt: OutputFormat) -> Files:
    task = config.task.prepulse
    axis = config.axes()[task.axis_index]
    table = prepulse_relaxation_mc(solve_fugacity(task.t_over_tf), _scales(config).ratio_kf_kr,
                                   task.scatter_rate, task.durations, axis, task.seed,
                                   task.n_atoms_sim, task.bins)
    prov = provenance("prepulse", config, task.seed, axis=axis.label)
    return OutputSchema("prepulse", fmt, prov).content(table)


def run_budget(config: RunConfig, fmt: OutputFormat) -> Files:
    scales = _scales(config)
    species = config.species.to_species()
    drive = config.drive.to_drive()
    axis = config.axes()[config.task.budget.axis_index]
    state = solve_fugacity(config.state.t_over_tf)
    rate = scattering_rate(drive, species)
    od = optical_density(scales, state, drive, species, config.trap.to_trap(),
                         config.trap.n_spins)
    photons = photon_budget(rate, axis, config.trap.n_atoms_total)
    report = {"scales": {"fermi_energy_nk": scales.fermi_energy_nk,
                         "recoil_energy_nk": scales.recoil_energy_nk,
                         "kf_over_kr": scales.ratio_kf_kr,
                         "ef_over_er": scales.ef_over_er,
                         "weak_confinement": scales.weak_confinement},
              "scattering": rate.dict(),
              "optical_density": od.dict(),
              "photons": {**photons.dict(), "axis": axis.label},
              "natural_lifetime_s": species.natural_lifetime,
              "broadening": drive.broadening}
    prov = provenance("budget", config)
    return OutputSchema("budget", fmt, prov, label="order-of-magnitude").content_object(report)


SUBCOMMANDS: Dict[str, Callable[[RunConfig, OutputFormat], Files]] = {
    "sweep-temperature": run_sweep_temperature,
    "sweep-fermi": run_sweep_fermi,
    "angular-map": run_angular_map,
    "lifetime": run_lifetime,
    "radial-profile": run_radial_profile,
    "prepulse": run_prepulse,
    "budget": run_budget,
}


def run(subcommand: str, config: RunConfig, fmt: OutputFormat = OutputFormat.csv,
        method: Optional[str] = None) -> Files:
    """Compute the outputs of `subcommand`, keyed by file name."""
    fmt = OutputFormat(fmt)
    if subcommand == "suppression":
        return run_suppression(config, fmt, METHOD_CHOICES[method] if method else None)
    if subcommand not in SUBCOMMANDS:
        raise DomainError(f"Unknown subcommand {subcommand}")
    return SUBCOMMANDS[subcommand](config, fmt)


def write_outputs(files: Files, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        with open(out / name, "w", newline="") as f:
            f.write(files[name])
        logger.info(f"Wrote {out / name}")


def _is_sidecar(name: str) -> bool:
    return name.endswith(".csv.json")


def _cell_close(a: str, b: str) -> bool:
    try:
        x, y = float(a), float(b)
    except ValueError:
        return a == b
    return math.isclose(x, y, rel_tol=GOLDEN_RTOL, abs_tol=GOLDEN_ATOL)


def _same(a: Any, b: Any) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_same(a[k], b[k]) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=GOLDEN_RTOL, abs_tol=GOLDEN_ATOL)
    return a == b


def _matches(name: str, produced: str, expected: str) -> bool:
    if name.endswith(".json"):
        x, y = json.loads(produced), json.loads(expected)
        if isinstance(x, dict) and isinstance(y, dict):
            x.pop("provenance", None)
            y.pop("provenance", None)
        return _same(x, y)
    rows = list(csv.reader(io.StringIO(produced)))
    ref = list(csv.reader(io.StringIO(expected)))
    return (len(rows) == len(ref)
            and all(len(r) == len(s) and all(_cell_close(a, b) for a, b in zip(r, s))
                    for r, s in zip(rows, ref)))


def check_golden(files: Files, golden: Path, subcommand: str,
                 update: bool = False) -> List[str]:
    """Compare the data files in `files` with ``golden/subcommand``.

    Numbers agree within :data:`GOLDEN_RTOL` or :data:`GOLDEN_ATOL`, text
    must be equal. Provenance sidecars and ``provenance`` blocks are skipped.

    Returns:
        Names of missing or differing files. With `update` the golden data
        files are rewritten instead and nothing is reported.

    """
    target = golden / subcommand
    data = {name: text for name, text in files.items() if not _is_sidecar(name)}
    if update:
        write_outputs(data, target)
        return []
    mismatches = []
    for name in sorted(data):
        path = target / name
        if not path.exists() or not _matches(name, data[name], path.read_text()):
            mismatches.append(name)
    return mismatches


def _error(kind: str, message: str, **extra: Any) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}, default=str),
          file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermi-blockade",
        description="Pauli blocking of light scattering in a trapped Fermi gas")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("schema", help="Print the JSON schema of the run configuration")
    helps = {"suppression": "Single evaluation of S(k)",
             "sweep-temperature": "S versus T/T_F per detection axis",
             "sweep-fermi": "S versus k_F/k_R per detection axis",
             "angular-map": "S versus scattering angle",
             "lifetime": "Emission averaged S and lifetime multiplier",
             "radial-profile": "Blocked and unblocked column maps and radial profiles",
             "prepulse": "S after a resonant pre-pulse",
             "budget": "Scattering rate, optical density and photon count"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON run configuration, defaults to the built-in values")
        p.add_argument("--out", type=Path, default=Path("output"), help="Output directory")
        p.add_argument("--seed", type=int, default=None, help="Override every task seed")
        p.add_argument("--format", choices=[x.value for x in OutputFormat],
                       default=OutputFormat.csv.value)
        p.add_argument("--golden", type=Path, default=None,
                       help="Compare outputs with <golden>/<subcommand>/")
        p.add_argument("--update-golden", action="store_true",
                       help="Rewrite the golden files instead of comparing")
        if name == "suppression":
            p.add_argument("--method", choices=list(METHOD_CHOICES), default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.subcommand == "schema":
        print(json.dumps(RunConfig.schema(), indent=2))
        return EXIT_OK
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        files = run(args.subcommand, config, args.format, getattr(args, "method", None))
    except pydantic.ValidationError as e:
        _error("ValidationError", str(e), details=e.errors())
        return EXIT_INVALID
    except (DomainError, ValueError, OSError) as e:
        _error(type(e).__name__, str(e))
        return EXIT_INVALID
    except NumericalError as e:
        _error(type(e).__name__, str(e), diagnostics=e.diagnostics)
        return EXIT_NUMERICAL
    except EnvelopeError as e:
        _error(type(e).__name__, str(e))
        return EXIT_INTERNAL
    write_outputs(files, args.out)
    if args.golden is not None:
        mismatches = check_golden(files, args.golden, args.subcommand, args.update_golden)
        if mismatches:
            _error("GoldenMismatch", f"{len(mismatches)} file(s) differ from {args.golden}",
                   files=mismatches)
            return EXIT_GOLDEN
    return EXIT_OK
