"""Command-line entry point: ``needlet-whittle {table1,simulate,estimate,dump-spectrum}``.

Exit codes: 0 success, 1 runtime or estimation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .asymptotics import variance_constants
from .bandsim import read_spectrum_csv, sample_empirical_spectrum, write_spectrum_csv
from .estimator import (
    EstimatorConfig,
    estimate_narrow_band,
    estimate_needlet,
    fourier_whittle_estimate,
    scale_for_multipole,
)
from .montecarlo import (
    Estimator,
    ExperimentConfig,
    NARROW,
    NarrowSpec,
    run_experiment,
    summarize,
    write_replications_csv,
    write_summary_csv,
)
from .spectrum import ModelError, SpectrumModel
from .window import BandDecomposition

DEFAULT_B_GRID = ("2^(1/8)", "2^(1/4)", "2^(1/2)", "2")
DEFAULT_ALPHA_GRID = (2.0, 3.0, 4.0)

TABLE1_FIELDS = ["B", "alpha0", "sigma2", "tau2", "i0", "rho2", "psi", "d", "b2d"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


_POWER = re.compile(r"^\s*([0-9.]+)\s*\^\s*\(?\s*([0-9.]+)\s*(?:/\s*([0-9.]+))?\s*\)?\s*$")


def parse_real(value, where: str = "value") -> float:
    """A float, or a string like ``"2^(1/8)"``."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _POWER.match(value)
        if m:
            base, num, den = m.groups()
            return float(base) ** (float(num) / float(den or 1))
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{where}: cannot parse {value!r} as a real number")


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


SIMULATE_KEYS = {"B", "L", "alpha0", "model", "estimators", "replications", "seed",
                 "narrow", "estimator", "l_min"}


@dataclass(frozen=True)
class RunConfig:
    """A resolved ``simulate`` configuration: one experiment per ``(L, alpha0)``."""

    experiments: tuple

    def to_dict(self) -> dict:
        first = self.experiments[0].to_dict()
        model = dict(first["model"])
        model.pop("alpha0")
        return {
            "B": first["B"],
            "L": sorted({e.L for e in self.experiments}),
            "alpha0": sorted({e.model.alpha0 for e in self.experiments}),
            "model": model,
            "estimators": first["estimators"],
            "replications": first["replications"],
            "seed": first["seed"],
            "narrow": first["narrow"],
            "estimator": first["estimator"],
            "l_min": first["l_min"],
        }


def resolve_config(data: dict, seed: int | None = None) -> RunConfig:
    """Validate a ``simulate`` config dict and expand its ``L x alpha0`` grid."""
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a JSON object")
    unknown = set(data) - SIMULATE_KEYS
    if unknown:
        raise ConfigError(f"unknown field(s): {sorted(unknown)}")
    for key in ("B", "L", "alpha0"):
        if key not in data and not (key == "alpha0" and "alpha0" in data.get("model", {})):
            raise ConfigError(f"missing required field '{key}'")
    B = parse_real(data["B"], "B")
    if not B > 1:
        raise ConfigError(f"B: must be > 1, got {B}")
    Ls = []
    for i, L in enumerate(_as_list(data["L"])):
        if not isinstance(L, int) or isinstance(L, bool) or L < 4:
            raise ConfigError(f"L[{i}]: expected an integer >= 4, got {L!r}")
        Ls.append(L)
    model_data = dict(data.get("model", {}))
    if not isinstance(model_data, dict):
        raise ConfigError("model: expected an object")
    alphas = [parse_real(a, f"alpha0[{i}]") for i, a in
              enumerate(_as_list(data.get("alpha0", model_data.pop("alpha0", None))))]
    model_data.pop("alpha0", None)
    try:
        estimators = tuple(Estimator(e) for e in data.get("estimators", ["needlet_full", "fourier_full"]))
    except ValueError as exc:
        raise ConfigError(f"estimators: {exc}; choose from {[e.value for e in Estimator]}") from None
    reps = data.get("replications", 1000)
    if not isinstance(reps, int) or reps < 2:
        raise ConfigError(f"replications: expected an integer >= 2, got {reps!r}")
    the_seed = data.get("seed", 0) if seed is None else seed
    if not isinstance(the_seed, int):
        raise ConfigError(f"seed: expected an integer, got {the_seed!r}")
    narrow_data = data.get("narrow", {})
    if not isinstance(narrow_data, dict) or set(narrow_data) - {"g", "J1", "L1"}:
        raise ConfigError("narrow: expected an object with any of 'g', 'J1', 'L1'")
    try:
        g = narrow_data.get("g")
        narrow = NarrowSpec(
            g=None if g in (None, "default") else parse_real(g, "narrow.g"),
            J1=narrow_data.get("J1"),
            L1=narrow_data.get("L1"),
        )
    except ValueError as exc:
        raise ConfigError(f"narrow: {exc}") from None
    est_data = data.get("estimator", {})
    if not isinstance(est_data, dict) or set(est_data) - {"alpha_range", "g_range", "opt_tol", "n_scan"}:
        raise ConfigError("estimator: expected an object with alpha_range, g_range, opt_tol, n_scan")
    try:
        est = EstimatorConfig(
            alpha_range=tuple(parse_real(a, "estimator.alpha_range")
                              for a in est_data.get("alpha_range", EstimatorConfig.alpha_range)),
            g_range=tuple(parse_real(a, "estimator.g_range")
                          for a in est_data.get("g_range", EstimatorConfig.g_range)),
            opt_tol=parse_real(est_data.get("opt_tol", EstimatorConfig.opt_tol), "estimator.opt_tol"),
            n_scan=int(est_data.get("n_scan", EstimatorConfig.n_scan)),
        )
    except ValueError as exc:
        raise ConfigError(f"estimator: {exc}") from None
    l_min = data.get("l_min", 1)
    if not isinstance(l_min, int) or l_min < 1:
        raise ConfigError(f"l_min: expected an integer >= 1, got {l_min!r}")

    experiments = []
    for L, alpha0 in itertools.product(sorted(Ls), sorted(alphas)):
        try:
            model = SpectrumModel.from_dict({**model_data, "alpha0": alpha0})
        except (ModelError, TypeError) as exc:
            raise ConfigError(f"model: {exc}") from None
        try:
            exp = ExperimentConfig(model, B, L, estimators, reps, the_seed, narrow, est, l_min)
            if NARROW.intersection(estimators):
                exp.narrow_scales()
        except ValueError as exc:
            raise ConfigError(f"experiment L={L}, alpha0={alpha0}: {exc}") from None
        experiments.append(exp)
    return RunConfig(tuple(experiments))


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _provenance(seed, config) -> dict:
    return {"needlet_whittle": __version__, "seed": seed, "config": config}


def cmd_table1(args) -> int:
    Bs = [parse_real(b, "--B") for b in args.B]
    alphas = [parse_real(a, "--alpha0") for a in args.alpha0]
    if not Bs or not alphas:
        raise ConfigError("table1 needs at least one B and one alpha0")
    if any(not b > 1 for b in Bs):
        raise ConfigError("--B: every value must be > 1")
    rows = []
    for B, a in itertools.product(Bs, alphas):
        c = variance_constants(B, a, quad_tol=args.quad_tol)
        rows.append({"B": B, "alpha0": a, "sigma2": c.sigma2, "tau2": c.tau2, "i0": c.i0,
                     "rho2": c.rho2, "psi": c.psi, "d": c.d, "b2d": c.b2d})
    out = sys.stdout
    fh = None
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        fh = out = (Path(args.out) / "table1.csv").open("w", newline="")
        meta = {"grid": {"B": Bs, "alpha0": alphas}, "quad_tol": args.quad_tol}
        for k, v in _provenance(None, meta).items():
            out.write(f"# {k}: {v if isinstance(v, str) else json.dumps(v)}\n")
    try:
        if args.human:
            out.write("   B       alpha0  sigma2  tau2   I0     rho2    Psi    B2D\n")
            for r in rows:
                out.write(f"{r['B']:<10.6g}{r['alpha0']:<8g}{r['sigma2']:<8.2f}{r['tau2']:<7.2f}"
                          f"{r['i0']:<7.2f}{r['rho2']:<8.2f}{r['psi']:<7.2f}{r['b2d']:.3g}\n")
        else:
            writer = csv.DictWriter(out, fieldnames=TABLE1_FIELDS)
            writer.writeheader()
            for r in rows:
                writer.writerow({k: repr(float(v)) for k, v in r.items()})
    finally:
        if fh is not None:
            fh.close()
    return 0


def cmd_simulate(args) -> int:
    raw = load_config(args.config)
    run = resolve_config(raw, seed=args.seed)
    resolved = run.to_dict()
    if args.dry_run:
        json.dump(resolved, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0
    if not args.out:
        raise ConfigError("simulate needs --out DIR")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = _provenance(resolved["seed"], resolved)
    summary, groups = [], []
    for exp in run.experiments:
        records = run_experiment(exp, workers=args.threads)
        constants = variance_constants(exp.B, exp.model.alpha0)
        key = {"L": exp.L, "alpha0": exp.model.alpha0}
        groups.append((key, records))
        for row in summarize(records, exp, constants):
            summary.append({**key, **row.to_dict()})
        print(f"L={exp.L} alpha0={exp.model.alpha0:g}: {exp.replications} replications done",
              file=sys.stderr)
    write_replications_csv(groups, out / "replications.csv", header)
    write_summary_csv(summary, out / "summary.csv", header)
    (out / "manifest.json").write_text(json.dumps(
        {**header, "files": ["summary.csv", "replications.csv"]}, indent=2))
    return 0


def cmd_estimate(args) -> int:
    B = parse_real(args.B, "--B")
    if not B > 1:
        raise ConfigError("--B must be > 1")
    try:
        spec = read_spectrum_csv(args.spectrum)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    config = EstimatorConfig(opt_tol=args.opt_tol)
    try:
        bands = BandDecomposition(B, spec.L, spec.l_min)
    except ValueError as exc:
        raise ConfigError(f"insufficient multipole range: {exc}") from None
    if bands.j_max - bands.j_min < 1:
        raise ConfigError(f"insufficient multipole range: need at least two needlet bands below L={spec.L}")
    full = estimate_needlet(spec, B, config, bands)
    L_eff = B ** (bands.j_max + 1)
    report = {
        "B": B,
        "L": spec.L,
        "J_L": bands.j_max,
        "needlet_full": full.to_dict(),
    }
    try:
        const = variance_constants(B, full.alpha_hat)
        report["predicted_sd"] = math.sqrt(const.b2d) / L_eff
    except ValueError:
        report["predicted_sd"] = None
    if args.narrow_J1 is not None or args.narrow_L1 is not None:
        J1 = args.narrow_J1 if args.narrow_J1 is not None else scale_for_multipole(args.narrow_L1, B)
        from .bandsim import band_powers

        report["needlet_narrow"] = estimate_narrow_band(band_powers(spec, bands), bands, J1, config).to_dict()
    if args.fourier:
        report["fourier_full"] = fourier_whittle_estimate(spec, config).to_dict()
        if args.narrow_L1 is not None:
            report["fourier_narrow"] = fourier_whittle_estimate(
                spec, config.with_ells(args.narrow_L1, spec.L)).to_dict()
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_dump_spectrum(args) -> int:
    if args.config:
        raw = load_config(args.config)
        model_data = dict(raw.get("model", {}))
        if "alpha0" in raw:
            model_data["alpha0"] = _as_list(raw["alpha0"])[0]
        L = _as_list(raw.get("L", args.L))[0]
        seed = raw.get("seed", 0) if args.seed is None else args.seed
    else:
        if args.alpha0 is None or args.L is None:
            raise ConfigError("dump-spectrum needs --config or both --alpha0 and --L")
        model_data = {"alpha0": parse_real(args.alpha0, "--alpha0"), "G0": args.G0}
        if args.kappa:
            model_data.update(form="kappa", kappa=args.kappa)
        L = args.L
        seed = 0 if args.seed is None else args.seed
    try:
        model = SpectrumModel.from_dict(model_data)
    except (ModelError, TypeError) as exc:
        raise ConfigError(f"model: {exc}") from None
    spec = sample_empirical_spectrum(model, L, seed, args.rep)
    header = _provenance(seed, {"model": model.to_dict(), "L": L, "replication": args.rep})
    header = {k: v if isinstance(v, str) else json.dumps(v) for k, v in header.items()}
    if args.out:
        path = Path(args.out)
        if path.is_dir():
            path = path / "spectrum.csv"
        write_spectrum_csv(spec, path, header)
    else:
        import tempfile

        with tempfile.NamedTemporaryFile("r+", suffix=".csv") as tmp:
            write_spectrum_csv(spec, tmp.name, header)
            sys.stdout.write(Path(tmp.name).read_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="needlet-whittle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table1", help="asymptotic constants on a (B, alpha0) grid")
    t.add_argument("--B", nargs="*", default=list(DEFAULT_B_GRID), help="e.g. 2 '2^(1/4)'")
    t.add_argument("--alpha0", nargs="*", default=list(DEFAULT_ALPHA_GRID))
    t.add_argument("--quad-tol", type=float, default=1e-10)
    t.add_argument("--human", action="store_true", help="rounded table instead of CSV")
    t.add_argument("--out", metavar="DIR")
    t.set_defaults(func=cmd_table1)

    s = sub.add_parser("simulate", help="Monte Carlo replications from a JSON config")
    s.add_argument("--config", required=True, metavar="PATH")
    s.add_argument("--out", metavar="DIR")
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--dry-run", action="store_true")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate (alpha0, G0) from a spectrum CSV")
    e.add_argument("spectrum", metavar="CSV")
    e.add_argument("--B", required=True)
    e.add_argument("--narrow-J1", type=int)
    e.add_argument("--narrow-L1", type=int)
    e.add_argument("--fourier", action="store_true", help="also run the Fourier baseline")
    e.add_argument("--opt-tol", type=float, default=1e-6)
    e.set_defaults(func=cmd_estimate)

    d = sub.add_parser("dump-spectrum", help="write one simulated empirical spectrum as CSV")
    d.add_argument("--config", metavar="PATH")
    d.add_argument("--alpha0")
    d.add_argument("--G0", type=float, default=1.0)
    d.add_argument("--kappa", type=float, default=0.0)
    d.add_argument("--L", type=int)
    d.add_argument("--seed", type=int)
    d.add_argument("--rep", type=int, default=0)
    d.add_argument("--out", metavar="PATH")
    d.set_defaults(func=cmd_dump_spectrum)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"needlet-whittle: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, ValueError, OSError) as exc:
        print(f"needlet-whittle: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
