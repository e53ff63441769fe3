"""Command-line entry point: ``vibspec <subcommand> [options]``.

Every run writes one data file plus ``<out>.meta.json``. Outputs carry no
timestamps or worker counts, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from vibspec import __version__
from vibspec.analytic import (
    AnalyticDensity,
    BranchAmbiguity,
    DomainError,
    MarchenkoPastur,
    QuadratureFailure,
    low_frequency_coefficient,
    upper_edge,
)
from vibspec.eigensolve import EigenError
from vibspec.ensemble import ModelParams
from vibspec.pendulum import PendulumConfig, uniform_config
from vibspec.statistics import (
    DEFAULT_HEADROOM,
    DensityEstimate,
    EmptyOverlap,
    InsufficientData,
    Pendulum,
    RandomModel,
    compare,
    run_ensemble,
    tabulate,
)
from vibspec.thermo import curve_to_csv, thermo_curve

SEED_ENV = "VIBSPEC_SEED"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


NUMERIC_ERRORS = (EigenError, QuadratureFailure, BranchAmbiguity, InsufficientData, EmptyOverlap, FloatingPointError)


# -- parsing ----------------------------------------------------------------

def _workers(text: str):
    if text == "auto":
        return "auto"
    try:
        w = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("workers must be an integer or 'auto'") from None
    if w < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return w


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common(p: argparse.ArgumentParser, ensemble: bool = False) -> None:
    # defaults are None so a config file can fill them; flags win
    p.add_argument("--config", type=Path, help="JSON file with run settings")
    p.add_argument("--out", type=Path, help="output data path")
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--bins", type=_positive_int)
    if ensemble:
        p.add_argument("--seed", type=int, help=f"RNG seed (falls back to ${SEED_ENV})")
        p.add_argument("--samples", type=_positive_int)
        p.add_argument("--workers", type=_workers)


def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("random model")
    g.add_argument("--n", type=_positive_int)
    g.add_argument("--m0", type=float)
    g.add_argument("--sigma-m", type=float)
    g.add_argument("--sigma-k", type=float)
    g.add_argument("--field", choices=["real", "complex"])


def _pendulum_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pendulum")
    g.add_argument("--segments", type=_positive_int, help="segment count N of a uniform pendulum")
    g.add_argument("--charge-scale", type=float)
    g.add_argument("--gravity", type=float)
    g.add_argument("--total-length", type=float)
    g.add_argument("--total-mass", type=float)
    g.add_argument("--pendulum-config", type=Path, help="JSON with explicit lengths/masses/charges")
    g.add_argument("--spread", type=float, help="relative disorder spread s (0 = uniform)")
    g.add_argument("--scale-n2", action="store_true", default=None, help="divide eigenvalues by N^2")


def _density_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", type=float)
    p.add_argument("--omega0-sq", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vibspec", description="Normal-mode spectra of pendulum chains and random matrix pairs.")
    ap.add_argument("--version", action="version", version=f"vibspec {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pendulum-spectrum", help="eigenvalue density of a charged pendulum")
    _common(p, ensemble=True)
    _pendulum_flags(p)
    p.add_argument("--overlay", choices=["none", "mp"], default=None, help="add bin-averaged Marchenko-Pastur column")

    p = sub.add_parser("rmt-density", help="Monte Carlo density of the random matrix model")
    _common(p, ensemble=True)
    _model_flags(p)
    p.add_argument("--overlay", choices=["none", "analytic"], default=None)

    p = sub.add_parser("analytic", help="tabulate the large-N density or band edges")
    _common(p)
    _density_flags(p)
    p.add_argument("--table", choices=["density", "edge"], default=None)
    p.add_argument("--points", type=_positive_int)
    p.add_argument("--mu-min", type=float)
    p.add_argument("--mu-max", type=float)

    p = sub.add_parser("participation", help="participation ratio vs w^2")
    _common(p, ensemble=True)
    _model_flags(p)

    p = sub.add_parser("specific-heat", help="phonon energy and specific heat vs beta")
    _common(p)
    _density_flags(p)
    p.add_argument("--hbar", type=float)
    p.add_argument("--beta-min", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--points", type=_positive_int)

    p = sub.add_parser("compare", help="distances between an estimate and a reference")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=["json"], default=None)
    p.add_argument("--estimate", type=Path, help="density file written by this tool")
    p.add_argument("--reference", help="'analytic', 'mp', or a second density file")
    _density_flags(p)
    p.add_argument("--mp-scale", type=float, help="Marchenko-Pastur variance scale (default 1)")
    p.add_argument("--calibrate-edge", action="store_true", default=None,
                   help="rescale the estimate so its top edge matches the reference edge")
    return ap


def resolve(args: argparse.Namespace) -> dict:
    """Merge config-file values under explicit flags."""
    cfg = {}
    if getattr(args, "config", None) is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    flat = {}
    for section in ("model", "pendulum"):
        sec = cfg.get(section, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        flat.update({k.replace("-", "_"): v for k, v in sec.items()})
    flat.update({k.replace("-", "_"): v for k, v in cfg.items() if k not in ("model", "pendulum")})
    for k, v in vars(args).items():
        if v is not None:
            flat[k] = v
    return flat


def resolve_seed(opts: dict) -> int:
    if opts.get("seed") is not None:
        return int(opts["seed"])
    env = os.environ.get(SEED_ENV)
    if env is None:
        raise ConfigError(f"no seed given: pass --seed or set ${SEED_ENV}")
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from None


def model_params(opts: dict) -> ModelParams:
    if opts.get("n") is None or opts.get("m0") is None:
        raise ConfigError("random model needs n and m0")
    return ModelParams(
        n=int(opts["n"]),
        m0=float(opts["m0"]),
        sigma_m=float(opts.get("sigma_m", 1.0)),
        sigma_k=float(opts.get("sigma_k", 1.0)),
        field=opts.get("field", "complex"),
    )


def pendulum_config(opts: dict) -> PendulumConfig:
    path = opts.get("pendulum_config")
    if path is not None:
        try:
            return PendulumConfig.from_json(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read pendulum config {path}: {exc}") from None
    if opts.get("segments") is None:
        raise ConfigError("pendulum needs --segments or --pendulum-config")
    return uniform_config(
        int(opts["segments"]),
        total_length=float(opts.get("total_length", 1.0)),
        total_mass=float(opts.get("total_mass", 1.0)),
        charge_scale=float(opts.get("charge_scale", 0.0)),
        gravity=float(opts.get("gravity", 1.0)),
    )


def analytic_density(opts: dict) -> AnalyticDensity:
    if opts.get("mu") is None:
        if opts.get("m0") is not None:
            return AnalyticDensity.from_params(model_params({**opts, "n": opts.get("n", 1)}))
        raise ConfigError("need --mu (or m0 / sigma_m in the config)")
    return AnalyticDensity(float(opts["mu"]), float(opts.get("omega0_sq", 1.0)))


# -- output -----------------------------------------------------------------

def _provenance(command: str, opts: dict, extra: dict) -> dict:
    keep = {k: v for k, v in opts.items() if k not in ("config", "out", "format", "workers", "command")}
    prov = {"command": command, "version": __version__, "options": keep}
    prov.update(extra)
    return json.loads(json.dumps(prov, default=str, sort_keys=True))


def _table_csv(columns: dict, provenance: dict) -> str:
    buf = io.StringIO()
    for k, v in sorted(provenance.items()):
        buf.write(f"# {k}={json.dumps(v, sort_keys=True)}\n")
    buf.write(",".join(columns) + "\n")
    for row in zip(*columns.values()):
        buf.write(",".join(f"{float(v):.17g}" for v in row) + "\n")
    return buf.getvalue()


def _table_json(columns: dict, provenance: dict) -> str:
    data = {"provenance": provenance, "columns": {k: [float(v) for v in c] for k, c in columns.items()}}
    return json.dumps(data, indent=1, sort_keys=True)


def write_outputs(opts: dict, command: str, columns: dict, provenance: dict, text: str | None = None) -> Path:
    fmt = opts.get("format", "csv")
    out = Path(opts.get("out") or f"{command}.{fmt}")
    if text is None:
        text = _table_csv(columns, provenance) if fmt == "csv" else _table_json(columns, provenance)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        Path(f"{out}.meta.json").write_text(json.dumps(provenance, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from None
    return out


def _density_output(opts, command, est: DensityEstimate, extra_cols: dict, provenance: dict) -> Path:
    est.metadata = {**est.metadata, "provenance": provenance}
    if opts.get("format", "csv") == "json":
        data = json.loads(est.to_json())
        data.update({k: [float(v) for v in c] for k, c in extra_cols.items()})
        text = json.dumps(data, indent=1, sort_keys=True)
    else:
        text = est.to_csv(extra_cols)
    return write_outputs(opts, command, {}, provenance, text)


# -- subcommands ------------------------------------------------------------

def _edges(opts: dict, hi: float | None = None):
    bins = int(opts.get("bins", 200))
    if hi is None:
        return bins
    return np.linspace(0.0, hi, bins + 1)


def cmd_pendulum_spectrum(opts: dict) -> Path:
    cfg = pendulum_config(opts)
    spread = float(opts.get("spread", 0.0))
    # a uniform pendulum draws no random numbers, so it needs no seed
    seed = resolve_seed(opts) if spread > 0 else int(opts.get("seed", 0))
    samples = int(opts.get("samples", 1))
    source = Pendulum(cfg, spread, bool(opts.get("scale_n2", False)))
    res = run_ensemble(source, samples, seed, bins=_edges(opts), workers=opts.get("workers", 1))
    est = res.density
    extra = {}
    if opts.get("overlay", "none") == "mp":
        extra["marchenko_pastur"] = tabulate(MarchenkoPastur(), est.bin_edges).heights
    prov = _provenance("pendulum-spectrum", opts, {"seed": seed, "samples": samples, "source": source.describe()})
    return _density_output(opts, "pendulum-spectrum", est, extra, prov)


def cmd_rmt_density(opts: dict) -> Path:
    seed = resolve_seed(opts)
    params = model_params(opts)
    samples = int(opts.get("samples", 100))
    overlay = opts.get("overlay", "none") == "analytic"
    ref = AnalyticDensity.from_params(params) if overlay else None
    bins = _edges(opts, DEFAULT_HEADROOM * ref.support[1]) if ref else _edges(opts)
    res = run_ensemble(RandomModel(params), samples, seed, bins=bins, workers=opts.get("workers", 1))
    extra = {"analytic": tabulate(ref, res.density.bin_edges).heights} if ref else {}
    prov = _provenance("rmt-density", opts, {"seed": seed, "samples": samples, "params": params.to_dict()})
    return _density_output(opts, "rmt-density", res.density, extra, prov)


def cmd_analytic(opts: dict) -> Path:
    table = opts.get("table", "density")
    points = int(opts.get("points", 1000))
    if table == "edge":
        lo, hi = float(opts.get("mu_min", 1e-3)), float(opts.get("mu_max", 1e4))
        if not 0 < lo < hi:
            raise ConfigError("need 0 < mu_min < mu_max")
        mus = np.geomspace(lo, hi, points)
        cols = {
            "mu": mus,
            "x1": np.array([upper_edge(m) for m in mus]),
            "c": np.array([low_frequency_coefficient(m) for m in mus]),
        }
        prov = _provenance("analytic", opts, {})
        return write_outputs(opts, "analytic", cols, prov)
    dens = analytic_density(opts)
    lo, hi = dens.support
    w2 = np.linspace(lo, hi, points + 2)[1:-1]
    cols = {"omega_sq": w2, "rho": dens.pdf(w2)}
    prov = _provenance("analytic", opts, {
        "mu": dens.mu,
        "omega0_sq": dens.omega0_sq,
        "x1": dens.x1,
        "c": dens.low_frequency_coefficient(),
        "normalization_check": dens.normalization_check,
    })
    return write_outputs(opts, "analytic", cols, prov)


def cmd_participation(opts: dict) -> Path:
    seed = resolve_seed(opts)
    params = model_params(opts)
    samples = int(opts.get("samples", 100))
    res = run_ensemble(
        RandomModel(params), samples, seed, want_vectors=True, workers=opts.get("workers", 1),
        pbins=int(opts.get("bins", 20)),
    )
    c = res.participation
    cols = {
        "omega_sq_lo": c.bin_edges[:-1],
        "omega_sq_hi": c.bin_edges[1:],
        "p": c.p,
        "stderr": c.stderr,
        "count": c.counts,
    }
    prov = _provenance("participation", opts, {
        "seed": seed, "samples": samples, "params": params.to_dict(), "mean_p": c.mean(),
    })
    return write_outputs(opts, "participation", cols, prov)


def cmd_specific_heat(opts: dict) -> Path:
    dens = analytic_density(opts)
    hbar = float(opts.get("hbar", 1.0))
    lo, hi = float(opts.get("beta_min", 1e-2)), float(opts.get("beta_max", 1e3))
    if not 0 < lo < hi or hbar <= 0:
        raise ConfigError("need 0 < beta_min < beta_max and hbar > 0")
    betas = np.geomspace(lo, hi, int(opts.get("points", 61)))
    pts = thermo_curve(betas, dens, hbar)
    header = {"mu": dens.mu, "hbar": hbar, "omega0_sq": dens.omega0_sq}
    prov = _provenance("specific-heat", opts, header)
    cols = {
        "beta": betas,
        "energy_per_mode": [p.energy_per_mode for p in pts],
        "cv_per_mode": [p.cv_per_mode for p in pts],
    }
    if opts.get("format", "csv") == "csv":
        meta = {k: json.dumps(v, sort_keys=True) for k, v in sorted(prov.items())}
        return write_outputs(opts, "specific-heat", cols, prov, curve_to_csv(pts, meta))
    return write_outputs(opts, "specific-heat", cols, prov)


def load_density(path) -> DensityEstimate:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        if text.lstrip().startswith("{"):
            return DensityEstimate.from_json(text)
        return DensityEstimate.from_csv(text)
    except (ValueError, KeyError, IndexError) as exc:
        raise ConfigError(f"{path} is not a density file: {exc}") from None


def cmd_compare(opts: dict) -> Path:
    if opts.get("estimate") is None or opts.get("reference") is None:
        raise ConfigError("compare needs --estimate and --reference")
    est = load_density(opts["estimate"])
    ref_spec = str(opts["reference"])
    if ref_spec == "analytic":
        ref = analytic_density(opts)
    elif ref_spec == "mp":
        ref = MarchenkoPastur(float(opts.get("mp_scale", 1.0)))
    else:
        ref = load_density(ref_spec)
    scale = 1.0
    if opts.get("calibrate_edge"):
        top = est.metadata.get("max_eigenvalue")
        if top is None:
            top = est.bin_edges[np.nonzero(est.heights)[0][-1] + 1]
        scale = ref.support[1] / top
        est = DensityEstimate(est.bin_edges * scale, est.heights / scale, est.total_eigenvalues, est.samples,
                              est.counts, est.metadata)
    report = compare(est, ref)
    report["edge_scale"] = scale
    prov = _provenance("compare", opts, {})
    report["provenance"] = prov
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    opts = {**opts, "format": "json"}
    return write_outputs(opts, "compare", {}, prov, text)


COMMANDS = {
    "pendulum-spectrum": cmd_pendulum_spectrum,
    "rmt-density": cmd_rmt_density,
    "analytic": cmd_analytic,
    "participation": cmd_participation,
    "specific-heat": cmd_specific_heat,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        opts = resolve(args)
        out = COMMANDS[args.command](opts)
    except NUMERIC_ERRORS as exc:
        print(f"vibspec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DomainError, ValueError, TypeError, KeyError) as exc:
        print(f"vibspec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
