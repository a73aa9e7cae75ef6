"""Command-line entry point.

Subcommands ``carpet``, ``ifs``, ``percolation``, ``moran``, ``tails`` and
``verify`` read a JSON payload (``--config``), compute spectra and write CSV
and JSON files into ``--out``.  ``--figure NAME`` writes the plot data of a
built-in figure instead.

Exit status: 0 success, 2 invalid input, 3 resource cap hit, 4 a
verification check failed.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import carpets, moran, percolation, selfsimilar, tail_density
from .errors import ResourceError, SpectraError, ValidationError
from .figures import FIG3_LEFT, FIGURES, emit_figure_data
from .spectrum_core import SpectrumCurve, ThetaGrid, empirical_spectrum, fmt, round_sig

EXIT_OK, EXIT_INVALID, EXIT_RESOURCE, EXIT_VERIFY = 0, 2, 3, 4
SUBCOMMANDS = ("carpet", "ifs", "percolation", "moran", "tails", "verify")


@dataclass
class RunConfig:
    subcommand: str | None
    payload: dict | None = None
    grid: int | None = None
    out: Path = Path(".")
    seed: int = 0
    figure: str | None = None
    options: dict = field(default_factory=dict)
    caps: dict = field(default_factory=dict)


@dataclass
class RunResult:
    status: int
    files: dict
    message: str = ""


def _clean(obj):
    """Round floats to 12 significant digits and make values JSON-friendly."""
    if isinstance(obj, Fraction):
        return {"value": round_sig(float(obj)), "exact": f"{obj.numerator}/{obj.denominator}"}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return round_sig(x) if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _dump(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _grid(config: RunConfig, default: int = 999) -> ThetaGrid:
    return ThetaGrid.uniform(config.grid or default)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- subcommands ----------------------------------------------------------------------

def _need_payload(config: RunConfig) -> dict:
    if config.payload is None:
        raise ValidationError(f"'{config.subcommand}' needs --config")
    if not isinstance(config.payload, dict):
        raise ValidationError("configuration must be a JSON object")
    return config.payload


def _carpet(config: RunConfig) -> dict:
    spec = carpets.CarpetSpec.from_dict(_need_payload(config))
    grid = _grid(config)
    up, low = carpets.assouad_curve(spec, grid), carpets.lower_curve(spec, grid)
    summary = carpets.carpet_dimensions(spec).to_dict()
    summary["transition"] = spec.ratio
    return {
        "summary.json": _dump(summary),
        "assouad.csv": up.to_csv(),
        "lower.csv": low.to_csv(),
        "assouad.json": up.to_json() + "\n",
        "lower.json": low.to_json() + "\n",
    }


def _ifs(config: RunConfig) -> dict:
    payload = _need_payload(config)
    ifs = selfsimilar.SimilarIFS.from_dict(payload)
    grid = _grid(config)
    s = selfsimilar.similarity_exponent(ifs)
    upper_box = float(payload.get("upper_box", min(s, 1.0)))
    report = {"s": s, "pressure_at_s": selfsimilar.pressure(ifs, s), "upper_box": upper_box}
    files = {}
    t_opt = config.options.get("t")
    if t_opt is not None:
        if t_opt == "estimate":
            radii = np.geomspace(1e-2, 1e-5, 20)
            est = selfsimilar.estimate_t(
                ifs, s, radii, samples=16, seed=config.seed, cap=config.caps.get("word_cap", selfsimilar.DEFAULT_WORD_CAP)
            )
            t = min(est.value, upper_box)
            report["t_source"] = "estimate (finite-scale heuristic)"
        else:
            t = float(t_opt)
            report["t_source"] = "user"
        params = selfsimilar.OverlapBoundParams(s=s, t=t, upper_box=upper_box)
        report["t"] = t
        region = selfsimilar.improvement_region(params)
        report["improvement_region"] = list(region) if region else None
        files["bound.csv"] = selfsimilar.overlap_bound_curve(params, grid).to_csv()
    hyp = config.options.get("assert")
    if hyp:
        curve = selfsimilar.wsp_spectrum(
            upper_box, weak_separation=hyp == "wsp", no_superexp_concentration=hyp == "no-sec", grid=grid
        )
        report["asserted"] = hyp
        files["spectrum.csv"] = curve.to_csv()
    files["ifs.json"] = _dump(report)
    return files


def _percolation(config: RunConfig) -> dict:
    o = config.options
    params = percolation.PercolationParams(int(o["n"]), int(o["d"]), float(o["p"]))
    est = percolation.empirical_spectrum_mc(params, float(o["theta"]), int(o["depth"]), int(o["trials"]), config.seed)
    rows = "trial_index,value\n" + "".join(f"{i},{fmt(v)}\n" for i, v in enumerate(est.per_trial))
    return {"percolation.json": _dump(est.to_dict()), "per_trial.csv": rows}


def _moran(config: RunConfig) -> dict:
    payload = _need_payload(config)
    K = int(payload.get("K", 2000))
    tail = float(payload.get("tail_fraction", moran.TAIL_FRACTION))
    grid = _grid(config, default=19)
    length = int(math.ceil(K / min(grid))) + 2
    cap = config.caps.get("max_length", 5_000_000)
    if length > cap:
        raise ResourceError(f"sequence length {length} exceeds the cap {cap}; use a coarser grid or smaller K")
    spec = moran.spec_from_dict(payload, length=length)
    up = [moran.assouad_spectrum_trunc(spec, th, K, tail).sup_tail for th in grid]
    low = [moran.lower_spectrum_trunc(spec, th, K, tail).inf_tail for th in grid]
    up_c = SpectrumCurve(grid, np.clip(up, 0, None), kind="assouad", closed_form=f"truncated at K={K}")
    low_c = SpectrumCurve(grid, np.clip(low, 0, None), kind="lower", closed_form=f"truncated at K={K}")
    return {
        "assouad.csv": up_c.to_csv(),
        "lower.csv": low_c.to_csv(),
        "moran.json": _dump({"K": K, "tail_fraction": tail, "assouad": up_c.to_dict(), "lower": low_c.to_dict()}),
    }


def _tails(config: RunConfig) -> dict:
    payload = _need_payload(config)
    X = tail_density.IntegerSet.from_dict(payload)
    K = int(payload.get("K", 1000))
    lams = [float(v) for v in payload.get("lambda", [2.0])]
    min_window = int(payload.get("min_window", max(1, K // 10)))
    up_a, lo_a = tail_density.asymptotic_densities(X, K)
    hi_b, lo_b = tail_density.banach_densities(X, int(math.floor(max(lams) * K)), min_window)
    out = {
        "K": K,
        "asymptotic": {"upper": up_a.sup_tail, "lower": lo_a.inf_tail},
        "banach": {"upper": hi_b, "lower": lo_b, "min_window": min_window},
        "tail": [],
    }
    for lam in lams:
        up, lo = tail_density.tail_densities(X, lam, K)
        out["tail"].append({"lambda": lam, "upper": up.sup_tail, "lower": lo.inf_tail})
    if X.exact_density is not None:
        out["exact"] = X.exact_density
    report = tail_density.check_taildensity_props(X, lams, K, windows=10_000, seed=config.seed)
    out["inequality_check"] = {"ok": report.ok, "violations": report.violations}
    return {"tails.json": _dump(out)}


# -- verification ---------------------------------------------------------------------------

def _verify_carpet(config: RunConfig) -> dict:
    spec = carpets.CarpetSpec.from_dict(config.payload) if config.payload else FIG3_LEFT
    theta = 0.5
    scales = [2.0 ** -k for k in range(8, 17)]
    word = carpets.extremal_word(spec)
    est = empirical_spectrum(carpets.carpet_oracle(spec, config.caps.get("level_cap", carpets.DEFAULT_LEVEL_CAP)), theta, scales, [word])
    symbolic = [math.log(carpets.symbolic_cover_count(spec, word, R, theta)) for R in scales]
    x = (1 - 1 / theta) * np.log(scales)
    sym_slope = float(np.polyfit(x, symbolic, 1)[0])
    exact = carpets.assouad_spectrum(spec, theta)
    ok = abs(est.value - exact) <= 0.05
    return {"check": "carpet", "theta": theta, "closed_form": exact, "oracle_slope": est.value,
            "symbolic_slope": sym_slope, "tolerance": 0.05, "passed": ok}


def _verify_gw(config: RunConfig) -> dict:
    pmf = percolation.binomial_pmf(2, Fraction(4, 5))
    table = percolation.gw_moment_table(percolation.OffspringMoments.from_pmf(pmf, 5), 5)
    worst = 0.0
    for depth in range(6):
        law = percolation.exact_gw_distribution(pmf, depth)
        for k in range(1, 6):
            worst = max(worst, abs(float(percolation.pmf_moment(law, k) / table.moment(k, depth) - 1)))
    return {"check": "gw", "max_relative_error": worst, "tolerance": 1e-9, "passed": worst <= 1e-9}


def _verify_pressure(config: RunConfig) -> dict:
    ifs = selfsimilar.SimilarIFS.from_maps([(1 / 3, 0.0), (1 / 3, 2 / 3)])
    err = abs(selfsimilar.similarity_exponent(ifs) - math.log(2) / math.log(3))
    return {"check": "pressure", "error": err, "tolerance": 1e-10, "passed": err <= 1e-10}


def _verify_moran(config: RunConfig) -> dict:
    K, rows, ok = 2000, [], True
    for theta in (0.2, 0.5, 0.8):
        seq = moran.recipe_sequence(0.5, 2.0, 8, int(K / theta) + 2)
        est = moran.assouad_spectrum_trunc(moran.dyadic_spec(seq), theta, K, tail_fraction=1 - 1 / 8).sup_tail
        exact = moran.recipe_spectrum(0.5, 2.0, theta)
        rows.append({"theta": theta, "estimate": est, "closed_form": exact})
        ok &= abs(est - exact) <= 0.05
    return {"check": "moran", "K": K, "rows": rows, "tolerance": 0.05, "passed": bool(ok)}


VERIFIERS = {"carpet": _verify_carpet, "gw": _verify_gw, "pressure": _verify_pressure, "moran": _verify_moran}


def _verify(config: RunConfig) -> dict:
    target = config.options.get("target", "all")
    names = list(VERIFIERS) if target == "all" else [target]
    checks = [VERIFIERS[name](config) for name in names]
    return {"report.json": _dump({"checks": checks, "passed": all(c["passed"] for c in checks)})}


HANDLERS = {
    "carpet": _carpet,
    "ifs": _ifs,
    "percolation": _percolation,
    "moran": _moran,
    "tails": _tails,
    "verify": _verify,
}


def run(config: RunConfig) -> RunResult:
    """Compute every output in memory, then write the files atomically."""
    try:
        if config.figure:
            files = emit_figure_data(config.figure, _grid(config))
        elif config.subcommand in HANDLERS:
            files = HANDLERS[config.subcommand](config)
        else:
            raise ValidationError("give a subcommand or --figure")
    except ResourceError as exc:
        return RunResult(EXIT_RESOURCE, {}, str(exc))
    except (SpectraError, KeyError, TypeError, ValueError) as exc:
        return RunResult(EXIT_INVALID, {}, f"{type(exc).__name__}: {exc}")
    for name, text in files.items():
        write_atomic(config.out / name, text)
    status = EXIT_OK
    if config.subcommand == "verify" and not config.figure:
        if not json.loads(files["report.json"])["passed"]:
            status = EXIT_VERIFY
    return RunResult(status, files)


# -- argument parsing ---------------------------------------------------------------------------

def _common(top: bool) -> argparse.ArgumentParser:
    """Shared flags; on subcommands they default to SUPPRESS so they never mask top-level values."""
    common = argparse.ArgumentParser(add_help=False)

    def default(value):
        return value if top else argparse.SUPPRESS

    common.add_argument("--config", type=Path, default=default(None), help="JSON payload for the subcommand")
    common.add_argument("--out", type=Path, default=default(Path(".")), help="output directory")
    common.add_argument("--grid", type=int, default=default(None), help="number of theta grid points")
    common.add_argument("--seed", type=int, default=default(0), help="random seed (unsigned 64-bit)")
    common.add_argument("--figure", choices=FIGURES, default=default(None), help="write plot data for a built-in figure")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(top=False)
    parser = argparse.ArgumentParser(prog="assouad-spectra", parents=[_common(top=True)], description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="subcommand")
    sub.add_parser("carpet", parents=[common], help="Bedford-McMullen carpet dimensions and spectra")
    ifs = sub.add_parser("ifs", parents=[common], help="self-similar sets with overlaps")
    ifs.add_argument("--theta-grid", type=int, dest="theta_grid", help="alias for --grid")
    ifs.add_argument("--t", dest="t", help="exponent t, or 'estimate'")
    ifs.add_argument("--assert", dest="assert_", choices=("wsp", "no-sec"), help="asserted separation hypothesis")
    perc = sub.add_parser("percolation", parents=[common], help="Mandelbrot percolation Monte Carlo")
    perc.add_argument("--n", type=int, default=2)
    perc.add_argument("--d", type=int, default=2)
    perc.add_argument("--p", type=float, default=0.7)
    perc.add_argument("--depth", type=int, default=12)
    perc.add_argument("--trials", type=int, default=200)
    perc.add_argument("--theta", type=float, default=0.5)
    sub.add_parser("moran", parents=[common], help="truncated Moran spectra")
    sub.add_parser("tails", parents=[common], help="tail, asymptotic and Banach densities")
    ver = sub.add_parser("verify", parents=[common], help="oracle cross-checks")
    ver.add_argument("target", nargs="?", default="all", choices=["all", *VERIFIERS])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    payload = None
    if args.config is not None:
        try:
            payload = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read configuration {args.config}: {exc}") from None
    caps = payload.pop("caps", {}) if isinstance(payload, dict) else {}
    options = {}
    for key in ("n", "d", "p", "depth", "trials", "theta", "t", "target"):
        if getattr(args, key, None) is not None:
            options[key] = getattr(args, key)
    if getattr(args, "assert_", None):
        options["assert"] = args.assert_
    grid = getattr(args, "theta_grid", None) or args.grid
    return RunConfig(
        subcommand=args.subcommand,
        payload=payload,
        grid=grid,
        out=args.out,
        seed=args.seed,
        figure=args.figure,
        options=options,
        caps=caps,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    result = run(config)
    if result.message:
        print(f"error: {result.message}", file=sys.stderr)
    for name in sorted(result.files):
        print(config.out / name)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
