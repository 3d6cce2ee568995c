"""``lagmmse`` command-line front end.

Units everywhere: time in the unit implied by the OU rate alpha (1/time),
SNR as an intensity per unit time, variances in signal units squared,
information in nats.

Exit status: 0 success, 1 failed assertion or numerical failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import io as lio
from .errors import AssertionFailed, InsufficientData, InvalidParameter, LagMmseError

UNITS = ("Units: time in the unit implied by alpha; SNR is an intensity per unit time; "
         "variances are in signal units squared.")


@dataclass
class CommandResult:
    summary: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    columns: list = field(default_factory=list)

    @property
    def tabular(self) -> bool:
        return bool(self.columns)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidParameter("arguments", message)


def _grid(text: str) -> np.ndarray:
    return lio.parse_grid(text)


def _mc_args(p, paths_default: int, step_default: float = 1e-3):
    p.add_argument("--seed", type=int, default=0, help="base seed of the counter-based streams")
    p.add_argument("--paths", "--mc-samples", dest="paths", type=int, default=paths_default,
                   help="independent MC replicas (0 skips simulation where allowed)")
    p.add_argument("--step", type=float, default=step_default,
                   help="simulation time step (time units)")
    p.add_argument("--path-time", type=float, default=200.0,
                   help="length of each long OU path after burn-in (time units)")


def _mc_config(args):
    from .sim import McConfig

    return McConfig(seed=args.seed, paths=args.paths, step=args.step, path_time=args.path_time,
                    sample_cap=max(args.paths, 1_000_000))


# ------------------------------------------------------------------ subcommands

def _ou(args):
    from .model import OuParams

    return OuParams(args.alpha, args.beta)


def _ou_args(p, snr=True):
    p.add_argument("--alpha", type=float, required=True, help="OU mean-reversion rate (1/time)")
    p.add_argument("--beta", type=float, default=1.0, help="OU diffusion amplitude")
    if snr:
        p.add_argument("--snr", type=float, required=True, help="channel SNR per unit time")


def setup_ou_curve(p):
    _ou_args(p)
    p.add_argument("--d-min", type=float, default=-5.0, help="smallest lookahead (time)")
    p.add_argument("--d-max", type=float, default=5.0, help="largest lookahead (time)")
    p.add_argument("--steps", type=int, default=101, help="number of grid points")
    p.add_argument("--d-grid", type=_grid, default=None,
                   help="explicit grid 'start:step:stop' or comma list (overrides min/max)")


def run_ou_curve(args) -> CommandResult:
    from .ou import lmmse_curve

    if args.d_grid is not None:
        d = args.d_grid
    else:
        if args.steps < 0:
            raise InvalidParameter("steps", "must be non-negative")
        d = np.linspace(args.d_min, args.d_max, args.steps) if args.steps else np.zeros(0)
    curve = lmmse_curve(_ou(args), args.snr, d).check()
    return CommandResult({"cmmse": curve.cmmse, "mmse": curve.mmse, "var0": curve.var0},
                         [{"d": a, "lmmse": b} for a, b in zip(curve.d, curve.values)],
                         ["d", "lmmse"])


def setup_tradeoff(p):
    _ou_args(p)
    p.add_argument("--d", type=float, required=True, help="lookahead (time); inf allowed")


def run_tradeoff(args) -> CommandResult:
    from .ou import tradeoff

    r = tradeoff(_ou(args), args.snr, args.d)
    return CommandResult({"gamma_star": r.gamma_star, "gamma_inf": r.gamma_inf,
                          "d_star": r.d_star})


def setup_mixture_bounds(p):
    p.add_argument("--alphas", type=lio.parse_list, required=True, help="comma list of OU rates")
    p.add_argument("--weights", type=lio.parse_list, required=True,
                   help="comma list of mixing weights (sum to 1)")
    p.add_argument("--snr", type=float, required=True, help="channel SNR per unit time")
    p.add_argument("--d-grid", type=_grid, default=_grid("0,0.25,0.5,1,2,inf"),
                   help="lookaheads (time); upper bound needs d >= 0")
    p.add_argument("--beta-grid", type=lio.parse_list, default=None,
                   help="assumed OU rates for the mismatched smoother")
    _mc_args(p, 0)


def run_mixture_bounds(args) -> CommandResult:
    from .mixture import gaussian_upper_bounds, mixture_lmmse, mixture_spectrum
    from .model import MixingMeasure
    from .spectral import rational_pipeline

    mix = MixingMeasure(args.alphas, args.weights)
    pipe = rational_pipeline(mixture_spectrum(mix), args.snr)
    d = np.asarray(args.d_grid, dtype=float)
    upper = [None] * d.size
    if args.paths:
        if np.any(d < 0):
            raise InvalidParameter("d-grid", "the mismatched upper bound needs d >= 0")
        upper = gaussian_upper_bounds(mix, args.snr, d, args.beta_grid, _mc_config(args))
    rows = []
    for i, x in enumerate(d):
        b = upper[i]
        rows.append({"d": x, "lower": mixture_lmmse(mix, args.snr, x), "gaussian": pipe.lmmse(x),
                     "upper": b.upper if b else math.nan,
                     "upper_stderr": b.upper_stderr if b else math.nan})
    return CommandResult({"var0": mix.var0, "gaussian_mmse": pipe.mmse,
                          "gaussian_cmmse": pipe.cmmse},
                         rows, ["d", "lower", "gaussian", "upper", "upper_stderr"])


def setup_spectral(p):
    p.add_argument("--spec", required=True,
                   help="process spec: JSON file, two-column CSV (omega,s_value) or inline JSON")
    p.add_argument("--snr", type=float, default=None, help="channel SNR (else taken from spec)")
    p.add_argument("--d-grid", type=_grid, default=_grid("0:0.25:5"), help="lookaheads (time)")
    p.add_argument("--numeric", action="store_true",
                   help="use the FFT cepstral pipeline even for rational spectra")
    p.add_argument("--grid-size", type=int, default=2 ** 16, help="FFT points (power of two)")
    p.add_argument("--omega-max", type=float, default=64.0, help="FFT band edge (rad/time)")
    p.add_argument("--summary", default=None, help="also write the JSON summary to this path")


def run_spectral(args) -> CommandResult:
    from .mixture import mixture_spectrum
    from .model import MixingMeasure, OuParams, RationalSpectrum, TabulatedSpectrum
    from .spectral import decay_rate, factorize_numeric, rational_pipeline

    spec, cfg = lio.load_spec(args.spec)
    snr = args.snr if args.snr is not None else cfg.get("snr")
    if snr is None:
        raise InvalidParameter("snr", "give --snr or an snr field in the spec")
    if isinstance(spec, OuParams):
        spec = RationalSpectrum.ou(spec.alpha, spec.beta)
    elif isinstance(spec, MixingMeasure):
        spec = mixture_spectrum(spec)
    elif not isinstance(spec, (RationalSpectrum, TabulatedSpectrum)):
        raise InvalidParameter("spec", "spectral pipeline needs a Gaussian spectrum")
    d = np.asarray(args.d_grid, dtype=float)
    summary = {"snr": snr}
    if isinstance(spec, RationalSpectrum) and not args.numeric:
        pipe = rational_pipeline(spec, snr)
        curve = pipe.curve(d)
        pfe = pipe.pfe
        summary.update(pipeline="rational",
                       poles=[*pfe.anticausal_poles.tolist(), *pfe.causal_poles.tolist()],
                       residues=[*pfe.anticausal_residues.tolist(), *pfe.causal_residues.tolist()])
    else:
        if np.any(d < 0):
            raise InvalidParameter("d-grid", "the numeric pipeline reports d >= 0 only")
        fact = factorize_numeric(spec, snr, grid_size=args.grid_size, omega_max=args.omega_max)
        curve = fact.curve(d)
        summary.update(pipeline="numeric", poles=None, residues=None)
    summary.update(mmse=curve.mmse, cmmse=curve.cmmse, var0=curve.var0)
    try:
        fit = decay_rate(curve)
        summary.update(decay_kind=fit.kind, decay_exponent=fit.exponent)
    except InsufficientData:
        summary.update(decay_kind=None, decay_exponent=None)
    gap = curve.cmmse - curve.mmse
    rows = [{"d": a, "lmmse": v, "p_d": (v - curve.mmse) / gap if a >= 0 else math.nan}
            for a, v in zip(curve.d, curve.values)]
    if args.summary:
        lio._write(lio.dumps_json(summary), args.summary)
    return CommandResult(summary, rows, ["d", "lmmse", "p_d"])


def setup_utility(p):
    _ou_args(p)
    p.add_argument("--tau-grid", type=_grid, default=_grid("0:0.1:3"),
                   help="lookahead durations (time)")


def run_utility(args) -> CommandResult:
    from .utility import lmmse_from_utility, utility_curve

    params = _ou(args)
    cur = utility_curve(params, args.snr, args.tau_grid)
    rec = np.atleast_1d(lmmse_from_utility(params, args.snr, cur.tau_grid))
    rows = [{"tau": t, "U": u, "U_prime": up, "lmmse_from_U": r}
            for t, u, up, r in zip(cur.tau_grid, cur.u_values, cur.u_prime, rec)]
    return CommandResult({"u_prime0": cur.u_prime0, "mutual_info_rate": cur.mutual_info_rate},
                         rows, ["tau", "U", "U_prime", "lmmse_from_U"])


def setup_jump_identity(p):
    _ou_args(p)
    p.add_argument("--T", type=float, required=True, help="rectangle width in lookahead (time)")
    p.add_argument("--nodes", type=int, default=16, help="starting Gauss-Legendre nodes per axis")


def run_jump_identity(args) -> CommandResult:
    from .jump import theorem1_check

    r = theorem1_check(_ou(args), args.snr, args.T, n_start=args.nodes)
    return CommandResult({"cmmse": r.lhs, "integral": r.rhs, "abs_err": r.abs_err,
                          "nodes": r.nodes})


def setup_counterexample(p):
    p.add_argument("--chain", default=None,
                   help="shifted_markov spec (JSON file or inline); default three-state example")
    p.add_argument("--snr", type=float, default=1.0, help="channel SNR per unit time")
    p.add_argument("--d-grid", type=_grid, default=_grid("-1:0.1:1"),
                   help="lookaheads in [-1, 1] (symbol durations)")
    p.add_argument("--hist-len", type=int, default=50, help="fully observed past symbols")
    p.add_argument("--nodes", type=int, default=16, help="Gauss-Legendre nodes per shift piece")
    _mc_args(p, 10000)


def run_counterexample(args) -> CommandResult:
    from .markov import (dtmc_reverse, example_chain, lmmse_infinite_snr, lmmse_shifted,
                         prediction_variance)
    from .model import Dtmc

    if args.chain is None:
        chain = example_chain()
    else:
        chain, _ = lio.load_spec(args.chain)
        if not isinstance(chain, Dtmc):
            raise InvalidParameter("chain", "needs a shifted_markov spec")
    rev = dtmc_reverse(chain)
    mc = _mc_config(args) if args.paths else None
    rows = []
    for d in np.asarray(args.d_grid, dtype=float):
        row = {"d": d, "fwd_inf_snr": lmmse_infinite_snr(chain, d),
               "rev_inf_snr": lmmse_infinite_snr(rev, d)}
        if mc is not None:
            if not -1.0 <= d <= 1.0:
                raise InvalidParameter("d-grid", "finite-SNR values need d in [-1, 1]")
            f = lmmse_shifted(chain, d, snr=args.snr, hist_len=args.hist_len, mc=mc,
                              nodes=args.nodes)
            r = lmmse_shifted(rev, d, snr=args.snr, hist_len=args.hist_len, mc=mc,
                              nodes=args.nodes)
            row.update(fwd=f.value, fwd_se=f.stderr, rev=r.value, rev_se=r.stderr)
        else:
            row.update(fwd=math.nan, fwd_se=math.nan, rev=math.nan, rev_se=math.nan)
        rows.append(row)
    summary = {"stationary": chain.stationary, "var0": chain.var0,
               "prediction_variance_fwd": prediction_variance(chain),
               "prediction_variance_rev": prediction_variance(rev),
               "reversed_transition": rev.transition}
    return CommandResult(summary, rows,
                         ["d", "fwd", "fwd_se", "rev", "rev_se", "fwd_inf_snr", "rev_inf_snr"])


def setup_simulate(p):
    p.add_argument("--spec", default=None, help="process spec (JSON file or inline)")
    p.add_argument("--alpha", type=float, default=None, help="OU rate when no --spec is given")
    p.add_argument("--beta", type=float, default=1.0, help="OU diffusion amplitude")
    p.add_argument("--snr", type=float, default=None, help="channel SNR per unit time")
    p.add_argument("--lag", type=float, required=True, help="lookahead d (time); inf allowed for OU")
    p.add_argument("--assumed-alpha", type=float, default=None,
                   help="run the smoother under this OU rate (mismatched filtering)")
    p.add_argument("--hist-len", type=int, default=50, help="past symbols (Markov specs)")
    _mc_args(p, 200)


def run_simulate(args) -> CommandResult:
    from .markov import lmmse_shifted
    from .model import Dtmc, MixingMeasure, OuParams
    from .sim import ou_lmmse_mc

    if args.spec is not None:
        spec, cfg = lio.load_spec(args.spec)
    elif args.alpha is not None:
        spec, cfg = OuParams(args.alpha, args.beta), {}
    else:
        raise InvalidParameter("spec", "give --spec or --alpha")
    snr = args.snr if args.snr is not None else cfg.get("snr")
    if snr is None:
        raise InvalidParameter("snr", "give --snr or an snr field in the spec")
    mc = _mc_config(args)
    assumed = OuParams(args.assumed_alpha) if args.assumed_alpha else None
    if isinstance(spec, OuParams):
        rep = ou_lmmse_mc(spec, snr, [args.lag], mc, assumed=assumed)
        est, steady = rep.estimates[0], rep.steps_to_steady_state
    elif isinstance(spec, MixingMeasure):
        parts = [ou_lmmse_mc(OuParams(float(a)), snr, [args.lag], mc, assumed=assumed)
                 for a in spec.alphas]
        value = sum(w * p.estimates[0].value for w, p in zip(spec.weights, parts))
        se = math.sqrt(sum((w * p.estimates[0].stderr) ** 2 for w, p in zip(spec.weights, parts)))
        from .sim import McEstimate

        est = McEstimate(value, se, sum(p.estimates[0].samples for p in parts))
        steady = max(p.steps_to_steady_state for p in parts)
    elif isinstance(spec, Dtmc):
        est = lmmse_shifted(spec, args.lag, snr=snr, hist_len=args.hist_len, mc=mc)
        steady = args.hist_len
    else:
        raise InvalidParameter("spec", "simulation supports ou, ou_mixture and shifted_markov")
    return CommandResult({"estimate": est.value, "stderr": est.stderr,
                          "steps_to_steady_state": steady, "samples": est.samples})


def setup_run_manifest(p):
    p.add_argument("manifest", nargs="?", default=None,
                   help="built-in manifest name or path to a manifest JSON file")
    p.add_argument("--list", action="store_true", help="list built-in manifests")


def run_run_manifest(args) -> CommandResult:
    from .manifest import builtin_names, load_manifest, run_manifest

    if args.list:
        return CommandResult({}, [{"name": n} for n in builtin_names()], ["name"])
    if args.manifest is None:
        raise InvalidParameter("manifest", "give a manifest name or path")
    report = run_manifest(load_manifest(args.manifest))
    result = CommandResult({"name": report.name, "passed": report.passed},
                           report.rows, ["path", "observed", "expected", "tolerance", "pass",
                                         "provenance"])
    if not report.passed:
        result.summary["failures"] = report.failures
    return result


COMMANDS: dict[str, tuple[Callable, Callable, str]] = {
    "ou-curve": (setup_ou_curve, run_ou_curve, "OU lookahead error curve (CSV d,lmmse)"),
    "tradeoff": (setup_tradeoff, run_tradeoff, "SNR needed at lookahead d to match cmmse(snr)"),
    "mixture-bounds": (setup_mixture_bounds, run_mixture_bounds,
                       "OU-mixture errors and the Gaussian sandwich bounds"),
    "spectral": (setup_spectral, run_spectral, "Wiener lookahead errors for Gaussian spectra"),
    "utility": (setup_utility, run_utility, "information utility of lookahead for OU"),
    "jump-identity": (setup_jump_identity, run_jump_identity,
                      "rectangle-average identity for the SNR-jump channel"),
    "counterexample": (setup_counterexample, run_counterexample,
                       "forward vs time-reversed shifted Markov chain"),
    "simulate": (setup_simulate, run_simulate, "Monte Carlo fixed-lag error"),
    "run-manifest": (setup_run_manifest, run_run_manifest,
                     "run a manifest of commands and check expected values"),
}

SUMMARY_ONLY = {"tradeoff", "jump-identity", "simulate"}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lagmmse", description=__doc__.split("\n\n")[0] + " " + UNITS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (setup, _, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext, description=f"{helptext}. {UNITS}")
        setup(p)
        if name not in SUMMARY_ONLY:
            p.add_argument("--format", choices=["csv", "json"], default="csv",
                           help="output format (json adds the summary)")
        p.add_argument("--out", default=None, help="write output here instead of stdout")
    return parser


def execute(argv) -> tuple[str, CommandResult, argparse.Namespace]:
    args = build_parser().parse_args(list(argv))
    return args.command, COMMANDS[args.command][1](args), args


def render(command: str, result: CommandResult, args) -> str:
    if command in SUMMARY_ONLY or not result.tabular:
        return lio.dumps_json(result.summary)
    if getattr(args, "format", "csv") == "json":
        body = {"summary": result.summary, "columns": result.columns,
                "rows": [{c: r.get(c) for c in result.columns} for r in result.rows]}
        return lio.dumps_json(body)
    return lio.table_csv(result.rows, result.columns)


def main(argv: Optional[list] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        command, result, args = execute(argv)
        text = render(command, result, args)
        lio._write(text, args.out)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except InvalidParameter as exc:
        print(f"lagmmse: error: {exc}", file=sys.stderr)
        return 2
    except AssertionFailed as exc:
        print(f"lagmmse: {exc}", file=sys.stderr)
        return 1
    except LagMmseError as exc:
        print(f"lagmmse: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if command == "run-manifest" and result.summary.get("passed") is False:
        print(f"lagmmse: {AssertionFailed(result.summary['failures'])}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
