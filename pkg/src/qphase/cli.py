"""``qphase`` command-line interface.

Parameters resolve as defaults < ``--config`` file < command-line flags.
Exit codes: 0 success, 1 bad parameters, 2 I/O or parse errors, 3 numerical
divergence.
"""
import argparse
import csv
import logging
import math
import os
import sys

import numpy as np

from . import theory
from .baseline import BaselineConfig, thresholded_wf_run
from .errors import DivergenceError, DomainError, QPhaseError
from .experiments import METHODS, PRESETS, mre, preset, resolve_lambda, run_sweep, summarize, write_csv
from .imaging import fixture_path, load_pgm, reconstruct_image, write_outputs
from .model import generate_instance, generate_signal, load_instance, save_instance, write_matrix_csv, write_meta
from .prior import PriorConfig
from .rng import DEFAULT_SEED, RngState
from .samplers import SamplerConfig, lmc_run, mala_run
from .svgplot import render_boxplots

log = logging.getLogger("qphase")

EXIT_OK, EXIT_DOMAIN, EXIT_IO, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _float_or_auto(s):
    return None if s == "auto" else float(s)


def _int_or_auto(s):
    return None if s == "auto" else int(s)


def _lambda_rule(s):
    try:
        return float(s)
    except ValueError:
        resolve_lambda(s, 1)  # validate
        return s


def _methods(s):
    out = tuple(x.strip() for x in s.split(",") if x.strip())
    bad = [x for x in out if x not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown methods {bad}; choose from {','.join(METHODS)}")
    return out


def _common(p, seed=True):
    p.add_argument("--config", help="key = value file; flags override it")
    if seed:
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")


def build_parser():
    parser = _Parser(prog="qphase", description="Quasi-Bayesian sparse phase retrieval")
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="simulate a problem instance")
    _common(g)
    g.add_argument("--p", type=int, default=100)
    g.add_argument("--s-star", type=int, default=10)
    g.add_argument("--m", type=int, default=500)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("sample", help="run LMC or MALA on an instance")
    _common(s)
    s.add_argument("--method", choices=["lmc", "mala"], default="mala")
    s.add_argument("--lambda", dest="lam", type=_lambda_rule, default="4m")
    s.add_argument("--varsigma", type=float, default=0.1)
    s.add_argument("--h1", type=float, default=math.inf)
    s.add_argument("--gamma", type=_float_or_auto, default=None, help="step size or 'auto'")
    s.add_argument("--iters", type=int, default=30000)
    s.add_argument("--burn-in", type=int, default=1000)
    s.add_argument("--thin", type=int, default=1)
    s.add_argument("--target-acceptance", type=float, default=0.5)
    s.add_argument("--init", choices=["zero", "spectral"], default="zero")
    s.add_argument("--in", dest="in_dir", required=True)
    s.add_argument("--out", default="chain.csv")

    b = sub.add_parser("baseline", help="thresholded Wirtinger flow")
    _common(b)
    b.add_argument("--iters", type=int, default=5000)
    b.add_argument("--k", type=_int_or_auto, default=None)
    b.add_argument("--step", type=_float_or_auto, default=None)
    b.add_argument("--in", dest="in_dir", required=True)
    b.add_argument("--out", default="theta.csv")

    t = sub.add_parser("theory", help="tuning constants and rate expressions")
    _common(t, seed=False)
    t.add_argument("--sigma", type=float, default=1.0)
    t.add_argument("--xi", type=float, default=1.0)
    t.add_argument("--c", dest="c_bound", type=float, default=1.0)
    t.add_argument("--kappa0", type=float, default=1.0)
    t.add_argument("--m", type=int, default=100)
    t.add_argument("--p", type=int, default=100)
    t.add_argument("--s-star", type=int, default=10)
    t.add_argument("--delta", type=float, default=0.05)
    t.add_argument("--frak-c", type=float, default=1.0)
    t.add_argument("--h1", type=float, default=math.inf)
    t.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="also evaluate alpha/beta at this lambda")
    t.add_argument("--csv", default=None, help="append the values as one CSV row")

    w = sub.add_parser("sweep", help="run a simulation sweep")
    _common(w)
    w.add_argument("--preset", choices=list(PRESETS), required=True)
    w.add_argument("--reps", type=int, default=None)
    w.add_argument("--iters", type=int, default=None)
    w.add_argument("--burn-in", type=int, default=None)
    w.add_argument("--methods", type=_methods, default=None)
    w.add_argument("--paper-scale", action="store_true")
    w.add_argument("--timings", action="store_true", help="record wall-clock runtimes (non-deterministic)")
    w.add_argument("--out", default="results.csv")
    w.add_argument("--svg", default=None)

    im = sub.add_parser("image", help="reconstruct a grayscale image")
    _common(im)
    im.add_argument("--input", default=None, help="PGM file (default: bundled digit2 fixture)")
    im.add_argument("--m", type=int, default=4000)
    im.add_argument("--sigma", type=float, default=1.0)
    im.add_argument("--methods", type=_methods, default=METHODS)
    im.add_argument("--iters", type=int, default=30000)
    im.add_argument("--burn-in", type=int, default=1000)
    im.add_argument("--varsigma", type=float, default=0.1)
    im.add_argument("--lambda", dest="lam", type=_lambda_rule, default="4m")
    im.add_argument("--timings", action="store_true")
    im.add_argument("--out-dir", default="recon")
    return parser, sub.choices


# --- config layering -----------------------------------------------------

def read_config(path):
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{n}: expected 'key = value'")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(subparser, cfg):
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    aliases = {"lambda": "lam", "c": "c_bound", "in": "in_dir"}
    defaults = {}
    for key, raw in cfg.items():
        dest = aliases.get(key, key)
        if dest not in actions:
            raise DomainError(f"unknown config key {key!r}")
        act = actions[dest]
        if isinstance(act, argparse._StoreTrueAction):
            val = raw.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            try:
                val = act.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise DomainError(f"bad value for {key!r}: {exc}") from None
        else:
            val = raw
        if act.choices is not None and val not in act.choices:
            raise DomainError(f"bad value for {key!r}: {raw!r} not in {list(act.choices)}")
        defaults[dest] = val
        act.required = False
    subparser.set_defaults(**defaults)


def _config_arg(argv):
    """``(command, config path)`` found by a shallow scan of ``argv``."""
    cmd = next((a for a in argv if a in COMMANDS), None)
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    return cmd, path


def parse_args(argv):
    parser, subs = build_parser()
    # config values become parser defaults before parsing, so a config file
    # can supply otherwise-required flags
    cmd, path = _config_arg(argv)
    if cmd is not None and path is not None:
        _apply_config(subs[cmd], read_config(path))
    return parser.parse_args(argv)


# --- subcommands -----------------------------------------------------------

def _meta_path(out):
    root, _ = os.path.splitext(out)
    return root + ".meta.txt"


def cmd_generate(args):
    rng = RngState(args.seed)
    theta = generate_signal(rng, args.p, args.s_star)
    inst = generate_instance(rng, theta, args.m, args.sigma)
    save_instance(inst, args.out, seed=args.seed)
    print(f"wrote instance m={inst.m} p={inst.p} to {args.out}")


def cmd_sample(args):
    from .baseline import spectral_init

    inst = load_instance(args.in_dir)
    lam = resolve_lambda(args.lam, inst.m)
    prior = PriorConfig(args.varsigma, args.h1)
    cfg = SamplerConfig(lam=lam, gamma=args.gamma, n_iter=args.iters, burn_in=args.burn_in,
                        thin=args.thin, target_acceptance=args.target_acceptance, seed=args.seed)
    rng = RngState(args.seed)
    theta0 = spectral_init(inst, rng=rng.child("init")) if args.init == "spectral" else None
    run = mala_run if args.method == "mala" else lmc_run
    chain = run(inst, prior, cfg, theta0, rng=rng.child(args.method))
    rows = np.vstack([chain.samples, chain.posterior_mean])
    write_matrix_csv(args.out, rows)
    meta = {"method": args.method, "n_samples": chain.samples.shape[0],
            "posterior_mean_row": chain.samples.shape[0], "acceptance_rate": repr(chain.acceptance_rate),
            "final_gamma": repr(chain.final_gamma), "lambda": repr(lam), "varsigma": repr(args.varsigma),
            "h1": repr(args.h1), "iters": args.iters, "burn_in": args.burn_in, "thin": args.thin,
            "init": args.init, "seed": args.seed}
    if inst.theta_star is not None:
        meta["mre"] = repr(mre(chain.posterior_mean, inst.theta_star))
    for w in chain.warnings:
        log.warning(w)
    write_meta(_meta_path(args.out), meta)
    print(f"wrote {rows.shape[0] - 1} samples + posterior mean to {args.out}")


def cmd_baseline(args):
    inst = load_instance(args.in_dir)
    cfg = BaselineConfig(n_iter=args.iters, step=args.step, sparsity_k=args.k)
    theta, info = thresholded_wf_run(inst, cfg, rng=RngState(args.seed).child("init"), return_info=True)
    write_matrix_csv(args.out, theta.reshape(-1, 1))
    meta = {"method": "twf-baseline", "k": info["k"], "oracle_k": int(info["oracle_k"]),
            "step": repr(info["step"]), "step_halvings": info["backoffs"], "iters": args.iters,
            "seed": args.seed}
    if inst.theta_star is not None:
        meta["mre"] = repr(mre(theta, inst.theta_star))
    write_meta(_meta_path(args.out), meta)
    print(f"wrote estimate to {args.out}")


def cmd_theory(args):
    params = theory.TheoryParams(sigma=args.sigma, xi=args.xi, c_bound=args.c_bound,
                                 kappa0=args.kappa0, m=args.m, p=args.p, s_star=args.s_star,
                                 delta=args.delta, frak_c=args.frak_c, h1=args.h1)
    values = theory.report(params)
    if args.lam is not None:
        a, b = theory.alpha_beta(params, args.lam)
        values.update(alpha_at_lambda=a, beta_at_lambda=b)
    for k, v in values.items():
        print(f"{k}={v!r}")
    if args.csv:
        new = not os.path.exists(args.csv)
        with open(args.csv, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(values.keys())
            w.writerow([repr(v) for v in values.values()])


def cmd_sweep(args):
    spec = preset(args.preset, paper_scale=args.paper_scale, n_reps=args.reps, n_iter=args.iters,
                  burn_in=args.burn_in, methods=args.methods, seed=args.seed)
    log.info("sweep %s: levels=%s reps=%d iters=%d burn_in=%d methods=%s",
             args.preset, spec.levels, spec.n_reps, spec.n_iter, spec.effective_burn_in,
             ",".join(spec.methods))
    result = run_sweep(spec)
    write_csv(result, args.out, runtime=args.timings)
    summary = summarize(result)
    for row in summary:
        print(f"level={row.level} method={row.method} n={row.n} diverged={row.n_diverged} "
              f"median={row.median:.4g} q25={row.q25:.4g} q75={row.q75:.4g}")
    if args.svg:
        render_boxplots(summary, args.svg, title=f"{args.preset} sweep", xlabel=spec.factor)


def cmd_image(args):
    path = args.input or fixture_path("digit2")
    img = load_pgm(path)
    log.info("image %s: %dx%d, %.1f%% nonzero", path, img.width, img.height, 100 * img.nnz_fraction)
    recs = reconstruct_image(img, m=args.m, sigma=args.sigma, methods=args.methods, seed=args.seed,
                             n_iter=args.iters, burn_in=args.burn_in, varsigma=args.varsigma,
                             lam=args.lam)
    write_outputs(recs, args.out_dir, truth=img, runtime=args.timings)
    for meth, rec in recs.items():
        print(f"{meth}: mre={rec.mre:.4g}")


COMMANDS = {"generate": cmd_generate, "sample": cmd_sample, "baseline": cmd_baseline,
            "theory": cmd_theory, "sweep": cmd_sweep, "image": cmd_image}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_DOMAIN
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except DomainError as exc:
        print(f"qphase: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"qphase: error: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=args.log_level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("log_level",)}
    log.info("%s seed=%s params=%s", args.command, params.get("seed", "-"), params)
    try:
        COMMANDS[args.command](args)
    except DivergenceError as exc:
        log.error("diverged: %s", exc)
        return EXIT_DIVERGED
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (QPhaseError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
