"""Command-line entry point: ``npmle-lab [global flags] <subcommand> [options]``.

Exit codes: 0 success, 2 argument/parse errors, 3 numeric or construction errors.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..errors import ArgumentError, LabError

SUBCOMMANDS = ("datagen", "train", "risk", "theory", "rate-study", "minimax", "approx-net")


def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from None


def _emit(obj, out_dir, name):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_default)
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text + "\n", encoding="utf-8")
    print(text)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _model(args):
    from ..models import build_model

    return build_model(args.model, args.params or {})


def cmd_datagen(args):
    from ..datagen import InputLaw, sample_dataset, save_dataset

    model = _model(args)
    ds = sample_dataset(model, args.n, InputLaw(args.law, model.d), args.seed)
    out = Path(args.out or ".") / (args.file or f"data_n{args.n}_s{args.seed}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out)
    print(json.dumps({"path": str(out), "n": ds.n, "d": ds.d, "K": ds.K}))


def cmd_train(args):
    from ..datagen import load_dataset
    from ..network.core import ArchSpec, to_json
    from ..training import TrainConfig, architecture_from_theory

    ds = load_dataset(args.data, K=args.K)
    if args.hidden:
        arch = ArchSpec((ds.d, *args.hidden, ds.K), B=args.B if args.B is not None else float("inf"))
    else:
        spec = _model(args).spec
        arch = architecture_from_theory(spec, ds.n, args.c_L, args.c_m, args.c_B)
    train = dict(args.train or {})
    train["seed"] = args.seed
    from ..training import fit_npmle

    res = fit_npmle(arch, ds, TrainConfig(**train))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "net.json").write_text(to_json(res.params, arch) + "\n", encoding="utf-8")
    _emit(res.summary(), out, "train.json")


def cmd_risk(args):
    from ..datagen import InputLaw
    from ..metrics import risk, risk_kl
    from ..network.core import forward, from_json

    params, arch = from_json(Path(args.net).read_text(encoding="utf-8"))
    model = _model(args)
    law = InputLaw(args.law, model.d)
    phat = lambda X: forward(params, arch, X)
    fn = risk_kl if args.kind == "kl" else risk
    r = fn(model, phat, law, budget=args.budget, seed=args.seed, method=args.method)
    _emit({"kind": args.kind, "value": r.value, "error": r.error, "method": r.method, "samples": r.samples},
          args.out, "risk.json")


def cmd_theory(args):
    from ..theory import evaluate

    _emit({"calculator": args.calc, "params": args.params, "value": evaluate(args.calc, args.params or {})},
          args.out, f"theory_{args.calc}.json")


def cmd_rate_study(args):
    from .config import ExperimentConfig, load_config
    from .study import run_rate_study

    if args.config_obj is None:
        raise ArgumentError("rate-study needs --config <json>")
    cfg = ExperimentConfig.from_dict(args.config_obj)
    res = run_rate_study(cfg, jobs=args.jobs, cache=not args.no_cache, out_dir=args.out, figures=not args.no_figures)
    report = {
        "files": res.files,
        "fit": res.fit.to_dict() if res.fit else None,
        "fit_error": res.fit_error,
        "strictly_decreasing": res.strictly_decreasing,
        "failed_cells": sum(r["status"] != "ok" for r in res.rows),
    }
    print(json.dumps(report, indent=2, sort_keys=True))


def cmd_minimax(args):
    from ..datagen import InputLaw, sample_dataset, save_dataset
    from ..minimax import build_hypotheses, make_bump_spec, verify_all_separation, verify_kl_budget

    law = InputLaw(args.law, args.t)
    spec = make_bump_spec(args.n, args.K, args.beta, args.t, args.B_exp, law)
    hs = build_hypotheses(args.n, args.K, spec, cap=args.cap, seed=args.seed)
    sep = verify_all_separation(hs, law, order=args.order)
    sep.pop("details")
    kl = verify_kl_budget(hs, law=law, order=args.order)
    _emit({"hypotheses": hs.describe(), "separation": sep, "kl": kl}, args.out, "minimax.json")
    if args.sample is not None:
        ds = sample_dataset(hs.hypothesis(args.sample), args.n, law, args.seed)
        out = Path(args.out or ".") / f"minimax_W{args.sample}.csv"
        save_dataset(ds, out)


def cmd_approx_net(args):
    from ..network.constructive import build_exp_log_network
    from ..network.core import to_json

    net = build_exp_log_network(args.M, knots=args.knots)
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        (path / "exp_log_net.json").write_text(to_json(net.params, net.arch) + "\n", encoding="utf-8")
    _emit({"M": args.M, "depth": net.L, "params": net.arch.n_params, **net.meta}, args.out, "approx_net.json")


def build_parser():
    p = argparse.ArgumentParser(prog="npmle-lab", description="Desk-scale lab for NPMLE classification with deep ReLU networks.")
    p.add_argument("--config", help="JSON file; its keys fill options left unset on the command line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for rate studies")
    sub = p.add_subparsers(dest="command", required=True)

    def model_opts(sp):
        sp.add_argument("--model", default="stock-gam")
        sp.add_argument("--params", type=_json_arg, help="model parameters as JSON")
        sp.add_argument("--law", default="uniform", choices=("uniform", "mixture"))

    sp = sub.add_parser("datagen", help="sample a dataset from a truth model")
    model_opts(sp)
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--file", help="file name inside --out")
    sp.set_defaults(func=cmd_datagen)

    sp = sub.add_parser("train", help="fit the NPMLE on a dataset CSV")
    model_opts(sp)
    sp.add_argument("--data", required=True)
    sp.add_argument("--K", type=int)
    sp.add_argument("--hidden", type=int, nargs="*", help="explicit hidden widths (default: theory architecture)")
    sp.add_argument("--B", type=float)
    sp.add_argument("--c-L", dest="c_L", type=float, default=1.0)
    sp.add_argument("--c-m", dest="c_m", type=float, default=1.0)
    sp.add_argument("--c-B", dest="c_B", type=float, default=1.0)
    sp.add_argument("--train", type=_json_arg, help="TrainConfig fields as JSON")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("risk", help="risk of a saved network against a truth model")
    model_opts(sp)
    sp.add_argument("--net", required=True)
    sp.add_argument("--kind", default="hellinger", choices=("hellinger", "kl"))
    sp.add_argument("--method", choices=("quadrature", "mc"))
    sp.add_argument("--budget", type=int)
    sp.set_defaults(func=cmd_risk)

    sp = sub.add_parser("theory", help="evaluate a bound calculator")
    sp.add_argument("calc")
    sp.add_argument("--params", type=_json_arg, default=None)
    sp.set_defaults(func=cmd_theory)

    sp = sub.add_parser("rate-study", help="run a rate study from --config")
    sp.add_argument("--no-cache", action="store_true")
    sp.add_argument("--no-figures", action="store_true")
    sp.set_defaults(func=cmd_rate_study)

    sp = sub.add_parser("minimax", help="build and verify the hard-instance family")
    sp.add_argument("--n", type=int, default=50)
    sp.add_argument("--K", type=int, default=2)
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--t", type=int, default=1)
    sp.add_argument("--B-exp", dest="B_exp", type=float, default=1.0)
    sp.add_argument("--law", default="mixture", choices=("uniform", "mixture"))
    sp.add_argument("--cap", type=int, default=64)
    sp.add_argument("--order", type=int, default=16)
    sp.add_argument("--sample", type=int, help="also sample n points from hypothesis W_i")
    sp.set_defaults(func=cmd_minimax)

    sp = sub.add_parser("approx-net", help="build the exp-of-log ReLU approximation network")
    sp.add_argument("--M", type=float, default=100.0)
    sp.add_argument("--knots", type=int, default=8)
    sp.set_defaults(func=cmd_approx_net)
    return p


def _apply_config(parser, args, argv):
    args.config_obj = None
    if not args.config:
        return
    try:
        obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ArgumentError(f"cannot read config {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"{args.config}: invalid JSON ({exc})") from None
    args.config_obj = obj
    if args.command == "rate-study":
        return
    given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in obj.items():
        if hasattr(args, key) and key not in given:
            setattr(args, key, value)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(parser, args, argv)
        if args.jobs < 1:
            raise ArgumentError("--jobs must be at least 1")
        args.func(args)
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
