"""Command-line surface.

Subcommands:

    gen-collocation  write the configured collocation grid to CSV
    train            physics-train a surrogate pair, save checkpoint
    eval-path        run one backend along a path, export trajectory CSV
    compare          point-wise error between two backends on a path
    bench            runtime ordering of explicit/implicit/network backends
    timestep-study   accuracy of a backend at several step sizes
    fe-demo          cantilever truss with classical vs surrogate material
    appendix-b       two-phase data-then-physics ODE fitting demo
    data-baseline    supervised baseline trained on solver-generated labels

Exit codes: 0 success, 1 configuration/argument problem, 2 runtime
failure.  The only environment override is CONLAB_OUT_DIR for the
output directory.
"""

import argparse
import csv
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .config import load_run_config, resolve_output_dir
from .csvio import export_trajectory_csv
from .driver import (
    ExplicitDamageBackend,
    ImplicitCz3dBackend,
    ImplicitDamageBackend,
    ImplicitPlasticityBackend,
    NetworkCz3dBackend,
    NetworkDamageBackend,
    NetworkPlasticityBackend,
    benchmark,
    compare,
    run_path,
    timestep_study,
)
from .errors import ConfigError, ConlabError
from .materials import Cz3dParams, DamageParams, DEFAULT_CZ3D, PlasticityParams
from .network import TrainingConfig, init_network
from .paths import make_loading_path
from .training import (
    TASK_OUTPUTS,
    generate_plastic_labels,
    make_task_nets,
    ode_demo_target,
    train,
    train_ode_demo,
)
from .truss import FeConfig, fe_solve, make_cantilever_truss


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; this tool reserves 2 for
    # runtime failures and reports validation problems with 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _material_from_meta(meta):
    family = meta.get("family")
    material = meta.get("material", {})
    if family == "plasticity":
        return family, PlasticityParams(**material)
    if family == "damage":
        return family, DamageParams(**material)
    if family == "cz3d":
        return family, Cz3dParams(**material)
    raise ConfigError(f"checkpoint carries unknown family {family!r}")


def _network_backend(family, nets, params):
    if family == "plasticity":
        return NetworkPlasticityBackend(nets, params)
    if family == "damage":
        return NetworkDamageBackend(nets, params)
    return NetworkCz3dBackend(nets, params)


def _implicit_backend(family, params):
    if family == "plasticity":
        return ImplicitPlasticityBackend(params)
    if family == "damage":
        return ImplicitDamageBackend(params)
    return ImplicitCz3dBackend(params)


def _resolve_backend(spec, family, params):
    """Backend from 'implicit', 'explicit' or a checkpoint path."""
    if spec == "implicit":
        if family is None:
            raise ConfigError("need --config to build an implicit backend")
        return _implicit_backend(family, params), family, params
    if spec == "explicit":
        if family is None:
            raise ConfigError("need --config to build an explicit backend")
        if family == "plasticity":
            raise ConfigError("the explicit update exists for the damage models only")
        return ExplicitDamageBackend(params, dim=3 if family == "cz3d" else 1), family, params
    ckpt = load_checkpoint(spec)
    ck_family, ck_params = _material_from_meta(ckpt.meta)
    if family is not None and family != ck_family:
        raise ConfigError(
            f"checkpoint family {ck_family!r} does not match configured {family!r}")
    return _network_backend(ck_family, ckpt.net_pair, ck_params), ck_family, ck_params


def _path_for(args, run_cfg, family):
    if args.path is not None:
        if ";" in args.path:
            comps = [c.strip() for c in args.path.split(";")]
            spec = {"components": comps}
        else:
            spec = args.path
    elif run_cfg is not None:
        spec = run_cfg.test_path
    else:
        raise ConfigError("no loading path given (use --path or a config)")
    steps = args.steps or (run_cfg.path_steps if run_cfg else 50)
    return make_loading_path(spec, n_steps=steps)


def _checkpoint_meta(run_cfg):
    return {
        "family": run_cfg.family,
        "material": asdict(run_cfg.material),
        "seed": run_cfg.training.seed,
        "network": {
            "hidden_layers": run_cfg.hidden_layers,
            "width": run_cfg.width,
            "activation": run_cfg.activation,
        },
        "training": {
            "learning_rate": run_cfg.training.learning_rate,
            "epochs": run_cfg.training.epochs,
            "batch_size": run_cfg.training.batch_size,
            "switch": run_cfg.switch,
            "sign": run_cfg.sign_mode,
            "smoothing_r": run_cfg.training.smoothing_r,
            "weights": asdict(run_cfg.weights),
        },
    }


def _write_loss_history(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "ue", "ux", "ev", "yl", "ke", "ky", "total"])
        for rec in history:
            writer.writerow([rec.epoch, rec.ue, rec.ux, rec.ev, rec.yl,
                             rec.ke, rec.ky, rec.total])


# --------------------------------------------------------------------------
# subcommand implementations
# --------------------------------------------------------------------------

def _cmd_gen_collocation(args):
    run_cfg = load_run_config(args.config)
    rows = run_cfg.collocation()
    out_dir = resolve_output_dir(run_cfg, args.out_dir)
    out = out_dir / f"collocation_{run_cfg.family}.csv"
    headers = {
        "plasticity": ["eps", "eps_p", "xi_p"],
        "damage": ["gap", "d", "xi_d"],
        "cz3d": ["gap_s1", "gap_s2", "gap_n", "d", "xi_d"],
    }
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers[run_cfg.family])
        writer.writerows(rows.tolist())
    print(f"{len(rows)} collocation rows -> {out}")
    return 0


def _cmd_train(args):
    run_cfg = load_run_config(args.config)
    rows = run_cfg.collocation()
    nets = make_task_nets(run_cfg.family, run_cfg.hidden_layers, run_cfg.width,
                          run_cfg.activation, seed=run_cfg.training.seed)
    print(f"training {run_cfg.family} surrogate on {len(rows)} rows "
          f"({run_cfg.training.epochs} epochs, batch {run_cfg.training.batch_size})")
    nets, history = train(run_cfg.family, rows, run_cfg.weights, run_cfg.training,
                          nets, run_cfg.material, switch=run_cfg.switch,
                          sign_mode=run_cfg.sign_mode)
    out_dir = resolve_output_dir(run_cfg, args.out_dir)
    names = TASK_OUTPUTS[run_cfg.family]
    ckpt_path = out_dir / f"{run_cfg.family}.cpnn"
    save_checkpoint(dict(zip(names, nets)), _checkpoint_meta(run_cfg), ckpt_path)
    _write_loss_history(history, out_dir / f"{run_cfg.family}_losses.csv")
    print(f"initial loss {history[0].total:.3e}, final {history[-1].total:.3e}")
    print(f"checkpoint -> {ckpt_path}")
    return 0


def _cmd_eval_path(args):
    run_cfg = load_run_config(args.config) if args.config else None
    family = run_cfg.family if run_cfg else None
    params = run_cfg.material if run_cfg else None
    backend, family, params = _resolve_backend(args.backend, family, params)
    path = _path_for(args, run_cfg, family)
    traj = run_path(backend, path)
    out_dir = resolve_output_dir(run_cfg, args.out_dir)
    out = out_dir / "trajectory.csv"
    export_trajectory_csv(traj, out)
    print(f"{len(traj.times)} points -> {out}")
    return 0


def _cmd_compare(args):
    run_cfg = load_run_config(args.config) if args.config else None
    family = run_cfg.family if run_cfg else None
    params = run_cfg.material if run_cfg else None
    test_backend, family, params = _resolve_backend(args.test, family, params)
    ref_backend, family, params = _resolve_backend(args.ref, family, params)
    path = _path_for(args, run_cfg, family)
    traj_test = run_path(test_backend, path)
    traj_ref = run_path(ref_backend, path)
    stats = compare(traj_test, traj_ref)
    out_dir = resolve_output_dir(run_cfg, args.out_dir)
    out = out_dir / "compare.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["error_pct"])
        writer.writerows([[e] for e in stats.per_point])
    print(f"mean {stats.mean_pct:.3f}%  max {stats.max_pct:.3f}%  "
          f"excluded {stats.n_excluded} near-zero reference points")
    print(f"per-point errors -> {out}")
    return 0


def _cmd_bench(args):
    params = DEFAULT_CZ3D
    if args.config:
        run_cfg = load_run_config(args.config)
        if run_cfg.family != "cz3d":
            raise ConfigError("bench expects a cz3d config (the cost-table model)")
        params = run_cfg.material
    path = make_loading_path(
        {"components": ["0.5*t**3", "0.5*t**2", "0.5*abs(t*sin(3*pi*t))"]},
        n_steps=args.steps)
    nets_3x40 = (init_network([5, 40, 40, 40, 1], "relu", seed=1),
                 init_network([5, 40, 40, 40, 1], "relu", seed=2))
    nets_2x10 = (init_network([5, 10, 10, 1], "relu", seed=3),
                 init_network([5, 10, 10, 1], "relu", seed=4))
    backends = {
        "explicit": ExplicitDamageBackend(params, dim=3),
        "implicit": ImplicitCz3dBackend(params),
        "network-3x40": NetworkCz3dBackend(nets_3x40, params),
        "network-2x10": NetworkCz3dBackend(nets_2x10, params),
    }
    results = benchmark(backends, path, reps=args.reps)
    print(f"normalised median run-times over {args.reps} reps, {args.steps} steps:")
    for name, value in sorted(results.items(), key=lambda kv: kv[1]):
        print(f"  {name:14s} {value:6.2f}")
    return 0


def _cmd_timestep_study(args):
    run_cfg = load_run_config(args.config) if args.config else None
    family = run_cfg.family if run_cfg else None
    params = run_cfg.material if run_cfg else None
    backend, family, params = _resolve_backend(args.backend, family, params)
    ref_backend = _implicit_backend(family, params)
    if args.path is not None and ";" in args.path:
        spec = {"components": [c.strip() for c in args.path.split(";")]}
    elif args.path is not None:
        spec = args.path
    elif run_cfg is not None:
        spec = run_cfg.test_path
    else:
        raise ConfigError("no loading path given (use --path or a config)")
    dts = [float(v) for v in args.dts.split(",")]
    results = timestep_study(backend, spec, dts, ref_backend, ref_dt=args.ref_dt)
    print(f"{'dt':>10s} {'mean%':>10s} {'max%':>10s} {'excluded':>9s}")
    for dt, stats in results:
        print(f"{dt:10.5f} {stats.mean_pct:10.3f} {stats.max_pct:10.3f} "
              f"{stats.n_excluded:9d}")
    return 0


def _cmd_fe_demo(args):
    ckpt = load_checkpoint(args.checkpoint)
    family, params = _material_from_meta(ckpt.meta)
    if family != "plasticity":
        raise ConfigError("the truss demo drives 1D plasticity backends")
    truss = make_cantilever_truss(n_bays=args.bays, tip_drop=args.drop)
    cfg = FeConfig(n_increments=args.increments)
    classical = ImplicitPlasticityBackend(params)
    surrogate = NetworkPlasticityBackend(ckpt.net_pair, params, fold_negative=True)
    print(f"truss: {len(truss.nodes)} nodes, {len(truss.elements)} elements, "
          f"tip drop {args.drop}")
    res_c = fe_solve(truss, classical, cfg)
    res_n = fe_solve(truss, surrogate, cfg)
    idx = [res_c.constrained_dofs.index(d) for d in truss.driven_dofs]
    react_c = res_c.reactions[:, idx].sum(axis=1)
    react_n = res_n.reactions[:, idx].sum(axis=1)
    out_dir = resolve_output_dir(None, args.out_dir)
    out = out_dir / "fe_demo_reactions.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["factor", "reaction_classical", "reaction_network"])
        for row in zip(res_c.factors, react_c, react_n):
            writer.writerow([format(v, ".17g") for v in row])
    peak = np.abs(react_c).max()
    dev = 100.0 * np.abs(react_n - react_c).max() / peak
    print(f"reaction history: peak-normalised max deviation {dev:.2f}%")
    residual = np.abs(res_n.displacements[-1]).max()
    print(f"residual displacement after unload: {residual:.4f}")
    print(f"histories -> {out}")
    return 0


def _cmd_appendix_b(args):
    result = train_ode_demo()
    out_dir = resolve_output_dir(None, args.out_dir)
    xs = np.linspace(0.0, 5.0, 501)
    from .network import forward
    y_data = np.array([forward(result.net_after_data, np.array([x]))[0] for x in xs])
    y_phys = np.array([forward(result.net, np.array([x]))[0] for x in xs])
    y_true = ode_demo_target(xs)
    out = out_dir / "ode_demo.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y_true", "y_after_data", "y_after_physics"])
        for row in zip(xs, y_true, y_data, y_phys):
            writer.writerow([format(v, ".17g") for v in row])
    in_range = xs <= 2.0
    print(f"after data phase:    max err on [0,2] {np.max(np.abs(y_data - y_true)[in_range]):.4f}, "
          f"on [2,5] {np.max(np.abs(y_data - y_true)[~in_range]):.4f}")
    print(f"after physics phase: max err on [0,5] {np.max(np.abs(y_phys - y_true)):.4f}")
    print(f"curves -> {out}")
    return 0


def _cmd_data_baseline(args):
    run_cfg = load_run_config(args.config)
    if run_cfg.family != "plasticity":
        raise ConfigError("the data-driven baseline exists for the plasticity model")
    print("generating labelled steps from the return-mapping solver ...")
    inputs, labels = generate_plastic_labels(run_cfg.material)
    print(f"{len(inputs)} labelled rows")
    nets = make_task_nets("data_driven", run_cfg.hidden_layers, run_cfg.width,
                          run_cfg.activation, seed=run_cfg.training.seed)
    nets, history = train("data_driven", inputs, run_cfg.weights, run_cfg.training,
                          nets, labels=labels)
    out_dir = resolve_output_dir(run_cfg, args.out_dir)
    meta = _checkpoint_meta(run_cfg)
    meta["training"]["loss"] = "data"
    ckpt_path = out_dir / "plasticity_data_baseline.cpnn"
    save_checkpoint(dict(zip(TASK_OUTPUTS["plasticity"], nets)), meta, ckpt_path)
    _write_loss_history(history, out_dir / "plasticity_data_baseline_losses.csv")
    print(f"initial loss {history[0].total:.3e}, final {history[-1].total:.3e}")
    print(f"checkpoint -> {ckpt_path}")
    return 0


# --------------------------------------------------------------------------
# parser wiring
# --------------------------------------------------------------------------

def _build_parser():
    parser = _Parser(prog="conlab",
                     description="constitutive-model laboratory: classical "
                                 "integrators vs physics-trained surrogates")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--out-dir", help="output directory (overrides config/env)")
        return p

    p = add("gen-collocation", _cmd_gen_collocation, "write the collocation grid to CSV")
    p.add_argument("--config", required=True)

    p = add("train", _cmd_train, "physics-train a surrogate pair")
    p.add_argument("--config", required=True)

    p = add("eval-path", _cmd_eval_path, "run one backend along a loading path")
    p.add_argument("--backend", required=True,
                   help="'implicit', 'explicit' or a checkpoint file")
    p.add_argument("--config")
    p.add_argument("--path", help="expression in t; use ';' to separate vector components")
    p.add_argument("--steps", type=int)

    p = add("compare", _cmd_compare, "point-wise error between two backends")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--config")
    p.add_argument("--path")
    p.add_argument("--steps", type=int)

    p = add("bench", _cmd_bench, "runtime ordering of the cost-table backends")
    p.add_argument("--config")
    p.add_argument("--reps", type=int, default=7)
    p.add_argument("--steps", type=int, default=2000)

    p = add("timestep-study", _cmd_timestep_study, "accuracy vs step size")
    p.add_argument("--backend", required=True)
    p.add_argument("--config")
    p.add_argument("--path")
    p.add_argument("--dts", required=True, help="comma-separated step sizes")
    p.add_argument("--ref-dt", type=float, default=0.001)

    p = add("fe-demo", _cmd_fe_demo, "cantilever truss, classical vs surrogate")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--bays", type=int, default=2)
    p.add_argument("--drop", type=float, default=2.0)
    p.add_argument("--increments", type=int, default=100)

    add("appendix-b", _cmd_appendix_b, "data-then-physics ODE fitting demo")

    p = add("data-baseline", _cmd_data_baseline, "train the supervised baseline")
    p.add_argument("--config", required=True)
    return parser


def cli_main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConlabError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
