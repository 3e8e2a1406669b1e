"""Experiment command line: points | lemma1 | train | attack | simulate | sweep.

Every run is deterministic given its config file (seeds live in the config;
--seed overrides). Each command echoes the fully-resolved configuration into
the output directory as ``config.resolved``; re-running from that file
reproduces every CSV bit-exactly and every SVG byte-exactly.

Exit codes: 0 success, 2 validation error, 3 numeric failure (NaN guard).
"""

import argparse
import json
import os
import sys
from dataclasses import replace
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .attack import FGSMSpec, PGDSpec, RCI, Standard, robust_eval
from .coded import chebyshev_first, chebyshev_second, get_module
from .codedsim import (BENCH_FUNCTIONS, POLICIES, fit_scaling_exponent,
                       sample_inputs, sweep)
from .config import Config, dump_config, load_config
from .datasets import DatasetSpec, KINDS, make_dataset, task_of
from .errors import NumericError, ValidationError
from .models import MLPSpec
from .modelio import load_model, save_model
from .svgplot import line_plot_svg
from .train import Coded, ERM, Mixup, TrainPlan, train

_EXACT_FLOOR = 1e-18


def _ensure_out(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _echo_config(out_dir, resolved: dict) -> None:
    with open(os.path.join(out_dir, "config.resolved"), "w", encoding="utf-8") as fh:
        fh.write(dump_config(resolved))


def _write(out_dir, name, text):
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _load_cfg(path) -> Config:
    return Config(load_config(path) if path else {})


# ---------------------------------------------------------------- points

def cmd_points(k: int, n: int, stream=None) -> None:
    stream = stream or sys.stdout
    alpha = chebyshev_first(k).alpha
    beta = chebyshev_second(n).beta
    stream.write(f"alpha (K={k}):\n")
    for i, v in enumerate(alpha, start=1):
        stream.write(f"  {i:4d}  {v:.12g}\n")
    stream.write(f"beta (N={n}):\n")
    for j, v in enumerate(beta, start=1):
        stream.write(f"  {j:4d}  {v:.12g}\n")


# ---------------------------------------------------------------- lemma1

def cmd_lemma1(cfg: Config, out_dir, seed_override=None) -> dict:
    k = cfg.get_int("lemma1.K", 16)
    n_list = cfg.get_int_list("lemma1.N_list", [32, 64, 128, 256, 512])
    fn_name = cfg.get_str("lemma1.fn", "sin")
    seed = seed_override if seed_override is not None else cfg.get_int("lemma1.seed", 0)
    if fn_name not in BENCH_FUNCTIONS:
        raise ValidationError(f"unknown function {fn_name!r}; have {sorted(BENCH_FUNCTIONS)}")
    if not n_list:
        raise ValidationError("lemma1.N_list must not be empty")
    if k < 4 or min(n_list) < 4:
        raise ValidationError("K and every N must be >= 4")

    f = BENCH_FUNCTIONS[fn_name]
    x = sample_inputs(k, seed)
    mses = [get_module(k, n).estimate_mse(x, f) for n in n_list]

    _ensure_out(out_dir)
    csv = "N,mse\n" + "".join(f"{n},{m:.17g}\n" for n, m in zip(n_list, mses))
    _write(out_dir, "lemma1.csv", csv)
    if max(mses) < _EXACT_FLOOR or any(m <= 0.0 for m in mses):
        slope = None
        print("fitted slope: exact (all MSE at rounding floor)")
    else:
        slope = float(np.polyfit(np.log2(n_list), np.log2(mses), 1)[0])
        print(f"fitted slope: {slope:.3f}")
        svg = line_plot_svg([(f"{fn_name}", n_list, mses)],
                            xlabel="coded samples N", ylabel="MSE",
                            title="estimate error vs N", loglog=True)
        _write(out_dir, "lemma1.svg", svg)
    _echo_config(out_dir, {
        "lemma1.K": k, "lemma1.N_list": ",".join(str(n) for n in n_list),
        "lemma1.fn": fn_name, "lemma1.seed": seed,
    })
    return {"mses": mses, "slope": slope}


# ---------------------------------------------------------------- train

def _dataset_spec(cfg: Config) -> DatasetSpec:
    kind = cfg.get_str("data.kind")
    if kind is None:
        raise ValidationError("missing required config key 'data.kind'")
    if kind not in KINDS:
        raise ValidationError(f"unknown dataset kind {kind!r}; have {KINDS}")
    return DatasetSpec(
        kind=kind,
        n_train=cfg.get_int("data.n_train", 1000),
        n_test=cfg.get_int("data.n_test", 1000),
        noise=cfg.get_float("data.noise", 0.0),
        seed=cfg.get_int("data.seed", 0),
    )


def _model_spec(cfg: Config) -> MLPSpec:
    widths = cfg.get_int_list("model.widths")
    if widths is None:
        raise ValidationError("missing required config key 'model.widths'")
    return MLPSpec(widths=tuple(widths), activation=cfg.get_str("model.activation", "relu"))


def _method(cfg: Config):
    name = cfg.get_str("train.method", "erm").lower()
    if name == "erm":
        return ERM()
    if name == "mixup":
        return Mixup(alpha=cfg.get_float("train.mixup_alpha", 1.0))
    if name == "coded":
        return Coded(mu=cfg.get_float("train.mu", 0.5),
                     gamma=cfg.get_float("train.gamma", 1.5),
                     n_schedule=cfg.get_str("train.n_schedule", "linear_ramp"))
    raise ValidationError(f"unknown train.method {name!r}")


def _method_desc(method) -> str:
    if isinstance(method, ERM):
        return "erm"
    if isinstance(method, Mixup):
        return f"mixup alpha={method.alpha:g}"
    return f"coded mu={method.mu:g} gamma={method.gamma:g} schedule={method.n_schedule}"


def _train_plan(cfg: Config, seed_override=None) -> TrainPlan:
    seed = seed_override if seed_override is not None else cfg.get_int("train.seed", 0)
    decay = cfg.get_int_list("train.lr_decay_epochs", [])
    return TrainPlan(
        dataset=_dataset_spec(cfg),
        model=_model_spec(cfg),
        epochs=cfg.get_int("train.epochs", 100),
        batch_size=cfg.get_int("train.batch_size", 128),
        lr=cfg.get_float("train.lr", 0.05),
        lr_decay_epochs=tuple(decay),
        momentum=cfg.get_float("train.momentum", 0.9),
        seed=seed,
        method=_method(cfg),
    )


def _plan_echo(plan: TrainPlan) -> dict:
    echo = {
        "data.kind": plan.dataset.kind,
        "data.n_train": plan.dataset.n_train,
        "data.n_test": plan.dataset.n_test,
        "data.noise": repr(plan.dataset.noise),
        "data.seed": plan.dataset.seed,
        "model.widths": ",".join(str(w) for w in plan.model.widths),
        "model.activation": plan.model.activation,
        "train.epochs": plan.epochs,
        "train.batch_size": plan.batch_size,
        "train.lr": repr(plan.lr),
        "train.lr_decay_epochs": ",".join(str(e) for e in plan.lr_decay_epochs),
        "train.momentum": repr(plan.momentum),
        "train.seed": plan.seed,
    }
    m = plan.method
    if isinstance(m, ERM):
        echo["train.method"] = "erm"
    elif isinstance(m, Mixup):
        echo["train.method"] = "mixup"
        echo["train.mixup_alpha"] = repr(m.alpha)
    else:
        echo["train.method"] = "coded"
        echo["train.mu"] = repr(m.mu)
        echo["train.gamma"] = repr(m.gamma)
        echo["train.n_schedule"] = m.n_schedule
    return echo


def cmd_train(cfg: Config, out_dir, seed_override=None) -> dict:
    plan = _train_plan(cfg, seed_override)
    model, metrics = train(plan)
    _ensure_out(out_dir)
    _write(out_dir, "metrics.csv", metrics.to_csv())
    save_model(os.path.join(out_dir, "model.bin"), model, plan.seed,
               _method_desc(plan.method))
    _echo_config(out_dir, _plan_echo(plan))
    print(f"final test metric: {metrics.final_test_metric:.17g}")
    return {"model": model, "metrics": metrics, "plan": plan}


# ---------------------------------------------------------------- attack

def cmd_attack(cfg: Config, model_path, out_dir, seed_override=None) -> dict:
    model, header = load_model(model_path)
    cfg_widths = cfg.get_int_list("model.widths")
    if cfg_widths is not None and tuple(cfg_widths) != model.spec.widths:
        raise ValidationError(f"model file widths {model.spec.widths} do not match "
                              f"config model.widths {tuple(cfg_widths)}")
    cfg_act = cfg.get_str("model.activation")
    if cfg_act is not None and cfg_act != model.spec.activation:
        raise ValidationError(f"model file activation {model.spec.activation!r} does not "
                              f"match config {cfg_act!r}")

    dspec = _dataset_spec(cfg)
    if task_of(dspec.kind) != "classification":
        raise ValidationError("attack evaluation needs a classification dataset")
    data = make_dataset(dspec)

    seed = seed_override if seed_override is not None else cfg.get_int("attack.seed", 0)
    epsilon = cfg.get_float("attack.epsilon", 0.1)
    steps = cfg.get_int("attack.steps", 10)
    step_size = cfg.get_float("attack.step_size", None)
    random_start = cfg.get_bool("attack.random_start", True)
    trials = cfg.get_int("attack.trials", 20)
    k_prime = cfg.get_int("attack.k_prime", 128)
    n_prime = cfg.get_int("attack.n_prime", int(round(1.5 * k_prime)))
    kind = cfg.get_str("attack.kind", "all").lower()

    attacks = [("none", None),
               ("fgsm", FGSMSpec(epsilon=epsilon)),
               (f"pgd{steps}", PGDSpec(epsilon=epsilon, steps=steps,
                                       step_size=step_size, random_start=random_start))]
    if kind != "all":
        attacks = [(nm, a) for nm, a in attacks if nm.startswith(kind)]
        if not attacks:
            raise ValidationError(f"unknown attack.kind {kind!r}")
    modes = [("standard", Standard()),
             ("rci", RCI(n_prime=n_prime, k_prime=k_prime, seed=seed))]

    method = header.get("method", "unknown")
    rows = ["method,inference_mode,attack,epsilon,steps,N_prime,seed,accuracy\n"]
    results = {}
    for attack_name, attack in attacks:
        for mode_name, mode in modes:
            acc = robust_eval(model, data.test_x, data.test_y, attack, mode,
                              trials=trials, seed=seed)
            results[(attack_name, mode_name)] = acc
            n_steps = steps if attack_name.startswith("pgd") else (1 if attack_name == "fgsm" else 0)
            eps_out = 0.0 if attack is None else epsilon
            npr = n_prime if mode_name == "rci" else 0
            rows.append(f"{method},{mode_name},{attack_name},{eps_out:.17g},"
                        f"{n_steps},{npr},{seed},{acc:.17g}\n")
            print(f"{attack_name:>6s} | {mode_name:>8s} | accuracy {acc:.4f}")

    _ensure_out(out_dir)
    _write(out_dir, "results.csv", "".join(rows))
    echo = {
        "data.kind": dspec.kind, "data.n_train": dspec.n_train,
        "data.n_test": dspec.n_test, "data.noise": repr(dspec.noise),
        "data.seed": dspec.seed,
        "attack.kind": kind, "attack.epsilon": repr(epsilon),
        "attack.steps": steps,
        "attack.random_start": str(random_start).lower(),
        "attack.trials": trials, "attack.k_prime": k_prime,
        "attack.n_prime": n_prime, "attack.seed": seed,
    }
    if step_size is not None:
        echo["attack.step_size"] = repr(step_size)
    _echo_config(out_dir, echo)
    return {"results": results, "model": model}


# ---------------------------------------------------------------- simulate

def cmd_simulate(cfg: Config, out_dir, seed_override=None) -> dict:
    fn_name = cfg.get_str("sim.fn", "sin")
    if fn_name not in BENCH_FUNCTIONS:
        raise ValidationError(f"unknown function {fn_name!r}; have {sorted(BENCH_FUNCTIONS)}")
    k = cfg.get_int("sim.K", 16)
    n_list = cfg.get_int_list("sim.N_list", [32, 64, 128, 256])
    s_list = cfg.get_int_list("sim.S_list", [0])
    seeds = cfg.get_int_list("sim.seeds", [0])
    policy = cfg.get_str("sim.policy", "uniform_random")
    input_seed = (seed_override if seed_override is not None
                  else cfg.get_int("sim.input_seed", 0))
    if not n_list:
        raise ValidationError("sim.N_list must not be empty")
    if not s_list:
        raise ValidationError("sim.S_list must not be empty")
    if policy not in POLICIES:
        raise ValidationError(f"unknown policy {policy!r}; have {POLICIES}")

    f = BENCH_FUNCTIONS[fn_name]
    x = sample_inputs(k, input_seed)
    report = sweep(f, x, n_list, s_list, seeds, policy)

    _ensure_out(out_dir)
    _write(out_dir, "sim_sweep.csv", report.to_csv())
    means = report.cell_means()
    try:
        exponent = fit_scaling_exponent(report)
        print(f"fitted exponent: {exponent:.3f}")
    except ValidationError as err:
        exponent = None
        print(f"fitted exponent: unavailable ({err})")

    positive = all(m > 0 for m in means.values())
    if positive and len(n_list) > 1:
        series = []
        for s in s_list:
            series.append((f"S={s}", list(n_list), [means[(n, s)] for n in n_list]))
        svg = line_plot_svg(series, xlabel="workers N", ylabel="mean MSE",
                            title=f"straggler sweep ({fn_name})", loglog=True)
        _write(out_dir, "sim_sweep.svg", svg)

    summary = {"fn": fn_name, "K": k, "policy": policy,
               "cells": len(means), "runs": len(report.rows),
               "exponent": exponent}
    _write(out_dir, "report.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _echo_config(out_dir, {
        "sim.fn": fn_name, "sim.K": k,
        "sim.N_list": ",".join(str(n) for n in n_list),
        "sim.S_list": ",".join(str(s) for s in s_list),
        "sim.seeds": ",".join(str(s) for s in seeds),
        "sim.policy": policy, "sim.input_seed": input_seed,
    })
    return {"report": report, "exponent": exponent}


# ---------------------------------------------------------------- sweep

_SWEEP_PARAMS = ("mu", "N", "gamma", "batch_size")


def _sweep_plan(base: TrainPlan, param: str, value: float) -> TrainPlan:
    method = base.method
    if param in ("mu", "gamma", "N") and not isinstance(method, Coded):
        raise ValidationError(f"sweep over {param!r} requires train.method=coded")
    if param == "mu":
        return replace(base, method=Coded(mu=value, gamma=method.gamma,
                                          n_schedule=method.n_schedule))
    if param == "gamma":
        return replace(base, method=Coded(mu=method.mu, gamma=value,
                                          n_schedule=method.n_schedule))
    if param == "N":
        # target final coded-sample count; reached by ramping gamma = N/K
        n_target = int(round(value))
        if n_target < base.batch_size:
            raise ValidationError(f"N={n_target} below batch size {base.batch_size}")
        return replace(base, method=Coded(mu=method.mu,
                                          gamma=n_target / base.batch_size,
                                          n_schedule="linear_ramp"))
    if param == "batch_size":
        return replace(base, batch_size=int(round(value)))
    raise ValidationError(f"unknown sweep param {param!r}; have {_SWEEP_PARAMS}")


def _sweep_cell(args):
    plan, param, value, seed = args
    cell_plan = replace(plan, seed=seed)
    _, metrics = train(cell_plan)
    last = metrics.records[-1]
    return (param, value, seed, last.test_metric, last.loss_main,
            last.loss_coded, last.n_coded)


def cmd_sweep(cfg: Config, out_dir, threads: int = 1, seed_override=None) -> dict:
    param = cfg.get_str("sweep.param")
    if param not in _SWEEP_PARAMS:
        raise ValidationError(f"sweep.param must be one of {_SWEEP_PARAMS}, got {param!r}")
    values = cfg.get_float_list("sweep.values")
    if not values:
        raise ValidationError("sweep.values must not be empty")
    seeds = cfg.get_int_list("sweep.seeds", [0, 1, 2, 3, 4])
    base = _train_plan(cfg, seed_override)

    cells = [(_sweep_plan(base, param, v), param, v, s) for v in values for s in seeds]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]

    # merge in deterministic parameter order (already generated in order)
    out = ["param,value,seed,test_metric,loss_main,loss_coded,N_final\n"]
    for param_name, value, seed, metric, lm, lc, nf in rows:
        out.append(f"{param_name},{value:.17g},{seed},{metric:.17g},"
                   f"{lm:.17g},{lc:.17g},{nf}\n")
    _ensure_out(out_dir)
    _write(out_dir, "sweep.csv", "".join(out))
    echo = _plan_echo(base)
    echo.update({"sweep.param": param,
                 "sweep.values": ",".join(repr(v) for v in values),
                 "sweep.seeds": ",".join(str(s) for s in seeds)})
    _echo_config(out_dir, echo)
    print(f"sweep over {param}: {len(rows)} cells")
    return {"rows": rows}


# ---------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="codedsmooth",
                                description="coded-smoothing experiments")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("points", help="print encoding/decoding point sets")
    sp.add_argument("K", type=int, nargs="?")
    sp.add_argument("N", type=int, nargs="?")
    sp.add_argument("--config")

    for name in ("lemma1", "train", "simulate", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        if name == "sweep":
            sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("attack")
    sp.add_argument("--config")
    sp.add_argument("--model", required=True)
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_cfg(args.config)
        if args.command == "points":
            k = args.K if args.K is not None else cfg.get_int("points.K")
            n = args.N if args.N is not None else cfg.get_int("points.N")
            if k is None or n is None:
                raise ValidationError("points: K and N required (args or config)")
            cmd_points(k, n)
        elif args.command == "lemma1":
            cmd_lemma1(cfg, args.out or "runs/lemma1", args.seed)
        elif args.command == "train":
            cmd_train(cfg, args.out or "runs/train", args.seed)
        elif args.command == "attack":
            cmd_attack(cfg, args.model, args.out or "runs/attack", args.seed)
        elif args.command == "simulate":
            cmd_simulate(cfg, args.out or "runs/simulate", args.seed)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.out or "runs/sweep", args.threads, args.seed)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
