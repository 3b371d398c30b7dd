"""Command-line experiment runner.

Subcommands: run (evolve one model over a beta grid under a chosen ordering
scheme), train (learn an ordering policy), scaling (system-size sweep with
adaptive beta), hamming (distance matrix between trained greedy protocols),
replay-list (show bundled schedules). Config values come from defaults, then
an optional JSON config file, then command-line flags.

Every output CSV starts with a manifest comment line:
# manifest schema=<name>/v1 config_sha=<hex> seed=<int> deterministic=<bool> [k=v ...]
Exit codes: 0 success, 2 configuration/parse error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .env import EnvConfig, OrderingEnv
from .errors import (
    InvalidArgumentError,
    LoadError,
    NotConvergedError,
    NumericError,
    ParseError,
    StepIntervalTooLargeError,
)
from .models import (
    SkSpec,
    TfimSpec,
    adaptive_beta,
    build_sk,
    build_tfim,
    ground_probability,
    ground_solution,
    sample_sk,
)
from .nets import load_checkpoint, save_checkpoint
from .ppo import TrainConfig, greedy_rollout, train
from .qite import (
    IteTracker,
    OrderingSchedule,
    QiteConfig,
    fixture_schedule,
    fixture_sk_spec,
    load_fixture,
    randomized_schedule,
    replay_schedule,
    run_qite,
    standard_schedule,
    term_label,
)
from .env import hamming_distance
from .states import expectation, plus_state

DEFAULTS = {
    "model": "tfim",
    "num_qubits": 4,
    "J": 1.0,
    "h": 1.0,
    "couplings": "table3",
    "beta": 0.9,
    "num_trotter_steps": 4,
    "domain_size": 2,
    "regularization_cutoff": 1e-8,
    "negative_norm_policy": "continue",
    "scheme": "standard",
    "replay": "table2",
    "checkpoint": None,
    "randomized_seed": None,
    "episode_length": 16,
    "reward_mode": "shaped",
    "beta_grid": None,
    "n_grid": [2, 3, 4, 5],
    "gap_target": 1e-3,
    "seed": 0,
    "deterministic": False,
    "out": "out",
    "train": {
        "iterations": 300,
        "num_evaluators": 4,
        "episodes_per_evaluator": 1,
        "clip_epsilon": 0.2,
        "gamma": 0.99,
        "update_steps": 4,
        "entropy_coeff": 0.01,
        "value_coeff": 0.5,
        "learning_rate": 3e-4,
        "hidden": [128, 128, 128, 128],
    },
}


def resolve_config(args) -> dict:
    """defaults <- config file <- flags; rejects unknown keys."""
    cfg = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot read config {args.config!r}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON in config {args.config!r}: {exc}") from None
        if not isinstance(user, dict):
            raise ParseError("config file must hold a JSON object")
        for key, value in user.items():
            if key not in cfg:
                raise ParseError(f"unknown config key {key!r}")
            if key == "train":
                if not isinstance(value, dict):
                    raise ParseError("config key 'train' must be an object")
                for tkey, tvalue in value.items():
                    if tkey not in cfg["train"]:
                        raise ParseError(f"unknown config key 'train.{tkey}'")
                    cfg["train"][tkey] = tvalue
            else:
                cfg[key] = value
    for flag in ("seed", "out", "scheme", "replay", "checkpoint", "beta_grid", "n_grid"):
        value = getattr(args, flag, None)
        if value is not None:
            cfg[flag] = value
    if getattr(args, "deterministic", None):
        cfg["deterministic"] = True
    if cfg["seed"] < 0:
        raise ParseError("seed must be >= 0")
    return cfg


def config_sha(cfg: dict) -> str:
    """Hash of the resolved experiment config, excluding output plumbing."""
    body = {k: v for k, v in cfg.items() if k != "out"}
    blob = json.dumps(body, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def parse_beta_grid(text: str):
    """start:stop:step, inclusive of stop up to float round-off."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError(f"beta grid {text!r} is not start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ParseError(f"beta grid {text!r} has a non-numeric field") from None
    if step <= 0 or stop < start:
        raise ParseError("beta grid needs step > 0 and stop >= start")
    return [round(float(b), 10) for b in np.arange(start, stop + step / 2, step)]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def manifest_line(schema: str, sha: str, seed: int, deterministic: bool, **extra) -> str:
    parts = [
        f"# manifest schema={schema}/v1",
        f"config_sha={sha}",
        f"seed={seed}",
        f"deterministic={_fmt(deterministic)}",
    ]
    parts.extend(f"{k}={_fmt(v)}" for k, v in extra.items())
    return " ".join(parts)


def write_csv(path, manifest: str, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(manifest + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) if not isinstance(x, str) else x for x in row])
    print(f"wrote {path}")


def build_model(cfg: dict):
    """Hamiltonian plus its exact ground solution."""
    if cfg["model"] == "tfim":
        h = build_tfim(TfimSpec(cfg["num_qubits"], cfg["J"], cfg["h"]))
    elif cfg["model"] == "sk":
        couplings = cfg["couplings"]
        if couplings == "table3":
            spec = fixture_sk_spec()
            if cfg["num_qubits"] != spec.num_qubits:
                raise ParseError(
                    f"table3 couplings are for {spec.num_qubits} qubits, "
                    f"config says {cfg['num_qubits']}"
                )
        elif couplings == "random":
            spec = sample_sk(cfg["num_qubits"], cfg["seed"])
        elif isinstance(couplings, list):
            spec = SkSpec(
                cfg["num_qubits"],
                tuple((i - 1, j - 1, float(v)) for i, j, v in couplings),
            )
        else:
            raise ParseError(f"couplings must be table3, random, or a list; got {couplings!r}")
        h = build_sk(spec)
    else:
        raise ParseError(f"model must be tfim or sk, got {cfg['model']!r}")
    return h, ground_solution(h)


def make_qite_config(cfg: dict, beta: float) -> QiteConfig:
    return QiteConfig(
        beta=beta,
        num_trotter_steps=cfg["num_trotter_steps"],
        domain_size=cfg["domain_size"],
        regularization_cutoff=cfg["regularization_cutoff"],
        negative_norm_policy=cfg["negative_norm_policy"],
    )


def make_schedule(cfg: dict, h, beta: float, trained_params=None) -> OrderingSchedule:
    scheme = cfg["scheme"]
    n = cfg["num_trotter_steps"]
    if scheme == "standard":
        return standard_schedule(h, n)
    if scheme == "randomized":
        seed = cfg["randomized_seed"]
        if seed is None:
            seed = cfg["seed"]
        return randomized_schedule(h, n, seed)
    if scheme == "replay":
        source = cfg["replay"]
        if source in ("table2", "table4"):
            schedule = fixture_schedule(source, h)
        else:
            data = load_fixture(source)
            if "rows" not in data:
                raise ParseError(f"schedule file {source!r} has no rows")
            schedule = replay_schedule(data["rows"], h)
        if schedule.num_steps != n:
            raise ParseError(
                f"replay schedule has {schedule.num_steps} steps, config says {n}"
            )
        return schedule
    if scheme == "trained":
        if trained_params is None:
            raise ParseError("scheme 'trained' requires a checkpoint")
        env = OrderingEnv(
            EnvConfig(
                make_qite_config(cfg, beta),
                h,
                episode_length=cfg["episode_length"],
                reward_mode=cfg["reward_mode"],
            )
        )
        schedule, _, _ = greedy_rollout(trained_params, env)
        return schedule
    raise ParseError(f"scheme must be standard|randomized|replay|trained, got {scheme!r}")


def fidelity_to_ground(state, gsol) -> float:
    return float(np.sqrt(ground_probability(state, gsol)))


def cmd_run(cfg: dict) -> int:
    h, gsol = build_model(cfg)
    init = plus_state(h.num_qubits)
    grid = (
        parse_beta_grid(cfg["beta_grid"])
        if cfg["beta_grid"]
        else [float(cfg["beta"])]
    )
    sha = config_sha(cfg)
    trained_params = None
    if cfg["scheme"] == "trained":
        if not cfg["checkpoint"]:
            raise ParseError("scheme 'trained' requires --checkpoint")
        trained_params, _ = load_checkpoint(cfg["checkpoint"])

    total_ops = cfg["num_trotter_steps"] * len(h.terms)

    def one_beta(beta: float):
        qcfg = make_qite_config(cfg, beta)
        schedule = make_schedule(cfg, h, beta, trained_params)
        oracle = IteTracker(h, init, beta, total_ops)
        try:
            final, trace = run_qite(h, init, qcfg, schedule, oracle)
        except (StepIntervalTooLargeError, NumericError) as exc:
            raise type(exc)(f"beta={beta:g}: {exc}") from None
        pgs = ground_probability(final, gsol)
        return beta, trace, expectation(final, h), fidelity_to_ground(final, gsol), pgs

    results = []
    with ThreadPoolExecutor(max_workers=min(4, len(grid))) as pool:
        futures = [pool.submit(one_beta, beta) for beta in grid]
        for fut in futures:
            results.append(fut.result())

    os.makedirs(cfg["out"], exist_ok=True)
    summary_rows = []
    for beta, trace, energy, fid, pgs in results:
        summary_rows.append(
            (beta, cfg["scheme"], energy, fid, pgs, trace.alg_error[-1])
        )
        trace_rows = [
            (k, term_label(h.terms[j]), e, a, f)
            for k, j, e, a, f in zip(
                trace.k, trace.term_index, trace.energy, trace.alg_error,
                trace.fidelity_to_target,
            )
        ]
        write_csv(
            os.path.join(cfg["out"], f"trace_{cfg['scheme']}_b{beta:g}.csv"),
            manifest_line(
                "qite-trace", sha, cfg["seed"], cfg["deterministic"],
                model=cfg["model"], scheme=cfg["scheme"], beta=float(beta),
                e_gs=gsol.energy,
            ),
            ("k", "term_label", "energy", "alg_error", "fidelity"),
            trace_rows,
        )
    write_csv(
        os.path.join(cfg["out"], "run_summary.csv"),
        manifest_line(
            "run-summary", sha, cfg["seed"], cfg["deterministic"],
            model=cfg["model"], e_gs=gsol.energy,
        ),
        ("beta", "scheme", "E", "fidelity", "P_gs", "eps_alg_final"),
        summary_rows,
    )
    return 0


def cmd_train(cfg: dict) -> int:
    h, gsol = build_model(cfg)
    ecfg = EnvConfig(
        make_qite_config(cfg, float(cfg["beta"])),
        h,
        episode_length=cfg["episode_length"],
        reward_mode=cfg["reward_mode"],
    )
    tcfg = TrainConfig(
        iterations=cfg["train"]["iterations"],
        seed=cfg["seed"],
        num_evaluators=cfg["train"]["num_evaluators"],
        episodes_per_evaluator=cfg["train"]["episodes_per_evaluator"],
        clip_epsilon=cfg["train"]["clip_epsilon"],
        gamma=cfg["train"]["gamma"],
        update_steps=cfg["train"]["update_steps"],
        entropy_coeff=cfg["train"]["entropy_coeff"],
        value_coeff=cfg["train"]["value_coeff"],
        learning_rate=cfg["train"]["learning_rate"],
        hidden=tuple(cfg["train"]["hidden"]),
        reward_mode=cfg["reward_mode"],
        deterministic=cfg["deterministic"],
    )
    result = train(tcfg, lambda ev: OrderingEnv(ecfg))

    os.makedirs(cfg["out"], exist_ok=True)
    sha = config_sha(cfg)
    write_csv(
        os.path.join(cfg["out"], "learning_curve.csv"),
        manifest_line(
            "learning-curve", sha, cfg["seed"], cfg["deterministic"],
            model=cfg["model"], e_std=float(ecfg.e_std), e_gs=gsol.energy,
        ),
        ("iteration", "mean_reward", "best_E", "wall_time_s"),
        [
            (p.iteration, p.mean_reward, p.best_energy, p.wall_time_s)
            for p in result.curve
        ],
    )
    ckpt = os.path.join(cfg["out"], "checkpoint.bin")
    save_checkpoint(ckpt, result.params, result.adam)
    print(f"wrote {ckpt}")
    best_path = os.path.join(cfg["out"], "best_schedule.json")
    best_rows = result.best_schedule or []
    with open(best_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "model": cfg["model"],
                "num_qubits": cfg["num_qubits"],
                "best_energy": result.best_energy,
                "e_std": float(ecfg.e_std),
                "rows": [[term_label(h.terms[j]) for j in row] for row in best_rows],
            },
            fh,
            indent=1,
        )
    print(f"wrote {best_path}")
    manifest_path = os.path.join(cfg["out"], "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump({"config": cfg, "config_sha": sha}, fh, indent=1, sort_keys=True)
    print(f"wrote {manifest_path}")
    return 0


def cmd_scaling(cfg: dict) -> int:
    if cfg["model"] != "tfim":
        raise ParseError("scaling sweep supports model=tfim only")
    sha = config_sha(cfg)
    rows = []
    for num_qubits in cfg["n_grid"]:
        h = build_tfim(TfimSpec(int(num_qubits), cfg["J"], cfg["h"]))
        gsol = ground_solution(h)
        init = plus_state(h.num_qubits)
        beta = adaptive_beta(h, init, cfg["gap_target"])
        qcfg = make_qite_config(cfg, beta)

        std_final, _ = run_qite(
            h, init, qcfg, standard_schedule(h, cfg["num_trotter_steps"]), trace=False
        )
        e_std = expectation(std_final, h)
        f_std = fidelity_to_ground(std_final, gsol)

        ecfg = EnvConfig(
            qcfg, h, episode_length=cfg["episode_length"],
            reward_mode=cfg["reward_mode"],
        )
        seed_n = int(np.random.SeedSequence([cfg["seed"], int(num_qubits)]).generate_state(1)[0])
        tcfg = TrainConfig(
            iterations=cfg["train"]["iterations"],
            seed=seed_n,
            num_evaluators=cfg["train"]["num_evaluators"],
            episodes_per_evaluator=cfg["train"]["episodes_per_evaluator"],
            clip_epsilon=cfg["train"]["clip_epsilon"],
            gamma=cfg["train"]["gamma"],
            update_steps=cfg["train"]["update_steps"],
            entropy_coeff=cfg["train"]["entropy_coeff"],
            value_coeff=cfg["train"]["value_coeff"],
            learning_rate=cfg["train"]["learning_rate"],
            hidden=tuple(cfg["train"]["hidden"]),
            reward_mode=cfg["reward_mode"],
            deterministic=cfg["deterministic"],
        )
        result = train(tcfg, lambda ev: OrderingEnv(ecfg))
        if result.best_schedule is not None:
            best = OrderingSchedule(
                cfg["num_trotter_steps"], [list(r) for r in result.best_schedule]
            )
        else:
            best = standard_schedule(h, cfg["num_trotter_steps"])
        rl_final, _ = run_qite(h, init, qcfg, best, trace=False)
        e_rl = expectation(rl_final, h)
        f_rl = fidelity_to_ground(rl_final, gsol)
        rows.append((int(num_qubits), beta, e_std, e_rl, e_rl / e_std, f_std, f_rl))

    os.makedirs(cfg["out"], exist_ok=True)
    write_csv(
        os.path.join(cfg["out"], "scaling.csv"),
        manifest_line(
            "scaling", sha, cfg["seed"], cfg["deterministic"],
            model=cfg["model"], gap_target=float(cfg["gap_target"]),
        ),
        ("N", "beta", "E_std", "E_RL", "ratio", "F_std", "F_RL"),
        rows,
    )
    return 0


def cmd_hamming(cfg: dict, checkpoints) -> int:
    if len(checkpoints) < 2:
        raise ParseError("hamming needs at least two checkpoints")
    h, _ = build_model(cfg)
    ecfg = EnvConfig(
        make_qite_config(cfg, float(cfg["beta"])),
        h,
        episode_length=cfg["episode_length"],
        reward_mode=cfg["reward_mode"],
    )
    protocols = []
    for path in checkpoints:
        params, _ = load_checkpoint(path)
        if (
            params.spec.input_dim != ecfg.observation_size
            or params.spec.policy_dim != ecfg.action_size
        ):
            raise ParseError(
                f"checkpoint {path!r} dims ({params.spec.input_dim}, "
                f"{params.spec.policy_dim}) do not match the environment "
                f"({ecfg.observation_size}, {ecfg.action_size})"
            )
        _, _, actions = greedy_rollout(params, OrderingEnv(ecfg))
        protocols.append(actions)

    size = len(protocols)
    names = [f"p{i}" for i in range(size)]
    rows = []
    for i in range(size):
        row = [names[i]]
        for j in range(size):
            row.append(hamming_distance(protocols[i], protocols[j]))
        rows.append(tuple(row))
    os.makedirs(cfg["out"], exist_ok=True)
    write_csv(
        os.path.join(cfg["out"], "hamming.csv"),
        manifest_line(
            "hamming-matrix", config_sha(cfg), cfg["seed"], cfg["deterministic"],
            model=cfg["model"],
        ),
        ("protocol", *names),
        rows,
    )
    return 0


def cmd_replay_list() -> int:
    for name in ("table2", "table3", "table4"):
        data = load_fixture(name)
        if "rows" in data:
            shape = f"{len(data['rows'])} steps x {len(data['rows'][0])} terms"
            print(f"{name}: model={data['model']} num_qubits={data['num_qubits']} {shape}")
        else:
            print(
                f"{name}: model={data['model']} num_qubits={data['num_qubits']} "
                f"{len(data['couplings'])} couplings"
            )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rlqite",
        description="Ordering-steered imaginary-time evolution experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument(
            "--deterministic", action="store_const", const=True, default=None,
            help="zero wall-clock fields and fully seeded streams",
        )
        p.add_argument("--out", help="output directory")

    p_run = sub.add_parser("run", help="evolve one model over a beta grid")
    common(p_run)
    p_run.add_argument("--beta-grid", dest="beta_grid", help="start:stop:step")
    p_run.add_argument(
        "--scheme", choices=("standard", "randomized", "replay", "trained")
    )
    p_run.add_argument("--replay", help="table2, table4, or a schedule JSON path")
    p_run.add_argument("--checkpoint", help="checkpoint for scheme=trained")

    p_train = sub.add_parser("train", help="train an ordering policy")
    common(p_train)

    p_scaling = sub.add_parser("scaling", help="system-size sweep, adaptive beta")
    common(p_scaling)
    p_scaling.add_argument(
        "--n-grid", dest="n_grid",
        type=lambda s: [int(x) for x in s.split(",")],
        help="comma-separated qubit counts",
    )

    p_hamming = sub.add_parser("hamming", help="greedy-protocol distance matrix")
    common(p_hamming)
    p_hamming.add_argument("checkpoints", nargs="+", help="two or more checkpoints")

    sub.add_parser("replay-list", help="list bundled schedules")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay-list":
            return cmd_replay_list()
        cfg = resolve_config(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "scaling":
            return cmd_scaling(cfg)
        if args.command == "hamming":
            return cmd_hamming(cfg, args.checkpoints)
        raise ParseError(f"unknown command {args.command!r}")
    except (ParseError, LoadError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, StepIntervalTooLargeError, NotConvergedError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
