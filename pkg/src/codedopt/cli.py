"""Command line entry point: ``run``, ``construct``, ``encode-debug``, ``decode-debug``, ``simulate-timing``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import codec
from .codec import ErasedOutputs, UndecodableError, decode, encode, make_direction_set
from .config import ConfigError, ExperimentConfig, format_config, parse_config
from .construction import build_config
from .objectives import (
    SyntheticClassifier,
    data_path,
    l1_objective,
    l2sq_objective,
    load_l1_fixture,
    read_matrix_csv,
    targeted_attack_objective,
    untargeted_attack_objective,
)
from .optimizer import run_experiment
from .straggler import RuntimeDistribution, StoppingRule, run_iteration, sample_runtimes

TRACE_HEADER = "iteration,cost,elapsed_time,n_outputs_used,decoded,method,delta,seed"

RUN_NOTES = (
    f"butterfly_convention: {codec.BUTTERFLY_CONVENTION}",
    "es_normalization: 1/|received|",
    "hybrid_extra_evaluations: charged to the master at zero simulated time",
    "trace_cost: uncounted bookkeeping evaluation after each update",
)


def build_objective(cfg: ExperimentConfig):
    """Returns ``(objective, theta_init)``."""
    if cfg.objective in ("l1", "l2sq"):
        if cfg.matrix_file or cfg.vector_file:
            if not (cfg.matrix_file and cfg.vector_file):
                raise ConfigError("matrix_file", "matrix_file and vector_file go together")
            A = read_matrix_csv(cfg.matrix_file)
            b = read_matrix_csv(cfg.vector_file).ravel()
        else:
            A, b = load_l1_fixture()
        make = l1_objective if cfg.objective == "l1" else l2sq_objective
        try:
            f = make(A, b)
        except ValueError as exc:
            raise ConfigError("vector_file", str(exc)) from None
        return f, np.zeros(f.dim)

    model = SyntheticClassifier.load(cfg.model_dir or None)
    rng = np.random.default_rng([cfg.seed, 7])
    if cfg.theta0_file:
        theta0 = read_matrix_csv(cfg.theta0_file).ravel()
    else:
        theta0 = rng.standard_normal(model.n_inputs)
    if theta0.size != model.n_inputs:
        raise ConfigError("theta0_file", f"expected {model.n_inputs} entries, got {theta0.size}")
    predicted = int(model.predict(theta0))
    if cfg.objective == "targeted_attack":
        target = cfg.target_class
        if target < 0:
            target = int(rng.choice([k for k in range(model.n_classes) if k != predicted]))
        if target >= model.n_classes:
            raise ConfigError("target_class", f"must be < {model.n_classes}")
        f = targeted_attack_objective(model, theta0, target, cfg.attack_c, cfg.attack_kappa,
                                      literal=cfg.attack_literal_eq14)
        f.target = target
    else:
        true_class = predicted if cfg.true_class < 0 else cfg.true_class
        if true_class >= model.n_classes:
            raise ConfigError("true_class", f"must be < {model.n_classes}")
        f = untargeted_attack_objective(model, theta0, true_class, cfg.attack_c, cfg.attack_kappa)
        f.true_class = true_class
    f.model = model
    f.theta0 = theta0
    return f, theta0.copy()


def build_runtime(cfg: ExperimentConfig) -> RuntimeDistribution:
    if cfg.runtime_dist == "empirical":
        return RuntimeDistribution.from_file(cfg.runtime_file or data_path("lambda_runtimes.txt"))
    return RuntimeDistribution.shifted_exponential(cfg.shift, cfg.rate)


def build_rule(cfg: ExperimentConfig, code):
    if cfg.stopping_rule == "first_k":
        return StoppingRule.first_k(cfg.first_k)
    if cfg.stopping_rule == "all":
        return StoppingRule.all()
    return StoppingRule.first_decodable(code)


def run_config(cfg: ExperimentConfig, callback=None):
    """Build everything ``cfg`` names and run it; returns ``(traces, objective)``."""
    objective, theta_init = build_objective(cfg)
    if objective.dim != cfg.d:
        raise ConfigError("d", f"d={cfg.d} does not match objective dimension {objective.dim}")
    code = build_config(cfg.d, cfg.N, cfg.design_erasure)
    traces = run_experiment(
        objective,
        cfg.method,
        None if cfg.method == "fd" else code,
        build_rule(cfg, code),
        build_runtime(cfg),
        cfg.iterations,
        cfg.seed,
        delta=cfg.delta,
        optimizer=cfg.optimizer,
        step_size=cfg.step_size,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        eps_adam=cfg.adam_eps,
        theta_init=theta_init,
        freeze_diag=cfg.freeze_diag,
        decode_cost=cfg.decode_cost,
        callback=callback,
    )
    return traces, objective


def _g(x) -> str:
    return f"{x:.12g}"


def emit_trace(traces, path, seed, config: ExperimentConfig | None = None) -> Path:
    """Write the CSV trace; with ``config``, also ``<path>.config`` echoing every setting."""
    if not traces:
        raise ValueError("no trace rows to write")
    path = Path(path)
    rows = [TRACE_HEADER]
    for t in traces:
        rows.append(",".join([
            str(t.iteration), _g(t.cost), _g(t.elapsed_time), str(t.n_outputs_used),
            "1" if t.decoded else "0", t.method, _g(t.delta), str(seed),
        ]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")
    if config is not None:
        with open(config_echo_path(path), "w", newline="\n") as fh:
            fh.write(format_config(config, RUN_NOTES))
    return path


def config_echo_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".config")


def _parse_csv_line(line, n=None):
    fields_ = [x.strip() for x in line.strip().split(",")]
    if n is not None and len(fields_) != n:
        raise ValueError(f"expected {n} comma-separated values, got {len(fields_)}")
    return fields_


def _signs(text, d):
    if text is None:
        return np.ones(d)
    vals = np.array([float(x) for x in _parse_csv_line(text, d)])
    return vals


def _add_code_args(p):
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--design-erasure", "--design_erasure", dest="design_erasure", type=float, default=0.5)


def _build_parser():
    parser = argparse.ArgumentParser(prog="codedopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write a CSV trace")
    run.add_argument("--config", help="key = value configuration file")
    for f in fields(ExperimentConfig):
        names = [f"--{f.name}"]
        if "_" in f.name:
            names.append(f"--{f.name.replace('_', '-')}")
        if f.type == "bool":
            run.add_argument(*names, dest=f.name, action=argparse.BooleanOptionalAction, default=argparse.SUPPRESS)
        else:
            run.add_argument(*names, dest=f.name, default=argparse.SUPPRESS)
    run.add_argument("--quiet", action="store_true")

    con = sub.add_parser("construct", help="print the frozen/information channel split")
    _add_code_args(con)

    enc = sub.add_parser("encode-debug", help="encode an input block given as CSV lines")
    _add_code_args(enc)
    enc.add_argument("--signs", help="comma-separated +-1 diagonal; default all +1")
    enc.add_argument("--input", help="file (or - for stdin) with N CSV lines of d values; "
                                     "default: the unit-vector input block")

    dec = sub.add_parser("decode-debug", help="decode one CSV line of N outputs; empty fields are erased")
    _add_code_args(dec)
    dec.add_argument("--signs", help="comma-separated +-1 diagonal to divide out")
    dec.add_argument("--input", default="-", help="file or - for stdin")

    sim = sub.add_parser("simulate-timing", help="compare stopping rules over sampled schedules")
    _add_code_args(sim)
    sim.add_argument("--runtime-dist", "--runtime_dist", dest="runtime_dist", default="shifted_exponential",
                     choices=["shifted_exponential", "empirical"])
    sim.add_argument("--runtime-file", "--runtime_file", dest="runtime_file", default="")
    sim.add_argument("--shift", type=float, default=1.0)
    sim.add_argument("--rate", type=float, default=0.5)
    sim.add_argument("--schedules", type=int, default=1000)
    sim.add_argument("--first-k", "--first_k", dest="first_k", type=int, default=0)
    sim.add_argument("--seed", type=int, default=0)
    return parser


def _read_text(src):
    return sys.stdin.read() if src == "-" else Path(src).read_text()


def cmd_run(args):
    overrides = {f.name: getattr(args, f.name) for f in fields(ExperimentConfig) if hasattr(args, f.name)}
    cfg = parse_config(args.config, overrides)
    traces, _ = run_config(cfg)
    emit_trace(traces, cfg.output, cfg.seed, cfg)
    if not args.quiet:
        last = traces[-1]
        print(f"wrote {len(traces)} rows to {cfg.output}; final cost {_g(last.cost)}, "
              f"elapsed {_g(last.elapsed_time)}")


def cmd_construct(args):
    code = build_config(args.d, args.N, args.design_erasure)
    print(f"N = {code.n_total}")
    print(f"d = {code.n_params}")
    print(f"rate = {code.n_params}/{code.n_total}")
    print(f"design_erasure = {code.design_erasure!r}")
    print("z_values = " + ",".join(_g(z) for z in code.z_values))
    print("frozen = " + ",".join(str(i) for i in sorted(code.frozen_set)))
    print("info_channels = " + ",".join(str(i) for i in code.info_channels))


def cmd_encode(args):
    code = build_config(args.d, args.N, args.design_erasure)
    if args.input is None:
        out = make_direction_set(code, _signs(args.signs, code.n_params)).directions
    else:
        lines = [ln for ln in _read_text(args.input).splitlines() if ln.strip()]
        if len(lines) != code.n_total:
            raise ValueError(f"expected {code.n_total} input lines, got {len(lines)}")
        block = np.array([[float(x) for x in _parse_csv_line(ln)] for ln in lines])
        out = encode(code, block)
    for row in np.atleast_2d(out):
        print(",".join(_g(x) for x in row))


def cmd_decode(args):
    code = build_config(args.d, args.N, args.design_erasure)
    line = next((ln for ln in _read_text(args.input).splitlines() if ln.strip()), "")
    entries = _parse_csv_line(line, code.n_total)
    available = np.array([e != "" for e in entries])
    values = np.array([float(e) if e else 0.0 for e in entries])
    decoded = decode(code, ErasedOutputs(values, available))
    decoded = decoded / _signs(args.signs, code.n_params)
    print(",".join(_g(x) for x in decoded))


def cmd_simulate(args):
    code = build_config(args.d, args.N, args.design_erasure)
    if args.runtime_dist == "empirical":
        dist = RuntimeDistribution.from_file(args.runtime_file or data_path("lambda_runtimes.txt"))
    else:
        dist = RuntimeDistribution.shifted_exponential(args.shift, args.rate)
    rules = {"first_decodable": StoppingRule.first_decodable(code), "all": StoppingRule.all()}
    if args.first_k:
        rules[f"first_{args.first_k}"] = StoppingRule.first_k(args.first_k)
    stops = {name: [] for name in rules}
    admitted = {name: [] for name in rules}
    dummy = np.zeros(code.n_total)
    for s in range(args.schedules):
        schedule = sample_runtimes(dist, code.n_total, np.random.default_rng([args.seed, s]))
        for name, rule in rules.items():
            out, t = run_iteration(schedule, rule, dummy)
            stops[name].append(t)
            admitted[name].append(out.n_available)
    print("rule,mean_stop_time,mean_admitted,min_admitted")
    for name in rules:
        print(f"{name},{_g(np.mean(stops[name]))},{_g(np.mean(admitted[name]))},{min(admitted[name])}")


COMMANDS = {
    "run": cmd_run,
    "construct": cmd_construct,
    "encode-debug": cmd_encode,
    "decode-debug": cmd_decode,
    "simulate-timing": cmd_simulate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except UndecodableError as exc:
        print(f"error: undecodable: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
