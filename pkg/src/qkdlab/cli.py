"""command line front end.

subcommands: simulate, reconcile, keyrate, bench, train, predict, gendata,
tune.  every command accepts --seed and --config (a JSON file of defaults;
explicit flags win over the file, the file wins over built-ins) and prints a
single machine-readable JSON summary line on success.

exit codes: 0 success, 1 protocol abort, 2 verification failure, 3 usage
error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import amplify, autoencoder, benchmarks, cascade, dataset, keyrate, protocol
from .channel import ChannelParams, analytic_qber, channel_state

EXIT_OK = 0
EXIT_ABORT = 1
EXIT_VERIFY = 2
EXIT_USAGE = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so we control the exit code."""

    def error(self, message):
        raise UsageError(message)


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def _resolve(args, config, defaults):
    """flag > config file > default, per parameter name."""
    out = {}
    for name, default in defaults.items():
        flag_val = getattr(args, name, None)
        if flag_val is not None:
            out[name] = flag_val
        elif name in config:
            out[name] = config[name]
        else:
            out[name] = default
    return out


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _parse_floats(text: str, count: int, what: str):
    parts = [p for p in str(text).split(",") if p != ""]
    if len(parts) != count:
        raise UsageError(f"{what} needs exactly {count} comma-separated values")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise UsageError(f"{what}: {exc}") from None


def _parse_ints(text: str, what: str):
    try:
        return [int(p) for p in str(text).split(",") if p != ""]
    except ValueError as exc:
        raise UsageError(f"{what}: {exc}") from None


# ---------------------------------------------------------------- commands


def _cmd_simulate(args, config):
    p = _resolve(args, config, {
        "n": None, "theta": 0.0, "q": 0.0,
        "test_fraction": protocol.DEFAULT_TEST_FRACTION,
        "threshold": protocol.DEFAULT_QBER_THRESHOLD,
        "seed": 0, "out": None,
    })
    if p["n"] is None:
        raise UsageError("simulate needs --n")
    params = ChannelParams(theta=float(p["theta"]), q=float(p["q"]))
    session = protocol.run_session(
        int(p["n"]), params, test_fraction=float(p["test_fraction"]),
        qber_threshold=float(p["threshold"]), seed=int(p["seed"]),
    )
    if p["out"] is not None:
        with open(p["out"], "w", encoding="ascii") as fh:
            fh.write(protocol.session_to_json(session))
    _emit({
        "command": "simulate",
        "n_raw": session.n_raw,
        "n_sifted": session.n_sifted,
        "n_test": session.n_test,
        "qber_est": session.qber_est,
        "qber_true": session.qber_true,
        "aborted": session.aborted,
        "out": p["out"],
    })
    return EXIT_ABORT if session.aborted else EXIT_OK


def _cmd_reconcile(args, config):
    p = _resolve(args, config, {
        "session": None, "passes": cascade.DEFAULT_PASSES, "seed": 0, "out": None,
        "security_margin": amplify.DEFAULT_SECURITY_MARGIN, "entropy_conservative": False,
    })
    if p["session"] is None:
        raise UsageError("reconcile needs --session")
    try:
        session = protocol.session_from_json(_read_text(p["session"]))
    except (json.JSONDecodeError, ValueError, KeyError) as exc:
        raise UsageError(f"corrupted session file: {exc}") from None
    if session.aborted:
        _emit({"command": "reconcile", "aborted": True})
        return EXIT_ABORT

    seed = int(p["seed"])
    result = cascade.run_cascade(
        session.alice_key, session.bob_key, session.qber_est,
        cascade.CascadeConfig(n_passes=int(p["passes"]),
                              seed=dataset.stage_seed(seed, dataset._STREAM_CASCADE)),
    )
    verify_seed = dataset.stage_seed(seed, dataset._STREAM_HASH)
    verified = amplify.verify_keys(session.alice_key, result.corrected_bob_key, verify_seed)

    if p["out"] is not None:
        with open(f"{p['out']}.transcript.ndjson", "w", encoding="ascii") as fh:
            fh.write(cascade.transcript_to_ndjson(result.transcript))

    leak_total = (result.transcript.leak_ab_bits + result.transcript.leak_ba_bits
                  + session.n_test)
    if p["entropy_conservative"]:
        entropy_rate = max(0.0, 1.0 - keyrate.binary_entropy(min(0.5, session.qber_est)))
    else:
        entropy_rate = dataset.entropy_rate_for(session.params)
    plan = amplify.AmplificationPlan(
        input_len=session.n_sifted, leak_total=leak_total, entropy_rate=entropy_rate,
        security_margin=int(p["security_margin"]),
    )
    final_key = np.zeros(0, dtype=np.uint8)
    toeplitz_seed = dataset.stage_seed(seed, dataset._STREAM_TOEPLITZ)
    if verified and plan.output_len > 0:
        final_key = amplify.privacy_amplify(session.alice_key, plan, toeplitz_seed)
    if p["out"] is not None and verified:
        amplify.write_final_key(p["out"], final_key, plan, toeplitz_seed, verify_seed)

    summary = {
        "command": "reconcile",
        "n": session.n_sifted,
        "leak_ab_bits": result.transcript.leak_ab_bits,
        "leak_ba_bits": result.transcript.leak_ba_bits,
        "n_test": session.n_test,
        "measured_f": result.measured_f,
        "final_mismatch": result.transcript.final_mismatch,
        "verified": verified,
        "entropy_rate": entropy_rate,
        "final_key_len": int(final_key.size) if verified else 0,
        "out": p["out"],
    }
    if p["out"] is not None:
        with open(f"{p['out']}.result.json", "w", encoding="ascii") as fh:
            fh.write(json.dumps(summary, sort_keys=True) + "\n")
    _emit(summary)
    return EXIT_OK if verified else EXIT_VERIFY


def _cmd_keyrate(args, config):
    p = _resolve(args, config, {
        "theta": 0.0, "q": 0.0, "f_eff": 1.2, "rep_rate": 1.0, "seed": 0,
    })
    params = ChannelParams(theta=float(p["theta"]), q=float(p["q"]))
    rho = channel_state(params)
    e = analytic_qber(params)
    f_val = keyrate.objective(rho, keyrate.VARIANT_F)
    fp_val = keyrate.objective(rho, keyrate.VARIANT_F_PRIME)
    kraus = keyrate.build_kraus(keyrate.VARIANT_F)
    report = keyrate.key_rate(
        entropy_per_signal=f_val,
        p_pass=kraus.p_pass,
        delta_leak_bits=keyrate.delta_leak(float(p["f_eff"]), e),
        repetition_rate=float(p["rep_rate"]),
        qber=e,
        objective_f=f_val,
        objective_f_prime=fp_val,
    )
    _emit({
        "command": "keyrate",
        "theta": params.theta,
        "q": params.q,
        "qber": e,
        "h_qber": keyrate.binary_entropy(e),
        "objective_f": f_val,
        "objective_f_prime": fp_val,
        "objective_gap": report.objective_gap,
        "p_pass": report.p_pass,
        "delta_leak": report.delta_leak,
        "rate_per_signal": report.rate,
        "rate_per_sifted": report.rate / report.p_pass,
        "rate_bps": report.rate_bps,
    })
    return EXIT_OK


def _cmd_bench(args, config):
    p = _resolve(args, config, {
        "sizes": "10000,100000,1000000", "trials": 1, "model": None, "seed": 0, "out": None,
    })
    sizes = _parse_ints(p["sizes"], "--sizes")
    if p["model"] is not None:
        model = autoencoder.load_model(p["model"])
    else:
        model = autoencoder.init_model([3, *autoencoder.DEFAULT_HIDDEN, 2], seed=int(p["seed"]))
    rows, summary = benchmarks.bench(sizes, model, trials=int(p["trials"]), seed=int(p["seed"]))
    if p["out"] is not None:
        benchmarks.save_csv(rows, p["out"])
    _emit({
        "command": "bench",
        "rows": [[r.n, r.cascade_seconds, r.inference_seconds, r.traditional_model_seconds]
                 for r in rows],
        "out": p["out"],
        **summary,
    })
    return EXIT_OK


def _cmd_train(args, config):
    p = _resolve(args, config, {
        "data": None, "epochs": 100, "lr": 0.001, "batch_size": 64, "l1": 0.0,
        "pretrain_epochs": 0, "seed": 0, "out": None,
    })
    if p["data"] is None:
        raise UsageError("train needs --data")
    records = dataset.load_csv(p["data"])
    x, y = dataset.to_features(records)
    cfg = autoencoder.TrainConfig(
        lr=float(p["lr"]), epochs=int(p["epochs"]), batch_size=int(p["batch_size"]),
        l1=float(p["l1"]), seed=int(p["seed"]), pretrain_epochs=int(p["pretrain_epochs"]),
    )
    model, trace = autoencoder.train((x, y), cfg)
    if p["out"] is not None:
        autoencoder.save_model(model, p["out"])
    checkpoints = {str(e): loss for e, loss in model.loss_trace
                   if e in (1, 13, 50, 70, 100)}
    _emit({
        "command": "train",
        "records": len(records),
        "epochs": cfg.epochs,
        "final_loss": trace[-1].loss,
        "checkpoint_losses": checkpoints,
        "out": p["out"],
    })
    return EXIT_OK


def _cmd_predict(args, config):
    p = _resolve(args, config, {"model": None, "features": None, "seed": 0})
    if p["model"] is None or p["features"] is None:
        raise UsageError("predict needs --model and --features")
    model = autoencoder.load_model(p["model"])
    feats = _parse_floats(p["features"], 3, "--features")
    qber_pred, fraction_pred = autoencoder.predict_session(model, feats)
    _emit({
        "command": "predict",
        "features": feats,
        "qber_pred": qber_pred,
        "key_len_fraction_pred": fraction_pred,
    })
    return EXIT_OK


def _cmd_gendata(args, config):
    p = _resolve(args, config, {
        "records": dataset.DEFAULT_RECORDS, "rate_min": 1000.0, "rate_max": 156_000_000.0,
        "q_min": 0.0, "q_max": dataset.DEFAULT_Q_MAX, "theta": 0.0, "seed": 0,
        "jobs": 1, "entropy_conservative": False, "out": None,
    })
    if p["out"] is None:
        raise UsageError("gendata needs --out")
    q_min = float(p["q_min"])
    q_max = float(p["q_max"])
    theta = float(p["theta"])
    if not 0.0 <= q_min <= q_max <= 1.0:
        raise UsageError("need 0 <= q-min <= q-max <= 1")

    def sampler(rng):
        return ChannelParams(theta=theta, q=float(rng.uniform(q_min, q_max)))

    records = dataset.generate(
        int(p["records"]), float(p["rate_min"]), float(p["rate_max"]),
        channel_sampler=sampler, master_seed=int(p["seed"]), jobs=int(p["jobs"]),
        conservative_entropy=bool(p["entropy_conservative"]),
    )
    dataset.save_csv(records, p["out"])
    fractions = [r.final_key_len / r.n_initial for r in records]
    _emit({
        "command": "gendata",
        "records": len(records),
        "mean_qber_true": float(np.mean([r.qber_true for r in records])),
        "mean_final_fraction": float(np.mean(fractions)),
        "out": p["out"],
    })
    return EXIT_OK


def _toy_quadratic(p, q, s):
    return -((p - 1.0) ** 2) - (q - 2.0) ** 2 - (s - 3.0) ** 2


def _cmd_tune(args, config):
    p = _resolve(args, config, {
        "model": None, "toy_quadratic": False, "init": "0,0,0", "step": 0.05,
        "iterations": 50, "k_max": None, "seed": 0,
    })
    if p["toy_quadratic"]:
        g = _toy_quadratic
    elif p["model"] is not None:
        g = autoencoder.key_length_surrogate(autoencoder.load_model(p["model"]))
    else:
        raise UsageError("tune needs --model or --toy-quadratic")
    init = _parse_floats(p["init"], 3, "--init")
    k_max = float("inf") if p["k_max"] is None else float(p["k_max"])
    params, trace = autoencoder.tune_parameters(
        g, init, step=float(p["step"]), iterations=int(p["iterations"]), k_max=k_max,
    )
    _emit({
        "command": "tune",
        "init": init,
        "params": [float(v) for v in params],
        "objective": float(g(*params)),
        "iterations": len(trace),
        "k_max": None if math.isinf(k_max) else k_max,
    })
    return EXIT_OK


# ------------------------------------------------------------------ wiring


def _build_parser() -> _Parser:
    parser = _Parser(prog="qkdlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, flags):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", default=None, help="JSON file of parameter defaults")
        for flag, kwargs in flags:
            sp.add_argument(flag, default=None, **kwargs)
        return sp

    add("simulate", "run one seeded session and write the sifted result", [
        ("--n", {"type": int, "help": "raw rounds"}),
        ("--theta", {"type": float, "help": "misalignment angle (radians)"}),
        ("--q", {"type": float, "help": "depolarizing weight"}),
        ("--test-fraction", {"type": float, "dest": "test_fraction"}),
        ("--threshold", {"type": float, "help": "abort threshold on the estimate"}),
        ("--seed", {"type": int}),
        ("--out", {"help": "session JSON path"}),
    ])
    add("reconcile", "cascade + verify + amplify a stored session", [
        ("--session", {"help": "session JSON path"}),
        ("--passes", {"type": int}),
        ("--seed", {"type": int}),
        ("--security-margin", {"type": int, "dest": "security_margin"}),
        ("--entropy-conservative", {"action": "store_const", "const": True,
                                    "dest": "entropy_conservative"}),
        ("--out", {"help": "output path prefix"}),
    ])
    add("keyrate", "objectives and rate for one channel configuration", [
        ("--theta", {"type": float}),
        ("--q", {"type": float}),
        ("--f-eff", {"type": float, "dest": "f_eff"}),
        ("--rep-rate", {"type": float, "dest": "rep_rate"}),
        ("--seed", {"type": int}),
    ])
    add("bench", "timing study against the calibrated dense-solver model", [
        ("--sizes", {"help": "comma-separated key lengths"}),
        ("--trials", {"type": int}),
        ("--model", {"help": "model JSON (default: fresh untrained net)"}),
        ("--seed", {"type": int}),
        ("--out", {"help": "CSV path"}),
    ])
    add("train", "fit the predictor on a generated corpus", [
        ("--data", {"help": "corpus CSV path"}),
        ("--epochs", {"type": int}),
        ("--lr", {"type": float}),
        ("--batch-size", {"type": int, "dest": "batch_size"}),
        ("--l1", {"type": float}),
        ("--pretrain-epochs", {"type": int, "dest": "pretrain_epochs"}),
        ("--seed", {"type": int}),
        ("--out", {"help": "model JSON path"}),
    ])
    add("predict", "one prediction from a saved model", [
        ("--model", {"help": "model JSON path"}),
        ("--features", {"help": "log10_n,attempt_index,qber_est"}),
        ("--seed", {"type": int}),
    ])
    add("gendata", "simulate a training corpus", [
        ("--records", {"type": int}),
        ("--rate-min", {"type": float, "dest": "rate_min"}),
        ("--rate-max", {"type": float, "dest": "rate_max"}),
        ("--q-min", {"type": float, "dest": "q_min"}),
        ("--q-max", {"type": float, "dest": "q_max"}),
        ("--theta", {"type": float}),
        ("--seed", {"type": int}),
        ("--jobs", {"type": int}),
        ("--entropy-conservative", {"action": "store_const", "const": True,
                                    "dest": "entropy_conservative"}),
        ("--out", {"help": "corpus CSV path"}),
    ])
    add("tune", "finite-difference ascent on predicted key length", [
        ("--model", {"help": "model JSON path"}),
        ("--toy-quadratic", {"action": "store_const", "const": True, "dest": "toy_quadratic"}),
        ("--init", {"help": "p,q,s start point"}),
        ("--step", {"type": float}),
        ("--iterations", {"type": int}),
        ("--k-max", {"type": float, "dest": "k_max"}),
        ("--seed", {"type": int}),
    ])
    return parser


_HANDLERS = {
    "simulate": _cmd_simulate,
    "reconcile": _cmd_reconcile,
    "keyrate": _cmd_keyrate,
    "bench": _cmd_bench,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "gendata": _cmd_gendata,
    "tune": _cmd_tune,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(getattr(args, "config", None))
        return _HANDLERS[args.command](args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
