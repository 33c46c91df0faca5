"""Command-line interface.

Subcommands: synth, train, classify, rr, eval, stream, bench.
Exit codes: 0 success, 1 configuration error, 2 data error.
"""

import argparse
import json
import sys

import numpy as np

from . import io as io_mod
from . import pipeline, synth
from .errors import BedrrError, ConfigError
from .server import TcpIngest
from .signal import DEFAULT_FS, DEFAULT_SIGMA


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bedrr",
        description="Respiratory-rate estimation from load-sensor waveforms")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labelled recording")
    p.add_argument("--scenario", choices=sorted(synth.BUILTIN_SCRIPTS),
                   default="rest")
    p.add_argument("--script", help="JSON script file overriding --scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fs", type=int, default=DEFAULT_FS)
    p.add_argument("--out", required=True, help="output path prefix")

    p = sub.add_parser("train", help="train a reliability model")
    p.add_argument("--kind", required=True,
                   choices=["direct", "energy", "svm", "mlp", "rnn"])
    p.add_argument("--waveform", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--variance", type=float, default=0.95)
    p.add_argument("--components", type=int, default=None)
    p.add_argument("--svm-c", type=float, default=2.0, dest="C")
    p.add_argument("--gamma", type=float, default=0.4)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--lr0", type=float, default=0.001)
    p.add_argument("--lr-decay", type=float, default=0.99)
    p.add_argument("--l2", type=float, default=1e-6)
    p.add_argument("--width", type=int, default=50)
    p.add_argument("--dropout", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("classify", help="label every frame of a recording")
    p.add_argument("--model", required=True)
    p.add_argument("--waveform", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rr", help="per-minute estimates from labels + waveform")
    p.add_argument("--waveform", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="compare estimates with ground truth")
    p.add_argument("--estimates", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--json", dest="json_out", help="also write the report as JSON")

    p = sub.add_parser("stream", help="serve one TCP sender and estimate live")
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--out", required=True, help="estimates JSONL output")
    p.add_argument("--labels-out", help="optional labels JSONL output")

    p = sub.add_parser("bench", help="per-stage cost report on a 1-minute input")
    p.add_argument("--model", action="append", default=[],
                   metavar="KIND=PATH", help="model file per kind (repeatable)")
    p.add_argument("--waveform", help="1-minute input; synthesized when omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--no-kernel-compare", action="store_true")
    return parser


def _script_from_json(path: str, seed: int) -> synth.ScenarioScript:
    with open(path) as fh:
        doc = json.load(fh)
    actions = []
    for a in doc.get("actions", []):
        actions.append(synth.Action(
            kind=a["kind"],
            duration_s=float(a["duration_s"]),
            rr_bpm=a.get("rr_bpm"),
            amplitude=a.get("amplitude"),
            bursts=tuple(a.get("bursts", ())),
        ))
    if not actions:
        raise ConfigError(f"{path}: script holds no actions")
    return synth.ScenarioScript(actions=tuple(actions),
                                seed=int(doc.get("seed", seed)))


def _cmd_synth(args) -> int:
    if args.script:
        script = _script_from_json(args.script, args.seed)
    else:
        script = synth.BUILTIN_SCRIPTS[args.scenario](args.seed)
    labelled = synth.gen_scenario(script, fs=args.fs)
    io_mod.write_waveform_jsonl(f"{args.out}.waveform.jsonl", labelled.record,
                                chunk_s=60.0)
    io_mod.write_labels(f"{args.out}.labels.jsonl", labelled.labels)
    io_mod.write_truth(f"{args.out}.truth.jsonl", labelled.truth)
    print(f"wrote {labelled.record.duration_s / 60:.1f} min "
          f"({labelled.labels.size} frames, {len(labelled.truth)} truth windows) "
          f"to {args.out}.*")
    return 0


def _cmd_train(args) -> int:
    record = io_mod.read_waveform_jsonl(args.waveform)
    labels = io_mod.read_labels(args.labels,
                                n_frames=record.samples.size // record.fs)
    model, metrics = pipeline.train_model(
        args.kind, record, labels, sigma=args.sigma, radius=args.radius,
        variance=args.variance, n_components=args.components, C=args.C,
        gamma=args.gamma, folds=args.folds, epochs=args.epochs,
        batch=args.batch, lr0=args.lr0, lr_decay=args.lr_decay, l2=args.l2,
        width=args.width, hidden=(100, 100, 100), dropout=args.dropout,
        seed=args.seed)
    pipeline.save_model(args.out, model)
    print(f"{args.kind}: held-out error={metrics['error']:.4f} "
          f"precision={metrics['precision']:.4f} recall={metrics['recall']:.4f}")
    print(f"model written to {args.out}")
    return 0


def _cmd_classify(args) -> int:
    model = pipeline.load_model(args.model)
    record = io_mod.read_waveform_jsonl(args.waveform)
    labels = pipeline.classify_batch(model, record)
    io_mod.write_labels(args.out, labels)
    covered = int((labels >= 0).sum())
    print(f"labelled {covered}/{labels.size} frames "
          f"({int((labels == 1).sum())} reliable)")
    return 0


def _cmd_rr(args) -> int:
    record = io_mod.read_waveform_jsonl(args.waveform)
    labels = io_mod.read_labels(args.labels,
                                n_frames=record.samples.size // record.fs)
    estimates = pipeline.estimate_rr(labels, record)
    io_mod.write_estimates(args.out, estimates)
    emitted = sum(1 for e in estimates if e.has_estimate)
    print(f"{emitted}/{len(estimates)} minutes carry an estimate")
    return 0


def _cmd_eval(args) -> int:
    estimates = io_mod.read_estimates(args.estimates)
    truth = io_mod.read_truth(args.truth)
    report = pipeline.evaluate(estimates, truth)
    for name in ("peaks", "ht"):
        print(f"{name:6s} mean e = {report.mean_e[name]:.4f} "
              f"over {report.n_compared[name]} minutes")
    print(f"minutes with truth but no estimate: {report.n_missing}")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump({"mean_e": report.mean_e,
                       "n_compared": report.n_compared,
                       "n_missing": report.n_missing,
                       "rows": report.rows}, fh)
            fh.write("\n")
    return 0


def _cmd_stream(args) -> int:
    model = pipeline.load_model(args.model)
    session = pipeline.StreamSession(model)
    parser = io_mod.WaveformLineParser()
    with TcpIngest(args.port, host=args.host) as ingest, \
            open(args.out, "w") as out:
        print(f"listening on {args.host}:{args.port}", file=sys.stderr)
        for line in ingest.lines():
            chunk = parser.feed(line)
            if chunk is None:
                continue
            for est in session.push(chunk):
                out.write(io_mod.estimate_to_json(est) + "\n")
                out.flush()
        for est in session.finish():
            out.write(io_mod.estimate_to_json(est) + "\n")
    if args.labels_out:
        labels = np.full(session.n_samples // model.fs, -1, dtype=np.int8)
        for frame, y in session.labels.items():
            if 1 <= frame <= labels.size:
                labels[frame - 1] = y
        io_mod.write_labels(args.labels_out, labels)
    print(f"{len(session.estimates)} minutes processed, "
          f"{parser.malformed} malformed lines skipped", file=sys.stderr)
    return 0


def _cmd_bench(args) -> int:
    models = {}
    for spec in args.model:
        if "=" not in spec:
            raise ConfigError(f"--model expects KIND=PATH, got {spec!r}")
        kind, path = spec.split("=", 1)
        models[kind] = pipeline.load_model(path)
    if args.waveform:
        record = io_mod.read_waveform_jsonl(args.waveform)
    else:
        script = synth.rest_script(minutes=1.0, seed=args.seed)
        record = synth.gen_scenario(script).record
    report = pipeline.benchmark(models, record, repeats=args.repeats,
                                compare_kernels=not args.no_kernel_compare)
    print(report.format())
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "classify": _cmd_classify,
    "rr": _cmd_rr,
    "eval": _cmd_eval,
    "stream": _cmd_stream,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BedrrError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
