"""Command-line interface: ``rnnclust <subcommand> --help`` for details.

Machines are given as a built-in name (``tomita3``, ``tomita5``,
``tomita7``) or as a path to an automaton file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import automata, cluster, construct, data, extract, metrics, probe, rnn, runner
from . import separability, train
from .exceptions import RnnClustError


def _machine(spec: str) -> automata.FiniteStateMachine:
    if spec in automata.BUILTIN:
        return automata.BUILTIN[spec]()
    return automata.load(spec)


def _h0(model: rnn.RnnModel) -> np.ndarray:
    h0 = model.meta.get("h0")
    return model.zero_state() if h0 is None else np.asarray(h0, dtype=float)


def _dataset(args, machine):
    if getattr(args, "dataset", None):
        return data.load_dataset(args.dataset)
    return data.sample_dataset(machine, args.dataset_size, (1, args.max_len),
                               args.val_size / args.dataset_size, seed=args.data_seed)


def _add_dataset_args(p):
    p.add_argument("--dataset", help="dataset TSV written by a previous command")
    p.add_argument("--dataset-size", type=int, default=12000)
    p.add_argument("--val-size", type=int, default=2000)
    p.add_argument("--max-len", type=int, default=15)
    p.add_argument("--data-seed", type=int, default=0)


def _print_metrics(rec: metrics.MetricsRecord):
    print(json.dumps({**rec.as_row(), "num_points": rec.num_points}, sort_keys=True))


def cmd_gen(args):
    if args.builtin:
        m = automata.BUILTIN[args.builtin]()
    else:
        m = automata.generate_random(args.kind, args.states, args.symbols, args.outputs, args.seed)
    if args.output:
        automata.save(m, args.output)
    else:
        sys.stdout.write(automata.dumps(m))
    if args.dot:
        Path(args.dot).write_text(automata.to_dot(m), encoding="utf-8")


def cmd_train(args):
    machine = _machine(args.machine)
    ds = _dataset(args, machine)
    hidden = args.hidden or machine.num_transitions
    model = rnn.init_model(args.arch, args.layers, hidden, machine.num_symbols, machine.num_classes,
                           args.seed)
    cfg = train.TrainConfig(learning_rate=args.lr, max_epochs=args.epochs, seed=args.seed,
                            per_prefix_loss=not args.final_step_loss)
    model, hist = train.train(model, ds, cfg, machine)
    rnn.save_model(model, args.output)
    if args.history:
        hist.save(args.history)
    if args.save_dataset:
        data.save_dataset(ds, args.save_dataset)
    print(f"validation accuracy {hist.records[-1].val_acc:.4f} after {hist.records[-1].epoch} epochs")


def cmd_construct(args):
    machine = _machine(args.machine)
    if args.preset is not None:
        params = construct.PRESETS[args.preset]
    else:
        params = construct.ConstructionParams(args.H_r, args.H_o, args.wn)
    model = construct.encode_dfa(machine, params, seed=args.seed)
    h0 = construct.initial_hidden(model, machine, params)
    if args.noise:
        model = construct.perturb(model, params.wn, args.seed)
    if args.retrain:
        ds = _dataset(args, machine)
        cfg = train.TrainConfig(max_epochs=args.epochs, seed=args.seed)
        model, hist = train.train(model, ds, cfg, machine, h0=h0)
        print(f"validation accuracy after retraining {hist.records[-1].val_acc:.4f}")
    model.meta["h0"] = h0.tolist()
    rnn.save_model(model, args.output)
    construct.save_provenance(Path(args.output).with_suffix(".provenance.tsv"), machine, params,
                              args.seed)


def cmd_probe(args):
    machine = _machine(args.machine)
    model = rnn.load_model(args.model)
    ds = _dataset(args, machine)
    hq = probe.collect_hq(machine, model, _h0(model), ds.val_words)
    probe.dump_hq(hq, args.output)
    if args.save_dataset:
        data.save_dataset(ds, args.save_dataset)
    print(f"{len(hq)} records, {hq.distinct_hidden()} distinct hidden vectors")


def cmd_cluster(args):
    hq = probe.load_hq(args.hq)
    idx = np.arange(len(hq))
    if args.subsample < 1:
        idx = cluster.subsample_indices(len(hq), args.subsample, args.seed)
    pts = hq.hidden[idx]
    if args.method == "kmeans":
        k = args.k if args.k else runner.k_from_factor(args.k_factor, hq.num_states)
        a = cluster.kmeans(pts, k, args.seed)
    elif args.method == "dbscan":
        a = cluster.dbscan(pts, args.eps, args.min_neighbors)
    elif args.method == "optics":
        a = cluster.optics(pts)
    else:
        bw = args.bw if args.bw else cluster.estimate_bandwidth(pts) / args.bw_divisor
        a = cluster.mean_shift(pts, bw)
        a.params["alpha_divisor"] = None if args.bw else args.bw_divisor
    a.params["subsample"] = args.subsample
    if args.output:
        Path(args.output).write_text(a.to_tsv(), encoding="utf-8")
        Path(args.output).with_suffix(".json").write_text(
            json.dumps({**a.sidecar(), "point_indices": idx.tolist()}, sort_keys=True) + "\n",
            encoding="utf-8")
    _print_metrics(metrics.ambiguity(hq.states[idx], a.labels, hq.num_states))


def cmd_classify(args):
    hq = probe.load_hq(args.hq)
    clf = separability.fit_classifier(hq, args.method)
    _print_metrics(separability.classifier_ambiguity(clf, hq))
    if args.projection:
        Path(args.projection).write_text(separability.projection_tsv(separability.project_2d(hq)),
                                         encoding="utf-8")


def _read_labels(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()[1:]
    return np.array([int(l.split("\t")[1]) for l in lines if l.strip()], dtype=np.int64)


def cmd_extract(args):
    machine = _machine(args.machine)
    ds = data.load_dataset(args.dataset)
    hq = probe.load_hq(args.hq, words=ds.val_words)
    model = rnn.load_model(args.model)
    labels = _read_labels(args.labels)
    ca = extract.extract_automaton(hq, labels, model, machine.kind)
    report = extract.verify_against_ground_truth(ca, machine, ds.val_words)
    if args.output:
        automata.save(ca.to_machine(machine.alphabet, machine.output_alphabet or None, complete=True),
                      args.output)
    if args.report:
        extract.save_report(report, args.report)
    print(json.dumps(report, sort_keys=True))


def cmd_curve(args):
    machine = _machine(args.machine)
    ds = _dataset(args, machine)
    cfg = train.TrainConfig(max_epochs=args.epochs, seed=args.seed)
    points, rho = runner.track_training_curve(machine, args.arch, args.seed, ds, cfg, args.k_factor)
    text = runner.curve_tsv(points, rho)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    print(f"spearman {rho}")


def cmd_report(args):
    rows = [r for path in args.results for r in runner.read_rows(path)]
    agg = runner.report(rows)
    text = runner.format_report(agg) + "\n" + runner.perfect_count_table(agg)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_run(args):
    if args.config:
        cfg = runner.ExperimentConfig.load(args.config)
    else:
        cfg = runner.profile(args.profile)
    if args.out:
        cfg.output_dir = args.out
    rows = runner.run_experiment(cfg)
    print(f"{len(rows)} rows written to {cfg.output_dir}/results.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rnnclust", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a built-in or random automaton")
    p.add_argument("--builtin", choices=sorted(automata.BUILTIN))
    p.add_argument("--kind", choices=("dfa", "moore"), default="dfa")
    p.add_argument("--states", type=int, default=5)
    p.add_argument("--symbols", type=int, default=2)
    p.add_argument("--outputs", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.add_argument("--dot", help="also write a DOT rendering here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a network on words labelled by a machine")
    p.add_argument("machine")
    p.add_argument("--arch", choices=rnn.ARCHITECTURES, default="gru")
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--hidden", type=int, help="hidden size (default: number of transitions)")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.0005)
    p.add_argument("--final-step-loss", action="store_true",
                   help="score only the last output of each word")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history", help="per-epoch TSV")
    p.add_argument("--save-dataset")
    p.add_argument("-o", "--output", required=True)
    _add_dataset_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("construct", help="encode a DFA into an Elman network")
    p.add_argument("machine")
    p.add_argument("--preset", type=int, choices=range(len(construct.PRESETS)))
    p.add_argument("--H-r", dest="H_r", type=float, default=1.5)
    p.add_argument("--H-o", dest="H_o", type=float, default=1.5)
    p.add_argument("--wn", type=float, default=0.05)
    p.add_argument("--noise", action="store_true", help="perturb the weights with N(0, wn^2)")
    p.add_argument("--retrain", action="store_true")
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    _add_dataset_args(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("probe", help="collect (hidden, state) records on the validation words")
    p.add_argument("machine")
    p.add_argument("model")
    p.add_argument("--save-dataset", help="write the dataset so later steps can reuse its words")
    p.add_argument("-o", "--output", required=True)
    _add_dataset_args(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("cluster", help="cluster a probe dump and report its ambiguity")
    p.add_argument("hq")
    p.add_argument("--method", choices=("kmeans", "dbscan", "optics", "mean_shift"), default="kmeans")
    p.add_argument("--k", type=int)
    p.add_argument("--k-factor", default="8n", help="k as a multiple of |Q|, e.g. n-1 or 6n")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--min-neighbors", type=int, default=5)
    p.add_argument("--bw", type=float)
    p.add_argument("--bw-divisor", type=float, default=4.0)
    p.add_argument("--subsample", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="labels TSV (a JSON sidecar is written next to it)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("classify", help="fit a linear probe and report its ambiguity")
    p.add_argument("hq")
    p.add_argument("--method", choices=sorted(separability.METHODS), default="logreg")
    p.add_argument("--projection", help="write the 2D LDA projection TSV here")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("extract", help="build and verify the cluster automaton")
    p.add_argument("machine")
    p.add_argument("model")
    p.add_argument("hq")
    p.add_argument("labels", help="labels TSV from 'cluster' (without subsampling)")
    p.add_argument("--dataset", required=True, help="dataset TSV whose validation words were probed")
    p.add_argument("-o", "--output", help="extracted machine (holes completed by a sink)")
    p.add_argument("--report")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("curve", help="accuracy and wamb per training epoch")
    p.add_argument("machine")
    p.add_argument("--arch", choices=rnn.ARCHITECTURES, default="gru")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-factor", default="8n")
    p.add_argument("-o", "--output")
    _add_dataset_args(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("report", help="aggregate result CSVs into summary tables")
    p.add_argument("results", nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="run a whole sweep from a JSON config or profile")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--config")
    g.add_argument("--profile", choices=("smoke", "desk", "paper", "construction"), default="smoke")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (RnnClustError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
