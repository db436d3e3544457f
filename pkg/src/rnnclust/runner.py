"""Experiment orchestration: train or construct networks, probe, cluster, score.

A run is described by one JSON document (:class:`ExperimentConfig`). Every
(network, method, parameterisation) cell yields one :class:`ResultRow`;
rows are appended to ``results.partial.csv`` as they are produced and
rewritten in canonical order to ``results.csv`` at the end. Wall-clock
times go to ``timings.csv`` so that ``results.csv`` is reproducible byte for
byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import platform
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, automata, cluster, construct, data, extract, metrics, probe, rnn
from . import separability, train
from .exceptions import ConstantSequence, LengthMismatch, RnnClustError

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KMEANS_FACTORS = ("n-1", "n", "n+1", "2n", "4n", "6n", "8n")
DBSCAN_EPS = (0.25, 0.5, 1.0, 1.5, 2.0)
BANDWIDTH_DIVISORS = (1, 2, 4, 8)
SIZES = ("n", "1.5n", "2xn")


def k_from_factor(factor: str, n: int) -> int:
    """Evaluate a grid entry such as ``"n-1"`` or ``"6n"`` for ``n = |Q|``."""
    f = factor.replace(" ", "")
    if f.startswith("n"):
        return n + int(f[1:] or 0)
    if f.endswith("n"):
        return int(f[:-1]) * n
    return int(f)


def network_shape(size: str, num_transitions: int) -> tuple:
    """``(layers, hidden)`` for a size label; ``n`` is the number of transitions."""
    if size == "n":
        return 1, num_transitions
    if size == "1.5n":
        return 1, math.ceil(1.5 * num_transitions)
    if size == "2xn":
        return 2, num_transitions
    raise ValueError(f"unknown size {size!r}; choose from {SIZES}")


@dataclass
class ExperimentConfig:
    """Everything a sweep needs; see ``profile`` for the shipped presets.

    ``languages`` entries are ``{"builtin": name}``, ``{"file": path}`` or
    ``{"random": {"kind", "num_states", "alphabet_size", "num_outputs", "seed"}}``.
    A non-empty ``construction`` list switches from training from scratch to
    construct, perturb and retrain (``archs`` and ``sizes`` are then unused).
    """

    languages: list = field(default_factory=lambda: [{"builtin": "tomita5"}])
    archs: list = field(default_factory=lambda: ["gru"])
    sizes: list = field(default_factory=lambda: ["n"])
    seeds: list = field(default_factory=lambda: [0, 1])
    dataset_size: int = 12000
    validation_size: int = 2000
    len_range: tuple = (1, 15)
    train: dict = field(default_factory=dict)
    kmeans: list = field(default_factory=lambda: list(KMEANS_FACTORS))
    dbscan: list = field(default_factory=lambda: list(DBSCAN_EPS))
    optics: bool = True
    mean_shift: list = field(default_factory=lambda: list(BANDWIDTH_DIVISORS))
    subsample_fraction: float = 0.25
    classifiers: list = field(default_factory=lambda: ["lda", "logreg"])
    construction: list = field(default_factory=list)
    accuracy_cutoff: float = 0.8
    extract: bool = False
    save_artifacts: bool = False
    output_dir: str = "runs/default"

    def __post_init__(self):
        for name in ("languages", "seeds"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if not self.construction and not (self.archs and self.sizes):
            raise ValueError("archs and sizes must be non-empty when training from scratch")
        if not 0 <= self.accuracy_cutoff <= 1:
            raise ValueError("accuracy_cutoff must lie in [0, 1]")
        if not 0 < self.validation_size < self.dataset_size:
            raise ValueError("validation_size must be positive and below dataset_size")
        for a in self.archs:
            if a not in rnn.ARCHITECTURES:
                raise ValueError(f"unknown architecture {a!r}")
        for s in self.sizes:
            network_shape(s, 1)
        self.len_range = tuple(self.len_range)
        train.TrainConfig(**self.train)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        unknown = set(raw) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def profile(name: str, output_dir: str = None) -> ExperimentConfig:
    """Shipped presets: ``smoke`` (seconds), ``desk`` (~24 networks) and ``paper``.

    The full ``paper`` grid needs hours to days on one machine.
    """
    randoms = [{"random": {"kind": "dfa", "num_states": q, "alphabet_size": s, "seed": seed}}
               for q, s, seed in ((4, 2, 1), (5, 2, 2), (3, 3, 3))]
    tomitas = [{"builtin": f"tomita{k}"} for k in (3, 5, 7)]
    if name == "smoke":
        cfg = ExperimentConfig(languages=[{"builtin": "tomita5"}], seeds=[0], dataset_size=3000,
                               validation_size=500, train={"max_epochs": 40},
                               kmeans=["n", "8n"], dbscan=[0.5], mean_shift=[4], optics=False,
                               classifiers=["logreg"])
    elif name == "desk":
        cfg = ExperimentConfig(languages=tomitas + randoms, archs=["gru", "elman_tanh"])
    elif name == "paper":
        randoms = [{"random": {"kind": kind, "num_states": q, "alphabet_size": s, "seed": seed}}
                   for seed, (kind, q, s) in enumerate(
                       [(k, q, s) for k in ("dfa", "moore") for q in (4, 6, 8, 10) for s in (2, 4, 6)])]
        cfg = ExperimentConfig(languages=tomitas + randoms, sizes=list(SIZES),
                               archs=list(rnn.ARCHITECTURES), dataset_size=52000,
                               train={"max_epochs": 200})
    elif name == "construction":
        cfg = ExperimentConfig(languages=randoms, seeds=[0],
                               construction=[[p.H_r, p.H_o, p.wn] for p in construct.PRESETS],
                               train={"max_epochs": 60})
    else:
        raise ValueError(f"unknown profile {name!r}")
    if output_dir:
        cfg.output_dir = output_dir
    return cfg


def load_language(spec: dict) -> automata.FiniteStateMachine:
    if "builtin" in spec:
        name = spec["builtin"]
        if name not in automata.BUILTIN:
            raise ValueError(f"unknown built-in language {name!r}")
        return automata.BUILTIN[name]()
    if "file" in spec:
        return automata.load(spec["file"])
    if "random" in spec:
        return automata.generate_random(**spec["random"])
    raise ValueError(f"language spec needs 'builtin', 'file' or 'random': {spec}")


ROW_FIELDS = ("experiment_id", "language", "num_states", "num_symbols", "arch", "layers",
              "hidden_size", "seed", "rnn_accuracy", "method", "params", "num_clusters", "amb",
              "wamb", "perfect", "equivalent", "status", "error")


@dataclass
class ResultRow:
    experiment_id: str
    language: str
    num_states: int
    num_symbols: int
    arch: str
    layers: int
    hidden_size: int
    seed: int
    rnn_accuracy: float
    method: str
    params: str = ""
    num_clusters: Optional[int] = None
    amb: Optional[float] = None
    wamb: Optional[float] = None
    perfect: Optional[bool] = None
    equivalent: Optional[bool] = None
    status: str = "ok"
    error: str = ""
    runtime_ms: float = field(default=0.0, compare=False)

    def csv_values(self) -> list:
        out = []
        for name in ROW_FIELDS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append(str(v).lower())
            elif isinstance(v, float):
                out.append(repr(round(v, 12)))
            else:
                out.append(str(v))
        return out


def _row_key(row: ResultRow):
    return (row.experiment_id, _method_order(row.method, row.params), row.params)


class RowSink:
    """Single appender for result rows; ``finish`` writes the canonical CSV."""

    def __init__(self, out_dir: Optional[Path]):
        self.rows = []
        self.out_dir = out_dir
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            self._partial = open(out_dir / "results.partial.csv", "w", newline="", encoding="utf-8")
            self._writer = csv.writer(self._partial)
            self._writer.writerow(ROW_FIELDS)

    def add(self, row: ResultRow) -> None:
        self.rows.append(row)
        if self.out_dir is not None:
            self._writer.writerow(row.csv_values())
            self._partial.flush()

    def finish(self) -> list:
        self.rows.sort(key=_row_key)
        if self.out_dir is not None:
            self._partial.close()
            write_rows(self.rows, self.out_dir / "results.csv")
            with open(self.out_dir / "timings.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(("experiment_id", "method", "params", "runtime_ms"))
                for r in self.rows:
                    w.writerow((r.experiment_id, r.method, r.params, f"{r.runtime_ms:.1f}"))
            (self.out_dir / "results.partial.csv").unlink()
        return self.rows


def write_rows(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ROW_FIELDS)
        for r in rows:
            w.writerow(r.csv_values())


def read_rows(path) -> list:
    def parse(name, v):
        if v == "":
            return None if name not in ("params", "error", "status") else ""
        if name in ("num_states", "num_symbols", "layers", "hidden_size", "seed", "num_clusters"):
            return int(v)
        if name in ("rnn_accuracy", "amb", "wamb"):
            return float(v)
        if name in ("perfect", "equivalent"):
            return v == "true"
        return v

    with open(path, newline="", encoding="utf-8") as fh:
        return [ResultRow(**{k: parse(k, v) for k, v in rec.items()}) for rec in csv.DictReader(fh)]


@dataclass
class ProbedNetwork:
    """A network ready for evaluation, with its probe."""

    experiment_id: str
    language: str
    machine: automata.FiniteStateMachine
    model: rnn.RnnModel
    h0: np.ndarray
    accuracy: float
    seed: int
    hq: Optional[probe.HQSample] = None
    val_words: tuple = ()


def _base_row(net: ProbedNetwork, method: str, params: str = "") -> ResultRow:
    model = net.model
    return ResultRow(net.experiment_id, net.language, net.machine.num_states, net.machine.num_symbols,
                     model.arch, model.num_layers, model.hidden_size, net.seed, net.accuracy, method,
                     params)


def _cells(config: ExperimentConfig, hq: probe.HQSample, n: int, seed: int):
    """Yield ``(method, params, thunk)``; a thunk returns ``(labels, states)``."""
    for name in config.classifiers:
        def fit(name=name):
            return separability.fit_classifier(hq, name).predict(hq.hidden), hq.states
        yield name, "", fit
    for factor in config.kmeans:
        k = k_from_factor(factor, n)
        if k >= 1:
            yield "kmeans", f"k={factor}", lambda k=k: (cluster.kmeans(hq.hidden, k, seed).labels,
                                                         hq.states)
    for eps in config.dbscan:
        yield "dbscan", f"eps={eps:g}", lambda eps=eps: (cluster.dbscan(hq.hidden, eps).labels,
                                                          hq.states)
    if not (config.optics or config.mean_shift):
        return
    idx = cluster.subsample_indices(len(hq), config.subsample_fraction, seed)
    sub = hq.subset(idx)
    if config.optics:
        yield "optics", "", lambda: (cluster.optics(sub.hidden).labels, sub.states)
    alpha = []

    def bandwidth():
        if not alpha:
            alpha.append(cluster.estimate_bandwidth(sub.hidden))
        return alpha[0]

    for div in config.mean_shift:
        label = "bw=alpha" if div == 1 else f"bw=alpha/{div:g}"
        yield "mean_shift", label, lambda div=div: (
            cluster.mean_shift(sub.hidden, bandwidth() / div).labels, sub.states)


def evaluate_network(net: ProbedNetwork, config: ExperimentConfig, sink: RowSink,
                     artifact_dir: Optional[Path] = None) -> None:
    """Probe ``net`` and emit one row per classifier and clustering cell."""
    if net.hq is None:
        net.hq = probe.collect_hq(net.machine, net.model, net.h0, net.val_words)
    hq = net.hq
    n = net.machine.num_states
    extracted = False
    for method, params, thunk in _cells(config, hq, n, net.seed):
        row = _base_row(net, method, params)
        t0 = time.perf_counter()
        try:
            labels, states = thunk()
            rec = metrics.ambiguity(states, labels, n)
            row.num_clusters, row.amb, row.wamb, row.perfect = (rec.num_clusters, rec.amb,
                                                                rec.wamb, rec.perfect)
            # extraction needs a clustering of the full trace
            if (config.extract and rec.perfect and not extracted and len(labels) == len(hq)
                    and method not in config.classifiers):
                ca = extract.extract_automaton(hq, labels, net.model, net.machine.kind,
                                               provenance={"method": method, "params": params})
                if not ca.holes:
                    report = extract.verify_against_ground_truth(ca, net.machine, net.val_words)
                    row.equivalent = report["equivalent"]
                    extracted = True
                    if artifact_dir is not None:
                        extract.save_report(report, artifact_dir / f"{net.experiment_id}.extract.json")
            if artifact_dir is not None and config.save_artifacts:
                np.savetxt(artifact_dir / f"{net.experiment_id}.{method}.{params or 'default'}.labels",
                           labels, fmt="%d")
        except (RnnClustError, ValueError, np.linalg.LinAlgError) as exc:
            row.status, row.error = "error", f"{type(exc).__name__}: {exc}"
        row.runtime_ms = 1000 * (time.perf_counter() - t0)
        sink.add(row)


def _trained_networks(config: ExperimentConfig, lang_id: str, machine, dataset):
    n_t = machine.num_transitions
    for arch in config.archs:
        for size in config.sizes:
            layers, hidden = network_shape(size, n_t)
            for seed in config.seeds:
                exp_id = f"{lang_id}-{arch}-{size}-s{seed}"
                t0 = time.perf_counter()
                model = rnn.init_model(arch, layers, hidden, machine.num_symbols,
                                       machine.num_classes, seed)
                tcfg = train.TrainConfig(**{**config.train, "seed": seed})
                model, hist = train.train(model, dataset, tcfg, machine)
                yield exp_id, model, None, hist.records[-1].val_acc, seed, time.perf_counter() - t0


def _constructed_networks(config: ExperimentConfig, lang_id: str, machine, dataset):
    if machine.kind != automata.DFA:
        raise ValueError("construction needs a DFA")
    for H_r, H_o, wn in config.construction:
        params = construct.ConstructionParams(H_r, H_o, wn)
        base = construct.encode_dfa(machine, params)
        h0 = construct.initial_hidden(base, machine, params)
        for seed in config.seeds:
            exp_id = f"{lang_id}-construct-{H_r:g}_{H_o:g}_{wn:g}-s{seed}"
            t0 = time.perf_counter()
            noisy = construct.perturb(base, wn, seed)
            tcfg = train.TrainConfig(**{**config.train, "seed": seed})
            model, hist = train.train(noisy, dataset, tcfg, machine, h0=h0)
            yield exp_id, model, h0, hist.records[-1].val_acc, seed, time.perf_counter() - t0


def language_id(spec: dict, machine) -> str:
    if "builtin" in spec:
        return spec["builtin"]
    if "file" in spec:
        return Path(spec["file"]).stem
    return machine.name


def run_experiment(config: ExperimentConfig, out_dir=None) -> list:
    """Run the whole sweep; returns rows in canonical order.

    Failures of a single network or cell become ``status=error`` rows.
    """
    out = Path(out_dir or config.output_dir) if (out_dir or config.output_dir) else None
    sink = RowSink(out)
    artifacts = None
    if out is not None:
        artifacts = out / "artifacts"
        artifacts.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(config.to_json() + "\n", encoding="utf-8")
    started = time.time()
    frac = config.validation_size / config.dataset_size
    cutoff = 1.0 if config.construction else config.accuracy_cutoff

    for spec in config.languages:
        try:
            machine = load_language(spec)
        except (RnnClustError, ValueError, OSError) as exc:
            sink.add(ResultRow(str(spec), str(spec), 0, 0, "", 0, 0, 0, float("nan"), "language",
                               status="error", error=f"{type(exc).__name__}: {exc}"))
            continue
        lang_id = language_id(spec, machine)
        dataset = data.sample_dataset(machine, config.dataset_size, config.len_range, frac,
                                      seed=config.seeds[0])
        if artifacts is not None:
            automata.save(machine, artifacts / f"{lang_id}.fsm")
        gen = (_constructed_networks if config.construction else _trained_networks)(
            config, lang_id, machine, dataset)
        while True:
            try:
                exp_id, model, h0, acc, seed, secs = next(gen)
            except StopIteration:
                break
            except (RnnClustError, ValueError, np.linalg.LinAlgError) as exc:
                sink.add(ResultRow(f"{lang_id}-failed", lang_id, machine.num_states,
                                   machine.num_symbols, "", 0, 0, 0, float("nan"), "network",
                                   status="error", error=f"{type(exc).__name__}: {exc}"))
                break
            net = ProbedNetwork(exp_id, lang_id, machine, model,
                                model.zero_state() if h0 is None else h0, acc, seed,
                                val_words=dataset.val_words)
            log.info("%s: accuracy %.4f after %.1fs", exp_id, acc, secs)
            if artifacts is not None:
                rnn.save_model(model, artifacts / f"{exp_id}.npz")
            if acc < cutoff:
                row = _base_row(net, "network")
                row.status, row.error = "filtered", f"accuracy {acc:.4f} below cutoff {cutoff:g}"
                sink.add(row)
                continue
            evaluate_network(net, config, sink, artifacts)

    rows = sink.finish()
    if out is not None:
        write_manifest(out / "manifest.json", config, rows, time.time() - started)
    return rows


def write_manifest(path, config: ExperimentConfig, rows, seconds: float) -> None:
    import scipy
    import sklearn

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config_sha256": config.digest(),
        "seeds": config.seeds,
        "versions": {"python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__, "scikit-learn": sklearn.__version__},
        "rows": len(rows),
        "errors": sum(r.status == "error" for r in rows),
        "filtered": sum(r.status == "filtered" for r in rows),
        "wall_seconds": round(seconds, 1),
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- training curves ------------------------------------------------------------

@dataclass
class CurvePoint:
    epoch: int
    accuracy: float
    wamb: float


def track_training_curve(machine, arch: str = "gru", seed: int = 0, dataset=None,
                         train_config: train.TrainConfig = None, k_factor: str = "8n",
                         model: rnn.RnnModel = None, h0=None) -> tuple:
    """Train while scoring every epoch's checkpoint with k-means.

    Returns ``(points, rho)`` where ``rho`` is the Spearman correlation of
    accuracy and wamb, or ``None`` when either sequence is constant.
    """
    if dataset is None:
        dataset = data.sample_dataset(machine, 12000, val_fraction=2000 / 12000, seed=seed)
    if model is None:
        model = rnn.init_model(arch, 1, machine.num_transitions, machine.num_symbols,
                               machine.num_classes, seed)
    h0 = model.zero_state() if h0 is None else np.asarray(h0, dtype=float)
    k = k_from_factor(k_factor, machine.num_states)
    points = []

    def score(record, current):
        hq = probe.collect_hq(machine, current, h0, dataset.val_words)
        try:
            labels = cluster.kmeans(hq.hidden, k, seed).labels
            wamb = metrics.ambiguity(hq, labels, machine.num_states).wamb
        except RnnClustError:  # too few distinct vectors, e.g. an untrained net
            wamb = float("nan")
        points.append(CurvePoint(record.epoch, record.val_acc, wamb))

    cfg = train_config or train.TrainConfig(seed=seed)
    train.train(model, dataset, cfg, machine, h0=h0, on_epoch=score)
    valid = [p for p in points if not math.isnan(p.wamb)]
    try:
        rho = metrics.spearman([p.accuracy for p in valid], [p.wamb for p in valid])
    except (ConstantSequence, LengthMismatch):
        rho = None
    return points, rho


def curve_tsv(points, rho) -> str:
    buf = io.StringIO()
    buf.write("epoch\taccuracy\twamb\n")
    for p in points:
        buf.write(f"{p.epoch}\t{p.accuracy!r}\t{p.wamb!r}\n")
    buf.write(f"# spearman\t{'undefined (constant sequence)' if rho is None else repr(rho)}\n")
    return buf.getvalue()


# -- aggregation -----------------------------------------------------------------

SUMMARY_COLUMNS = (("lda", ""), ("logreg", ""), ("dbscan", "eps=0.5"), ("dbscan", "eps=0.25"),
                  ("dbscan", "eps=1.5"), ("kmeans", "k=n"), ("kmeans", "k=6n"), ("kmeans", "k=8n"),
                  ("optics", ""), ("mean_shift", "bw=alpha/2"), ("mean_shift", "bw=alpha/4"),
                  ("mean_shift", "bw=alpha/8"))

METHOD_LABELS = {"lda": "LDA", "logreg": "Logistic Regression", "dbscan": "DBSCAN",
                 "kmeans": "k-means", "optics": "OPTICS", "mean_shift": "mean shift"}


def _method_order(method, params):
    order = ["lda", "logreg", "dbscan", "kmeans", "optics", "mean_shift"]
    rank = order.index(method) if method in order else len(order)
    if not params:
        sub = 0
    elif method == "kmeans":
        p = params.split("=", 1)[1]
        sub = KMEANS_FACTORS.index(p) if p in KMEANS_FACTORS else 99
    elif method == "dbscan":
        sub = float(params.split("=", 1)[1])
    elif method == "mean_shift":
        sub = 1.0 if params == "bw=alpha" else float(params.rsplit("/", 1)[1])
    else:
        sub = 0
    return rank, sub


def report(rows) -> list:
    """Per-(method, params) aggregates for the summary tables.

    Only ``status=ok`` rows count. Each entry holds ``runs``, mean/std/max of
    amb, wamb and the cluster count, and the number of perfect clusterings.
    """
    rows = [r for r in rows if r.status == "ok" and r.wamb is not None]
    if not rows:
        raise ValueError("no successful rows to aggregate")
    groups = {}
    for r in rows:
        groups.setdefault((r.method, r.params), []).append(r)
    out = []
    for (method, params) in sorted(groups, key=lambda mp: _method_order(*mp)):
        g = groups[(method, params)]
        amb = np.array([r.amb for r in g])
        wamb = np.array([r.wamb for r in g])
        nc = np.array([r.num_clusters for r in g], dtype=float)
        label = METHOD_LABELS.get(method, method) + (f" ({params})" if params else "")
        out.append({"method": method, "params": params, "label": label, "runs": len(g),
                    "amb_mean": float(amb.mean()), "amb_std": float(amb.std()),
                    "amb_max": float(amb.max()), "wamb_mean": float(wamb.mean()),
                    "wamb_std": float(wamb.std()), "wamb_max": float(wamb.max()),
                    "clusters_mean": float(nc.mean()), "clusters_std": float(nc.std()),
                    "clusters_max": int(nc.max()), "perfect": int(sum(r.perfect for r in g))})
    return out


def format_report(aggregates) -> str:
    """Plain-text table: ambiguity, weighted ambiguity, cluster counts, perfect count."""
    head = ("Clustering Function", "Ambiguity Mean ± Std", "Max", "Weighted Ambiguity Mean ± Std",
            "Max", "Clusters Mean ± Std", "Max", "# Perfect")
    lines = ["\t".join(head)]
    for a in aggregates:
        lines.append("\t".join([
            a["label"], f"{a['amb_mean']:.3g} ± {a['amb_std']:.3g}", f"{a['amb_max']:.3g}",
            f"{a['wamb_mean']:.3g} ± {a['wamb_std']:.3g}", f"{a['wamb_max']:.3g}",
            f"{a['clusters_mean']:.3g} ± {a['clusters_std']:.3g}", str(a["clusters_max"]),
            f"{a['perfect']}/{a['runs']}"]))
    return "\n".join(lines) + "\n"


def perfect_count_table(aggregates) -> str:
    """Perfect-clustering counts in the column layout of the summary table."""
    by_key = {(a["method"], a["params"]): a for a in aggregates}
    methods, params, counts = ["Clustering Function"], ["Parameters"], ["# Perfect Clustering"]
    for m, p in SUMMARY_COLUMNS:
        methods.append(METHOD_LABELS[m] if m != "logreg" else "LR")
        params.append(p.split("=", 1)[1] if p else "")
        a = by_key.get((m, p))
        counts.append("-" if a is None else f"{a['perfect']}/{a['runs']}")
    return "\n".join("\t".join(r) for r in (methods, params, counts)) + "\n"
