"""End-to-end orchestration: dataset collection, evaluation, and reports.

Collection walks an instance directory, finds candidate backdoors (UCT
search by default, LP-biased sampling for the ablation), labels them by
measured solving effort, and writes one JSON line per kept instance with the
feature graph embedded.  Instances where labeling finds no strictly-better
or no strictly-worse candidate are skipped and explained in the manifest.

Everything is deterministic: per-instance seeds derive from the base seed
and the instance's position in the sorted directory listing, records are
merged in that order, and JSON/CSV floats use the shortest exact
representation, so a run with 4 workers is byte-identical to a run with 1.
"""

from __future__ import annotations

import concurrent.futures
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .bnb import NODE_LIMIT, BnbConfig, backdoor_priorities, solve_bnb
from .features import BipartiteGraph, featurize
from .gnn import GatParameters, TrainConfig, TrainSample, gat_forward, greedy_select, train
from .milp import FILE_EXTENSION, MilpInstance, lp_relaxation, read_instance
from .search import Backdoor, biased_sample, label_samples, mcts_search
from .simplex import LpWorkspace

WIN = "WIN"
TIE = "TIE"
LOSS = "LOSS"

MCTS = "mcts"
SAMPLING = "sampling"


@dataclass(frozen=True)
class CollectConfig:
    """Knobs for one collection run over an instance directory."""

    K: int = 8
    method: str = MCTS
    top_k: int = 50
    p: int = 5
    q: int = 5
    mcts_budget: int = 200
    probe_node_limit: int = 500
    label_node_limit: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.method not in (MCTS, SAMPLING):
            raise ValueError(f"unknown collection method {self.method!r}")


@dataclass
class EvalRecord:
    instance: str
    baseline_effort: int
    method_effort: int
    improvement_pct: float
    outcome: str
    baseline_censored: bool = False
    method_censored: bool = False
    overhead_seconds: float | None = None


def instance_paths(instance_dir) -> list[Path]:
    paths = sorted(Path(instance_dir).glob(f"*{FILE_EXTENSION}"))
    if not paths:
        raise FileNotFoundError(f"no {FILE_EXTENSION} files under {instance_dir}")
    return paths


def _instance_seed(base_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _graph_payload(graph: BipartiteGraph) -> dict:
    return {
        "binary_mask": graph.binary_mask.astype(int).tolist(),
        "cons_feats": graph.cons_feats.tolist(),
        "edge_feats": graph.edge_feats.tolist(),
        "edges": graph.edges.tolist(),
        "var_feats": graph.var_feats.tolist(),
    }


def graph_from_payload(payload: dict) -> BipartiteGraph:
    edges = np.asarray(payload["edges"], dtype=np.int64)
    return BipartiteGraph(
        var_feats=np.asarray(payload["var_feats"], dtype=float),
        cons_feats=np.asarray(payload["cons_feats"], dtype=float),
        edges=edges.reshape(-1, 2),
        edge_feats=np.asarray(payload["edge_feats"], dtype=float).reshape(-1, 1),
        binary_mask=np.asarray(payload["binary_mask"], dtype=bool),
    )


def collect_one(path, seed: int, cfg: CollectConfig) -> tuple[dict | None, dict]:
    """Process one instance; returns (record or None, manifest entry)."""
    inst = read_instance(path)
    ws = LpWorkspace(lp_relaxation(inst))
    root = ws.solve()
    weights: dict[tuple[int, ...], float] = {}
    if cfg.method == MCTS:
        ranked = mcts_search(
            inst,
            K=cfg.K,
            iteration_budget=cfg.mcts_budget,
            probe_node_limit=cfg.probe_node_limit,
            seed=seed,
            top_k=cfg.top_k,
            root_lp=root,
            workspace=ws,
        )
        candidates = [bd for bd, _ in ranked]
        weights = {bd.vars: w for bd, w in ranked}
    else:
        candidates = biased_sample(inst, root, K=cfg.K, count=cfg.top_k, seed=seed)
    labels = label_samples(
        inst, candidates, p=cfg.p, q=cfg.q,
        node_limit=cfg.label_node_limit, workspace=ws,
    )
    entry = {
        "instance": inst.name,
        "file": Path(path).name,
        "baseline_effort": labels.baseline_effort,
        "candidates": len(labels.efforts),
        "skip_reason": labels.skip_reason,
    }
    if labels.skipped:
        return None, entry
    samples = [
        {
            "backdoor": list(s.backdoor.vars),
            "effort": s.effort,
            "label": s.label,
            "tree_weight": weights.get(s.backdoor.vars),
        }
        for s in labels.positives + labels.negatives
    ]
    record = {
        "baseline_effort": labels.baseline_effort,
        "graph": _graph_payload(featurize(inst, root)),
        "instance": inst.name,
        "samples": samples,
    }
    return record, entry


def _collect_worker(args):
    index, path, seed, cfg = args
    return index, collect_one(path, seed, cfg)


def collect_dataset(
    instance_dir,
    out_path,
    cfg: CollectConfig | None = None,
    workers: int = 1,
) -> dict:
    """Collect labeled backdoors for every instance in a directory.

    Writes a JSONL dataset plus ``<out>.manifest.json``; failures and skips
    are isolated per instance and recorded, never aborting the batch.  The
    output is independent of ``workers``.
    """
    cfg = cfg or CollectConfig()
    paths = instance_paths(instance_dir)
    jobs = [
        (i, str(p), _instance_seed(cfg.seed, i), cfg) for i, p in enumerate(paths)
    ]
    results: dict[int, tuple[dict | None, dict]] = {}
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for index, res in pool.map(_collect_worker, jobs):
                results[index] = res
    else:
        for job in jobs:
            index, res = _collect_worker(job)
            results[index] = res
    records, entries = [], []
    for i in range(len(paths)):
        record, entry = results[i]
        entries.append(entry)
        if record is not None:
            records.append(record)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="ascii") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    manifest = {
        "config": asdict(cfg),
        "instances": entries,
        "kept": len(records),
        "skipped": len(entries) - len(records),
    }
    with open(str(out_path) + ".manifest.json", "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_dataset(path) -> list[TrainSample]:
    """Read a collection JSONL back into training samples."""
    samples = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            pos = tuple(
                tuple(s["backdoor"]) for s in rec["samples"] if s["label"] == "POSITIVE"
            )
            neg = tuple(
                tuple(s["backdoor"]) for s in rec["samples"] if s["label"] == "NEGATIVE"
            )
            samples.append(
                TrainSample(graph=graph_from_payload(rec["graph"]), positives=pos, negatives=neg)
            )
    return samples


def train_from_file(dataset_path, cfg: TrainConfig):
    dataset = load_dataset(dataset_path)
    if not dataset:
        raise ValueError(f"dataset {dataset_path} holds no training records")
    return train(dataset, cfg)


def predict_backdoor(params: GatParameters, inst: MilpInstance, K: int) -> Backdoor:
    """Score the instance and greedily take the K best binary variables."""
    ws = LpWorkspace(lp_relaxation(inst))
    graph = featurize(inst, ws.solve())
    scores = gat_forward(params, graph)
    return greedy_select(scores, graph.binary_mask, K)


def evaluate(
    params: GatParameters,
    instance_dir,
    K: int = 8,
    node_cap: int | None = None,
    wallclock: bool = False,
) -> tuple[list[EvalRecord], dict]:
    """Baseline solve vs. predicted-backdoor solve for every instance.

    Node-cap hits are censored at the cap and flagged.  ``wallclock``
    additionally records the model+selection overhead in seconds (reported
    separately, never part of the effort comparison).
    """
    records = []
    for path in instance_paths(instance_dir):
        inst = read_instance(path)
        ws = LpWorkspace(lp_relaxation(inst))
        t0 = time.perf_counter()
        graph = featurize(inst, ws.solve())
        scores = gat_forward(params, graph)
        backdoor = greedy_select(scores, graph.binary_mask, K)
        overhead = time.perf_counter() - t0
        base = solve_bnb(inst, BnbConfig(node_limit=node_cap), workspace=ws)
        method = solve_bnb(
            inst,
            BnbConfig(priorities=backdoor_priorities(backdoor.vars), node_limit=node_cap),
            workspace=ws,
        )
        be, me = base.nodes_processed, method.nodes_processed
        outcome = WIN if me < be else (TIE if me == be else LOSS)
        records.append(
            EvalRecord(
                instance=inst.name,
                baseline_effort=be,
                method_effort=me,
                improvement_pct=100.0 * (be - me) / be if be else 0.0,
                outcome=outcome,
                baseline_censored=base.status == NODE_LIMIT,
                method_censored=method.status == NODE_LIMIT,
                overhead_seconds=overhead if wallclock else None,
            )
        )
    return records, summarize(records)


def _stats(values: np.ndarray) -> dict:
    return {
        "mean": float(np.mean(values)),
        "std": float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
        "p25": float(np.percentile(values, 25)),
        "median": float(np.percentile(values, 50)),
        "p75": float(np.percentile(values, 75)),
    }


def summarize(records: list[EvalRecord]) -> dict:
    """Mean/std/quartiles for both solvers plus win/tie/loss counts.

    Percentiles interpolate linearly between order statistics; the standard
    deviation is the sample estimate (ddof=1).
    """
    if not records:
        raise ValueError("no evaluation records to summarize")
    base = np.array([r.baseline_effort for r in records], dtype=float)
    meth = np.array([r.method_effort for r in records], dtype=float)
    imp = np.array([r.improvement_pct for r in records], dtype=float)
    return {
        "instances": len(records),
        "baseline": _stats(base),
        "method": _stats(meth),
        "mean_improvement_pct": float(100.0 * (base.mean() - meth.mean()) / base.mean()),
        "median_improvement_pct": float(np.percentile(imp, 50)),
        "wins": sum(r.outcome == WIN for r in records),
        "ties": sum(r.outcome == TIE for r in records),
        "losses": sum(r.outcome == LOSS for r in records),
        "censored": sum(r.baseline_censored or r.method_censored for r in records),
    }


def _fmt_float(x: float) -> str:
    return repr(float(x))


def report(records: list[EvalRecord], out_dir) -> dict:
    """Write results.csv, summary.txt, scatter.csv, and finishrate.csv."""
    if not records:
        raise ValueError("no evaluation records to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(records)

    with open(out / "results.csv", "w", encoding="ascii") as fh:
        cols = [
            "instance", "baseline", "method", "improvement_pct", "outcome",
            "baseline_censored", "method_censored",
        ]
        extra = any(r.overhead_seconds is not None for r in records)
        if extra:
            cols.append("overhead_seconds")
        fh.write(",".join(cols) + "\n")
        for r in records:
            row = [
                r.instance,
                str(r.baseline_effort),
                str(r.method_effort),
                _fmt_float(r.improvement_pct),
                r.outcome,
                str(int(r.baseline_censored)),
                str(int(r.method_censored)),
            ]
            if extra:
                row.append(_fmt_float(r.overhead_seconds or 0.0))
            fh.write(",".join(row) + "\n")

    with open(out / "summary.txt", "w", encoding="ascii") as fh:
        b, m = summary["baseline"], summary["method"]
        fh.write(
            f"instances {summary['instances']}\n"
            f"baseline mean {_fmt_float(b['mean'])} std {_fmt_float(b['std'])} "
            f"p25 {_fmt_float(b['p25'])} median {_fmt_float(b['median'])} p75 {_fmt_float(b['p75'])}\n"
            f"method   mean {_fmt_float(m['mean'])} std {_fmt_float(m['std'])} "
            f"p25 {_fmt_float(m['p25'])} median {_fmt_float(m['median'])} p75 {_fmt_float(m['p75'])}\n"
            f"mean improvement {_fmt_float(summary['mean_improvement_pct'])}%\n"
            f"median improvement {_fmt_float(summary['median_improvement_pct'])}%\n"
            f"W/T/L {summary['wins']}/{summary['ties']}/{summary['losses']}\n"
            f"censored {summary['censored']}\n"
        )

    with open(out / "scatter.csv", "w", encoding="ascii") as fh:
        fh.write("baseline_effort,improvement_pct\n")
        for r in records:
            fh.write(f"{r.baseline_effort},{_fmt_float(r.improvement_pct)}\n")

    with open(out / "finishrate.csv", "w", encoding="ascii") as fh:
        fh.write("solver,effort,finish_rate\n")
        total = len(records)
        for tag, efforts, censored in (
            ("baseline", [r.baseline_effort for r in records], [r.baseline_censored for r in records]),
            ("method", [r.method_effort for r in records], [r.method_censored for r in records]),
        ):
            finished = sorted(e for e, c in zip(efforts, censored) if not c)
            done = 0
            for i, e in enumerate(finished):
                done = i + 1
                if i + 1 < len(finished) and finished[i + 1] == e:
                    continue
                fh.write(f"{tag},{e},{_fmt_float(done / total)}\n")
    return summary


def read_results_csv(path) -> list[EvalRecord]:
    """Parse a results.csv written by :func:`report` back into records."""
    records = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        idx = {name: i for i, name in enumerate(header)}
        for line in fh:
            parts = line.strip().split(",")
            if not line.strip():
                continue
            records.append(
                EvalRecord(
                    instance=parts[idx["instance"]],
                    baseline_effort=int(parts[idx["baseline"]]),
                    method_effort=int(parts[idx["method"]]),
                    improvement_pct=float(parts[idx["improvement_pct"]]),
                    outcome=parts[idx["outcome"]],
                    baseline_censored=bool(int(parts[idx["baseline_censored"]]))
                    if "baseline_censored" in idx
                    else False,
                    method_censored=bool(int(parts[idx["method_censored"]]))
                    if "method_censored" in idx
                    else False,
                    overhead_seconds=(
                        float(parts[idx["overhead_seconds"]])
                        if "overhead_seconds" in idx
                        else None
                    ),
                )
            )
    return records
