"""Mini-batch training loop for the attention scorer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import BipartiteGraph
from . import autodiff as ad
from .loss import infonce_loss
from .model import GatParameters, score_graph
from .optim import AdamState, adam_step


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; the defaults are the tuned operating point."""

    tau: float = 0.07
    learning_rate: float = 5e-4
    weight_decay: float = 0.01
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    L: int = 64
    H: int = 8
    hidden: int = 64

    def __post_init__(self):
        if self.tau <= 0.0:
            raise ValueError("temperature must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch size and epochs must be positive")


@dataclass(frozen=True)
class TrainSample:
    """One instance's graph plus its positive/negative backdoor index sets."""

    graph: BipartiteGraph
    positives: tuple[tuple[int, ...], ...]
    negatives: tuple[tuple[int, ...], ...]


def train(
    dataset: list[TrainSample], cfg: TrainConfig
) -> tuple[GatParameters, list[float]]:
    """Train from scratch; returns the final parameters and per-epoch losses.

    Each epoch shuffles with the seeded generator, averages the contrastive
    loss over each mini-batch, and applies one Adam step per batch.  Fully
    deterministic under a fixed config.
    """
    if not dataset:
        raise ValueError("empty training dataset")
    for s in dataset:
        if not s.positives or not s.negatives:
            raise ValueError("every training sample needs positives and negatives")
    params = GatParameters.init(seed=cfg.seed, L=cfg.L, H=cfg.H, hidden=cfg.hidden)
    state = AdamState.init(params.arrays)
    shuffle_rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1,)))
    )
    curve: list[float] = []
    n = len(dataset)
    for _epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, cfg.batch_size):
            batch = [dataset[i] for i in order[lo : lo + cfg.batch_size]]
            tensors = params.tensors()
            losses = []
            for sample in batch:
                scores, _ = score_graph(tensors, sample.graph)
                losses.append(
                    infonce_loss(scores, sample.positives, sample.negatives, cfg.tau)
                )
            total = losses[0]
            for term in losses[1:]:
                total = ad.add(total, term)
            batch_loss = ad.mul(total, 1.0 / len(losses))
            names = sorted(tensors)
            gs = ad.grad(batch_loss, [tensors[k] for k in names])
            new_arrays, state = adam_step(
                params.arrays,
                dict(zip(names, gs)),
                state,
                lr=cfg.learning_rate,
                wd=cfg.weight_decay,
            )
            params = GatParameters(L=cfg.L, H=cfg.H, hidden=cfg.hidden, arrays=new_arrays)
            epoch_loss += float(batch_loss.data) * len(batch)
        curve.append(epoch_loss / n)
    return params, curve
