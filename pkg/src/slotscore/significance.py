"""Paired bootstrap comparison of two systems' overall F1 on one gold
corpus, resampling at the note level.

Per-note tallies are computed once per system; each repetition then draws
notes with replacement, sums the cached tallies, and records the F1
difference. Repetition i consumes a random stream derived solely from
(seed, i) via a counter-based generator, so results are bit-identical
regardless of worker count or execution order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .schema import AnnotationSchema
from .scoring import per_document_counts, prf
from .standoff import Corpus


@dataclass(frozen=True)
class BootstrapConfig:
    repetitions: int = 10_000
    seed: int = 0
    alpha: float = 0.05
    workers: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class BootstrapResult:
    f1_a: float
    f1_b: float
    observed_delta: float
    p_value: float
    repetitions: int
    seed: int
    alpha: float
    significant: bool
    deltas: tuple[float, ...] | None = None

    def verdict(self) -> str:
        return "statistically different" if self.significant else "not statistically different"


def _rep_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent stream for one repetition, keyed by (seed, rep)."""
    return np.random.Generator(np.random.Philox(key=seed).advance(rep << 64))


def _note_totals(gold: Corpus, pred: Corpus, schema: AnnotationSchema) -> np.ndarray:
    """Per-note (tp, fn, fp) summed across all phenomenon keys, one row per
    gold note in sorted doc_id order."""
    rows = []
    for counts in per_document_counts(gold, pred, schema).values():
        total = counts.total()
        rows.append((total.tp, total.fn, total.fp))
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3)


def _overall_f1(totals: np.ndarray) -> float:
    tp, fn, fp = (int(x) for x in totals)
    return prf(tp, fn, fp)[2]


def paired_bootstrap(
    gold: Corpus,
    pred_a: Corpus,
    pred_b: Corpus,
    schema: AnnotationSchema,
    cfg: BootstrapConfig | None = None,
    keep_deltas: bool = False,
) -> BootstrapResult:
    """Two-sided paired bootstrap on overall F1.

    The p-value uses the add-one sign-flip estimator
    ``2 * min(1 + #{delta <= 0}, 1 + #{delta >= 0}) / (repetitions + 1)``,
    clamped to 1, so identical systems report exactly p = 1.0 and no
    comparison reports p = 0.
    """
    cfg = cfg or BootstrapConfig()
    if len(gold) == 0:
        raise ValueError("gold corpus is empty")

    totals_a = _note_totals(gold, pred_a, schema)
    totals_b = _note_totals(gold, pred_b, schema)
    n = len(gold)

    f1_a = _overall_f1(totals_a.sum(axis=0))
    f1_b = _overall_f1(totals_b.sum(axis=0))
    observed = f1_a - f1_b

    def delta_for(rep: int) -> float:
        idx = _rep_rng(cfg.seed, rep).integers(0, n, size=n)
        return _overall_f1(totals_a[idx].sum(axis=0)) - _overall_f1(totals_b[idx].sum(axis=0))

    deltas: list[float] = [0.0] * cfg.repetitions
    if cfg.workers == 1:
        for rep in range(cfg.repetitions):
            deltas[rep] = delta_for(rep)
    else:
        def run_chunk(chunk: range) -> None:
            for rep in chunk:
                deltas[rep] = delta_for(rep)

        step = -(-cfg.repetitions // cfg.workers)
        chunks = [range(lo, min(lo + step, cfg.repetitions)) for lo in range(0, cfg.repetitions, step)]
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            list(pool.map(run_chunk, chunks))

    at_most = sum(1 for d in deltas if d <= 0.0)
    at_least = sum(1 for d in deltas if d >= 0.0)
    p_value = min(1.0, 2 * min(at_most + 1, at_least + 1) / (cfg.repetitions + 1))

    return BootstrapResult(
        f1_a=f1_a,
        f1_b=f1_b,
        observed_delta=observed,
        p_value=p_value,
        repetitions=cfg.repetitions,
        seed=cfg.seed,
        alpha=cfg.alpha,
        significant=p_value < cfg.alpha,
        deltas=tuple(deltas) if keep_deltas else None,
    )
