from __future__ import annotations

import logging

from collections.abc import Mapping

import pandas as pd

from ..models import ALL_CLASSES, Designation, render_designation

logger = logging.getLogger(__name__)

type Observations = Mapping[int, Designation]


def recall(pa: Observations, gt: Observations) -> float | None:
    """
    Percentage of observed writes whose classes the analysis covers.

    The observed writes W are the addresses of ``gt``. A write missing from
    ``pa`` is covered only if it was never classified.

    Args:
        pa: Analysis designation per write address.
        gt: Concrete classes per observed write address.

    Returns:
        The percentage, or None when nothing was observed.
    """
    if not gt:
        return None
    supported = sum(1 for addr, classes in gt.items() if classes <= pa.get(addr, frozenset()))
    return 100.0 * supported / len(gt)


def precision(pa: Observations, gt: Observations) -> float | None:
    """
    Average share of classes in the analysis designation that were observed.

    Each observed write scores ``1 - |PA(a) - GT(a)| / 3``. A write the
    analysis never reached scores as if it were designated everything.

    Returns:
        The percentage, or None when nothing was observed.
    """
    if not gt:
        return None
    total = 0.0
    for addr, classes in gt.items():
        spurious = pa.get(addr, ALL_CLASSES) - classes
        total += 1.0 - len(spurious) / len(ALL_CLASSES)
    return 100.0 * total / len(gt)


def metrics_frame(pa: Observations, gt: Observations) -> pd.DataFrame:
    """
    Per-write comparison table.

    Returns:
        One row per observed write with its designations, whether it is
        supported, and the number of spurious classes.
    """
    rows = []
    for addr in sorted(gt):
        analysis = pa.get(addr)
        rows.append({
            'addr': f'{addr:#x}',
            'ground_truth': render_designation(gt[addr]),
            'analysis': None if analysis is None else render_designation(analysis),
            'supported': analysis is not None and gt[addr] <= analysis,
            'spurious': len((ALL_CLASSES if analysis is None else analysis) - gt[addr]),
            'top': analysis == ALL_CLASSES,
        })
    return pd.DataFrame(rows, columns=['addr', 'ground_truth', 'analysis', 'supported', 'spurious', 'top'])


def aggregate_metrics(per_program: pd.DataFrame) -> dict[str, float | None]:
    """
    Corpus-level recall and precision.

    Args:
        per_program: One row per program with ``recall``, ``precision`` and
            ``writes`` (observed write count) columns.

    Returns:
        Program-averaged and write-weighted figures. Programs without
        observed writes are ignored.
    """
    frame = per_program.dropna(subset=['recall', 'precision'])
    frame = frame[frame['writes'] > 0]
    if frame.empty:
        logger.warning('No observed writes in corpus: programs=%d', len(per_program))
        return {'recall': None, 'precision': None, 'weighted_recall': None, 'weighted_precision': None}

    weights = pd.to_numeric(frame['writes'])
    return {
        'recall': float(frame['recall'].mean()),
        'precision': float(frame['precision'].mean()),
        'weighted_recall': float((frame['recall'] * weights).sum() / weights.sum()),
        'weighted_precision': float((frame['precision'] * weights).sum() / weights.sum()),
    }
