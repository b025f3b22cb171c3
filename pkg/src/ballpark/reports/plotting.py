from __future__ import annotations

from typing import TYPE_CHECKING

import matplotlib.pyplot as plt

if TYPE_CHECKING:
    from pathlib import Path

    import pandas as pd


def plot_precision_by_mode(summary_df: pd.DataFrame, out_path: Path) -> None:
    """
    Plot corpus precision per domain instantiation.

    Args:
        summary_df: DataFrame containing mode, precision and top_share.
        out_path: Output PNG path.
    """
    fig = plt.figure()
    ax = plt.gca()

    positions = range(len(summary_df))
    ax.bar(positions, summary_df['precision'], label='precision')
    ax.plot(positions, summary_df['top_share'], marker='o', linestyle='--', color='black', label='TOP share')
    ax.set_xticks(list(positions))
    ax.set_xticklabels(summary_df['mode'])
    ax.set_ylim(0, 100)
    ax.set_xlabel('Domain')
    ax.set_ylabel('Percent of observed writes')
    ax.set_title('Designation precision by domain')
    ax.legend()

    plt.tight_layout()
    plt.savefig(out_path, dpi=200)
    plt.close(fig)
