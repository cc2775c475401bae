# utils/tables.py
"""
Tabular output utilities for qlslab.
Every CSV artifact goes through pandas and starts with a one-line
`# qlslab <artifact> v1` header so readers can tell which columns to expect.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Optional

import pandas as pd

logger = logging.getLogger('qlslab.tables')

TABLE_VERSION = 1


def write_table(rows, path, artifact: str, columns: Optional[List[str]] = None) -> Path:
    """
    Write rows (DataFrame, list of dicts or list of tuples) as a versioned CSV.

    Args:
        rows: Table contents
        path: Output file
        artifact: Short artifact name recorded in the header line
        columns: Column order; required when rows are tuples

    Returns:
        Path of the written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
    if columns is not None:
        df = df.reindex(columns=columns)

    # fixed float format keeps reruns byte-identical
    csv_data = df.to_csv(index=False, float_format='%.12g', lineterminator='\n')
    with open(path, 'w', newline='') as f:
        f.write(f"# qlslab {artifact} v{TABLE_VERSION}\n")
        f.write(csv_data)
    logger.debug(f"Wrote {len(df)} row(s) to {path}")
    return path


def read_table(path) -> pd.DataFrame:
    """Read a CSV written by `write_table` (header comment skipped)"""
    return pd.read_csv(path, comment='#')


def median_mad(df: pd.DataFrame, by: Iterable[str], value: str) -> pd.DataFrame:
    """Per-group median and median absolute deviation of `value`"""
    by = list(by)

    def _mad(series: pd.Series) -> float:
        return float((series - series.median()).abs().median())

    grouped = df.groupby(by, sort=True, dropna=False)[value]
    out = grouped.agg(['median', _mad, 'count']).reset_index()
    return out.rename(columns={'median': f'{value}_median', '_mad': f'{value}_mad', 'count': 'runs'})
