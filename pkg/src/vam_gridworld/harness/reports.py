"""
JSON reports and flattened CSV tables.

JSON is written with sorted keys and a trailing newline; CSV goes through
pyarrow. Neither carries timestamps, so reruns produce identical bytes.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import pyarrow as pa
import pyarrow.csv as pacsv

from vam_gridworld.harness.metrics import SplitMetrics, SubgoalRow

SUBGOAL_COLUMNS = ("subgoal_type", "instances", "successes", "success_rate", "share")


def write_json(path: str, data: Any) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(data, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    return out


def write_csv(path: str, rows: Sequence[Mapping[str, Any]], columns: Optional[Sequence[str]] = None) -> Path:
    """
    Write ``rows`` as CSV with a header.

    Args:
        path: Output file.
        rows: Flat records sharing the same keys.
        columns: Column order; defaults to the first row's key order.
            Required when ``rows`` is empty.
    """
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns) if columns is not None else list(rows[0].keys()) if rows else []
    if rows:
        table = pa.Table.from_pylist([{c: r.get(c) for c in names} for r in rows])
    else:
        table = pa.table({c: pa.array([], type=pa.string()) for c in names})
    pacsv.write_csv(table, str(out))
    return out


def loss_curve_rows(curve: Sequence[Sequence[float]]) -> List[Dict[str, Any]]:
    return [{"step": int(s), "loss": float(v)} for s, v in curve]


def metrics_report(split_metrics: Mapping[str, SplitMetrics], subgoals: Sequence[SubgoalRow],
                   config_hash: str, seed: int, policy: str) -> Dict[str, Any]:
    """
    MetricsReport document: per-split SR/GC, per-subgoal table, per-episode rows.

    Wall-clock time is kept out so the document is reproducible.
    """
    return {
        "config_hash": config_hash,
        "seed": seed,
        "policy": policy,
        "splits": {name: m.summary() for name, m in split_metrics.items()},
        "subgoals": [row.to_dict() for row in subgoals],
        "episodes": {name: [o.to_dict() for o in m.outcomes] for name, m in split_metrics.items()},
    }


def metrics_rows(split_metrics: Mapping[str, SplitMetrics], seed: int) -> List[Dict[str, Any]]:
    return [dict(m.summary(), seed=seed) for m in split_metrics.values()]
