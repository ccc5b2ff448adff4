"""Whittle-index planning: index search, tables and top-K selection."""
from ucwhittle.planning.whittle import (
    IndexMemoizer,
    IndexResult,
    IndexTable,
    LazyIndexTable,
    WhittleTable,
    bisect_index,
    kth_largest_index,
    threshold_policy,
    top_k_pull,
    whittle_index,
)

__all__ = [
    "IndexMemoizer",
    "IndexResult",
    "IndexTable",
    "LazyIndexTable",
    "WhittleTable",
    "bisect_index",
    "kth_largest_index",
    "threshold_policy",
    "top_k_pull",
    "whittle_index",
]
