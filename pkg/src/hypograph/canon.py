"""Canonical labeling by color refinement with individualization search.

Works on plain token lists so the graph and fingerprint layers can share it.
"""
from __future__ import annotations

import json
from typing import Sequence

from hypograph import _kernels

ROOT_MARK = "*"


class CanonicalizationError(RuntimeError):
    pass


def _prepare(tokens: Sequence[str], edges: Sequence[tuple[int, int, str]]):
    tok_rank = {t: i for i, t in enumerate(sorted(set(tokens)))}
    kinds = sorted({k for _, _, k in edges})
    kind_rank = {k: i for i, k in enumerate(kinds)}
    ranked = [(u, v, kind_rank[k]) for u, v, k in edges]
    return [tok_rank[t] for t in tokens], ranked, kinds


def canonical_permutation(tokens: Sequence[str], edges: Sequence[tuple[int, int, str]]) -> list[int]:
    """Old node index for each canonical position."""
    if not tokens:
        return []
    return canonicalize(tokens, edges)[1]


def canonical_bytes(tokens: Sequence[str], edges: Sequence[tuple[int, int, str]]) -> bytes:
    return canonicalize(tokens, edges)[0]


def canonicalize(
    tokens: Sequence[str], edges: Sequence[tuple[int, int, str]]
) -> tuple[bytes, list[int]]:
    """Canonical byte string and the permutation that produced it."""
    n = len(tokens)
    if n == 0:
        return b"[[],[]]", []
    colors, ranked, kinds = _prepare(tokens, edges)
    if n == 1:
        key, pos = (), [0]
    else:
        key, pos = _kernels.canonical_search(n, colors, ranked)
    ordered = [tokens[v] for v in pos]
    listed = [[u, v, kinds[k]] for u, v, k in key]
    return json.dumps([ordered, listed], separators=(",", ":")).encode(), pos
