"""Hadamard-kernel encoder and successive-cancellation erasure decoder.

Node values are indexed by ``(level, node)``.  Level 0 holds the code
inputs, level ``n = log2 N`` holds the worker outputs.  The stage between
level ``j`` and ``j + 1`` pairs node ``i`` with ``i ^ 2**j``; with ``a`` on
the upper node and ``b`` on the lower one it maps ``(a, b) -> (a + b, a - b)``.
The composite map is the Sylvester Hadamard matrix in natural order, so
worker ``i`` holds row ``i`` of ``H_N`` applied to the input block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construction import CodeConfig

# Recorded in traces so that outputs name the row/stage convention they used.
BUTTERFLY_CONVENTION = "natural-order/stride-1-at-inputs"


class UndecodableError(ValueError):
    """Raised when the available outputs do not determine every coordinate."""

    def __init__(self, failed_channels):
        self.failed_channels = tuple(failed_channels)
        super().__init__(
            f"outputs not decodable; information channels {list(self.failed_channels)} unresolved"
        )


@dataclass(frozen=True)
class DirectionSet:
    config: CodeConfig
    directions: np.ndarray  # (N, d), row i is worker i's perturbation
    diag_signs: np.ndarray  # (d,), entries +-1


@dataclass(frozen=True)
class ErasedOutputs:
    values: np.ndarray  # (N,)
    available: np.ndarray  # (N,) bool

    def __post_init__(self):
        if self.values.shape != self.available.shape:
            raise ValueError("values and available must have the same length")

    @property
    def n_available(self) -> int:
        return int(np.count_nonzero(self.available))


def encode(config: CodeConfig, inputs) -> np.ndarray:
    """Push an input block of ``N`` rows through the butterfly, ``N log N`` row ops."""
    x = np.array(inputs, dtype=float)
    n = config.n_total
    if x.ndim == 1:
        x = x[:, None]
        squeeze = True
    else:
        squeeze = False
    if x.shape[0] != n:
        raise ValueError(f"expected a block of {n} inputs, got {x.shape[0]}")
    width = x.shape[1]
    stride = 1
    while stride < n:
        v = x.reshape(n // (2 * stride), 2, stride, width)
        upper = v[:, 0].copy()
        lower = v[:, 1]
        v[:, 0] += lower
        v[:, 1] = upper - lower
        stride *= 2
    return x[:, 0] if squeeze else x


def input_block(config: CodeConfig, diag_signs) -> np.ndarray:
    """Frozen rows are zero; the row of coordinate ``j`` is ``diag_signs[j] * e_j``."""
    signs = np.asarray(diag_signs, dtype=float)
    if signs.shape != (config.n_params,):
        raise ValueError(f"diag_signs must have length {config.n_params}, got {signs.shape}")
    block = np.zeros((config.n_total, config.n_params))
    block[list(config.info_channels), np.arange(config.n_params)] = signs
    return block


def make_direction_set(config: CodeConfig, diag_signs=None) -> DirectionSet:
    if diag_signs is None:
        diag_signs = np.ones(config.n_params)
    signs = np.asarray(diag_signs, dtype=float)
    if signs.shape != (config.n_params,) or not np.all(np.abs(signs) == 1.0):
        raise ValueError("diag_signs must be a +-1 vector of length d")
    directions = encode(config, input_block(config, signs))
    directions.setflags(write=False)
    signs = signs.copy()
    signs.setflags(write=False)
    return DirectionSet(config=config, directions=directions, diag_signs=signs)


class _SuccessiveCancellation:
    """One pass of the sequential decoder over a fixed availability pattern.

    With ``values=None`` only the known/unknown indicators are propagated.
    """

    def __init__(self, config: CodeConfig, available, values=None):
        n = config.n_total
        self.n_levels = config.n_levels
        self.track = values is not None
        top = self.n_levels
        self.known = [[False] * n for _ in range(top + 1)]
        avail = np.asarray(available, dtype=bool)
        self.known[top] = avail.tolist()
        if self.track:
            self.value = [[0.0] * n for _ in range(top + 1)]
            self.value[top] = np.where(avail, np.asarray(values, dtype=float), 0.0).tolist()
        self.pending = []
        for i in config.frozen_set:
            self._set(0, i, 0.0)
        self.frozen = config.frozen_set
        self.info = config.info_channels
        self.n = n

    def _set(self, level, node, val):
        self.known[level][node] = True
        if self.track:
            self.value[level][node] = val
        if level < self.n_levels:
            self.pending.append((level, node))

    def _resolve(self, node, level):
        # decodeRecursive: returns whether value (node, level) is known.
        if level == self.n_levels:
            return self.known[level][node]
        if self.known[level][node]:
            return True
        stride = 1 << level
        pair = node ^ stride
        nxt = level + 1
        # look before recursing: most children are already known or are leaves
        row = self.known[nxt]
        last = nxt == self.n_levels
        here = row[node] or (not last and self._resolve(node, nxt))
        there = row[pair] or (not last and self._resolve(pair, nxt))
        if node & stride == 0:
            # upper input a = (p + q) / 2 needs both encoded values
            if here and there:
                val = 0.5 * (self.value[nxt][node] + self.value[nxt][pair]) if self.track else None
                self._set(level, node, val)
                return True
            return False
        # lower input b = p - a or a - q needs the upper input and either value
        if not self.known[level][pair] or not (here or there):
            return False
        if self.track:
            a = self.value[level][pair]
            val = self.value[nxt][pair] - a if there else a - self.value[nxt][node]
        else:
            val = None
        self._set(level, node, val)
        return True

    def _forward(self):
        # Re-encode every pair whose two inputs are now both known.
        known, pending = self.known, self.pending
        while pending:
            level, node = pending.pop()
            pair = node ^ (1 << level)
            if not known[level][pair]:
                continue
            up, lo = (node, pair) if node < pair else (pair, node)
            nxt = level + 1
            if self.track:
                a, b = self.value[level][up], self.value[level][lo]
            if not known[nxt][up]:
                self._set(nxt, up, a + b if self.track else None)
            if not known[nxt][lo]:
                self._set(nxt, lo, a - b if self.track else None)

    def run(self):
        failed = []
        for i in range(self.n):
            if i not in self.frozen and not self._resolve(i, 0):
                failed.append(i)
            if i % 2 == 1:
                self._forward()
        return failed


def check_decodability(config: CodeConfig, available) -> bool:
    """Whether the sequential decoder resolves every information channel."""
    available = np.asarray(available, dtype=bool)
    if available.shape != (config.n_total,):
        raise ValueError(f"available must have length {config.n_total}")
    if np.count_nonzero(available) < config.n_params:
        return False
    return not _SuccessiveCancellation(config, available).run()


def decodable_batch(config: CodeConfig, available) -> np.ndarray:
    """Vectorized decodability for a stack of patterns, shape ``(..., N)``.

    The stride-``N/2`` stage next to the workers splits the code into two
    half-length codes.  The first half sees a value only where both
    partners arrived (AND); once it is decoded, the second half sees a
    value where either partner arrived (OR).  Recursing gives the same
    verdict as :func:`check_decodability`, for all patterns at once.
    """
    avail = np.asarray(available, dtype=bool)
    n = config.n_total
    if avail.shape[-1] != n:
        raise ValueError(f"patterns must have trailing length {n}")
    # (..., sub-codes, length); sub-code b splits into 2b (AND) and 2b + 1 (OR)
    x = avail.reshape(avail.shape[:-1] + (1, n))
    length = n
    while length > 1:
        h = length // 2
        top, bottom = x[..., :h], x[..., h:]
        x = np.stack([top & bottom, top | bottom], axis=-2)
        x = x.reshape(avail.shape[:-1] + (n // h, h))
        length = h
    return np.all(x[..., 0] | config.frozen_mask, axis=-1)


def first_decodable_prefix(config: CodeConfig, order) -> int:
    """Smallest ``k`` such that the first ``k`` arrivals in ``order`` are decodable."""
    n = config.n_total
    order = np.asarray(order)
    prefixes = np.zeros((n, n), dtype=bool)
    ranks = np.empty(n, dtype=int)
    ranks[order] = np.arange(n)
    prefixes[:, :] = ranks[None, :] <= np.arange(n)[:, None]
    ok = decodable_batch(config, prefixes)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        raise UndecodableError(config.info_channels)
    return int(hits[0]) + 1


def decode(config: CodeConfig, outputs: ErasedOutputs) -> np.ndarray:
    """Recover the information inputs, in coordinate order, from erased outputs."""
    values = np.asarray(outputs.values, dtype=float)
    available = np.asarray(outputs.available, dtype=bool)
    if values.shape != (config.n_total,):
        raise ValueError(f"expected {config.n_total} outputs, got {values.shape}")
    sc = _SuccessiveCancellation(config, available, values)
    failed = sc.run()
    if failed:
        raise UndecodableError(failed)
    level0 = sc.value[0]
    return np.array([level0[i] for i in config.info_channels])
