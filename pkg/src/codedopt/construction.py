"""Erasure-channel code construction for the Hadamard perturbation code.

Channel ``i`` of a length-``N`` code is obtained by applying, for every bit
of ``i`` from the most significant to the least significant, either the
"minus" map ``z -> 2z - z**2`` (bit 0, the upper butterfly input) or the
"plus" map ``z -> z**2`` (bit 1, the lower input).  This is the natural
(non bit-reversed) order of the butterfly used in :mod:`codedopt.codec`,
whose stride-1 stage sits next to the inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_DESIGN_ERASURE = 0.5


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


def polarize_erasure(z):
    """One polarization step: ``z -> (2z - z**2, z**2)``."""
    return 2.0 * z - z * z, z * z


def _log_reliabilities(n_total: int, design_erasure: float):
    # Track log z and log(1 - z) side by side. Both recursions are
    # well conditioned, so channels near 0 and near 1 keep their ranking
    # long after plain floating point would have rounded them together.
    lz = np.array([np.log(design_erasure)])
    ly = np.array([np.log1p(-design_erasure)])
    while lz.size < n_total:
        z = np.exp(lz)
        y = np.exp(ly)
        new_lz = np.empty(2 * lz.size)
        new_ly = np.empty(2 * lz.size)
        # minus channel: z' = z(1 + y), 1 - z' = y**2
        new_lz[0::2] = lz + np.log1p(y)
        new_ly[0::2] = 2.0 * ly
        # plus channel: z' = z**2, 1 - z' = y(1 + z)
        new_lz[1::2] = 2.0 * lz
        new_ly[1::2] = ly + np.log1p(z)
        lz, ly = new_lz, new_ly
    return lz, ly


def _check_args(n_total, design_erasure):
    if not is_power_of_two(n_total):
        raise ValueError(f"N must be a power of two, got {n_total}")
    if not 0.0 < design_erasure < 1.0:
        raise ValueError(f"design_erasure must lie in (0, 1), got {design_erasure}")


def bec_channel_reliabilities(n_total: int, design_erasure: float = DEFAULT_DESIGN_ERASURE) -> np.ndarray:
    """Erasure probability of each transformed channel, in channel order.

    >>> bec_channel_reliabilities(4, 0.5).tolist()
    [0.9375, 0.5625, 0.4375, 0.0625]
    """
    _check_args(n_total, design_erasure)
    lz, _ = _log_reliabilities(n_total, design_erasure)
    return np.minimum(np.exp(lz), 1.0)


def _worst_first(n_total, design_erasure):
    lz, ly = _log_reliabilities(n_total, design_erasure)
    # Channels with z <= 1/2 are ranked by log z, the rest by -log(1 - z).
    keys = [
        (0, float(a), i) if a <= b else (1, float(-b), i)
        for i, (a, b) in enumerate(zip(lz, ly))
    ]
    # Largest z first; ties freeze the lower index first.
    keys.sort(key=lambda k: (-k[0], -k[1], k[2]))
    return [k[2] for k in keys]


@dataclass(frozen=True)
class CodeConfig:
    """A rate ``d/N`` code: which channels are frozen and which carry a coordinate.

    ``info_channels`` lists the information channels in increasing order;
    ``info_channels[j]`` carries coordinate ``j`` (0-based).
    """

    n_total: int
    n_params: int
    design_erasure: float
    z_values: np.ndarray = field(repr=False, compare=False)
    frozen_set: frozenset
    info_channels: tuple

    @property
    def rate(self) -> float:
        return self.n_params / self.n_total

    @property
    def n_levels(self) -> int:
        return self.n_total.bit_length() - 1

    @property
    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_total, dtype=bool)
        mask[list(self.frozen_set)] = True
        return mask

    def coordinate_of(self, channel: int) -> int:
        return self.info_channels.index(channel)


def build_config(n_params: int, n_total: int, design_erasure: float = DEFAULT_DESIGN_ERASURE) -> CodeConfig:
    """Freeze the ``N - d`` least reliable channels and use the rest for coordinates."""
    _check_args(n_total, design_erasure)
    if not 1 <= n_params <= n_total:
        raise ValueError(f"need 1 <= d <= N, got d={n_params}, N={n_total}")
    ranking = _worst_first(n_total, design_erasure)
    frozen = frozenset(ranking[: n_total - n_params])
    info = tuple(i for i in range(n_total) if i not in frozen)
    z = bec_channel_reliabilities(n_total, design_erasure)
    z.setflags(write=False)
    return CodeConfig(
        n_total=int(n_total),
        n_params=int(n_params),
        design_erasure=float(design_erasure),
        z_values=z,
        frozen_set=frozen,
        info_channels=info,
    )
