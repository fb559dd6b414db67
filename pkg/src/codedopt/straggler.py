"""Worker runtime sampling and master-side stopping rules."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codec import ErasedOutputs, decodable_batch, first_decodable_prefix
from .construction import CodeConfig

DEFAULT_SHIFT = 1.0
DEFAULT_RATE = 0.5


@dataclass(frozen=True)
class RuntimeDistribution:
    kind: str  # "shifted_exponential" or "empirical"
    shift: float = DEFAULT_SHIFT
    rate: float = DEFAULT_RATE
    samples: tuple = ()

    def __post_init__(self):
        if self.kind == "shifted_exponential":
            if self.shift < 0 or not self.rate > 0:
                raise ValueError("shifted exponential needs shift >= 0 and rate > 0")
        elif self.kind == "empirical":
            if len(self.samples) == 0:
                raise ValueError("empirical runtime distribution has no samples")
            if min(self.samples) <= 0:
                raise ValueError("empirical runtimes must be positive")
        else:
            raise ValueError(f"unknown runtime distribution {self.kind!r}")

    @classmethod
    def shifted_exponential(cls, shift=DEFAULT_SHIFT, rate=DEFAULT_RATE):
        return cls("shifted_exponential", shift=float(shift), rate=float(rate))

    @classmethod
    def empirical(cls, samples):
        return cls("empirical", samples=tuple(float(s) for s in samples))

    @classmethod
    def from_file(cls, path):
        """One positive runtime (seconds) per line; blank lines and ``#`` comments skipped."""
        samples = []
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                samples.append(float(line))
        if not samples:
            raise ValueError(f"runtime file {path} contains no samples")
        return cls.empirical(samples)

    def draw(self, n, rng):
        if self.kind == "shifted_exponential":
            return self.shift + rng.exponential(1.0 / self.rate, size=n)
        return rng.choice(np.asarray(self.samples), size=n, replace=True)


@dataclass(frozen=True)
class ArrivalSchedule:
    times: np.ndarray
    order: np.ndarray

    @classmethod
    def from_times(cls, times):
        times = np.asarray(times, dtype=float)
        # stable sort: equal times arrive in index order
        return cls(times=times, order=np.argsort(times, kind="stable"))

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class StoppingRule:
    kind: str  # "first_k", "first_decodable" or "all"
    k: int = 0
    config: CodeConfig | None = None

    @classmethod
    def first_k(cls, k):
        if k < 1:
            raise ValueError("first_k needs k >= 1")
        return cls("first_k", k=int(k))

    @classmethod
    def first_decodable(cls, config):
        return cls("first_decodable", config=config)

    @classmethod
    def all(cls):
        return cls("all")

    def n_admitted(self, schedule: ArrivalSchedule) -> int:
        n = len(schedule)
        if self.kind == "all":
            return n
        if self.kind == "first_k":
            if self.k > n:
                raise ValueError(f"first_k({self.k}) can never fire with {n} workers")
            return self.k
        if self.kind == "first_decodable":
            if self.config.n_total != n:
                raise ValueError("schedule length does not match the code length")
            return first_decodable_prefix(self.config, schedule.order)
        raise ValueError(f"unknown stopping rule {self.kind!r}")


def sample_runtimes(dist: RuntimeDistribution, n: int, seed) -> ArrivalSchedule:
    if n < 1:
        raise ValueError("need at least one worker")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return ArrivalSchedule.from_times(dist.draw(n, rng))


def run_iteration(schedule: ArrivalSchedule, rule: StoppingRule, outputs, min_decodable: CodeConfig | None = None):
    """Admit outputs in arrival order until ``rule`` fires.

    When ``min_decodable`` is given the master keeps waiting past the rule
    until the admitted set is also decodable for that code.
    Returns ``(ErasedOutputs, stop_time)``.
    """
    values = np.asarray(outputs, dtype=float)
    if values.shape != (len(schedule),):
        raise ValueError("outputs and schedule lengths differ")
    k = rule.n_admitted(schedule)
    if min_decodable is not None and not (rule.kind == "first_decodable" and rule.config == min_decodable):
        k = max(k, first_decodable_prefix(min_decodable, schedule.order))
    admitted = schedule.order[:k]
    available = np.zeros(values.size, dtype=bool)
    available[admitted] = True
    stop_time = float(schedule.times[admitted[-1]])
    return ErasedOutputs(values=values, available=available), stop_time


def decodable_after_each_arrival(config: CodeConfig, schedule: ArrivalSchedule) -> np.ndarray:
    """Decodability verdict after the 1st, 2nd, ... arrival."""
    n = config.n_total
    ranks = np.empty(n, dtype=int)
    ranks[schedule.order] = np.arange(n)
    return decodable_batch(config, ranks[None, :] <= np.arange(n)[:, None])


def threaded_arrivals(tasks, max_workers=None):
    """Run zero-argument callables concurrently and record their completion times.

    Returns ``(outputs, ArrivalSchedule)`` with times measured from launch,
    so the stopping rules consume a real run exactly like a simulated one.
    """
    tasks = list(tasks)
    outputs = np.empty(len(tasks))
    times = np.empty(len(tasks))
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max_workers or len(tasks)) as pool:
        futures = {pool.submit(t): i for i, t in enumerate(tasks)}
        for fut in as_completed(futures):
            i = futures[fut]
            outputs[i] = fut.result()
            times[i] = time.perf_counter() - start
    return outputs, ArrivalSchedule.from_times(times)
