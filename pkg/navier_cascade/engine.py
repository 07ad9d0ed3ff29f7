import asyncio
import hashlib
import logging
import math
import struct
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from navier_cascade.cascade import DEFAULT_DEPTH_CAP, ProblemSpec, evaluate_cascade
from navier_cascade.errors import DataError, DomainError
from navier_cascade.models.config import CascadeMode
from navier_cascade.models.report import EstimateReport
from navier_cascade.samplers import RngStream, stream_seed
from navier_cascade.vecgeom import Vec3, as_vec3

logger = logging.getLogger(__name__)

# Chunk boundaries depend on n only, never on the worker count
CHUNK_SIZE = 256

SpaceTimePoint = Tuple[Vec3, float]


def point_key(x: Vec3, t: float) -> int:
    """64-bit key of a space-time point, from the bytes of its coordinates"""
    x = as_vec3(x)
    digest = hashlib.blake2b(struct.pack("<4d", float(x[0]), float(x[1]), float(x[2]), float(t)), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


@dataclass
class ChunkResult:
    start: int
    values: np.ndarray
    nodes: np.ndarray
    depths: np.ndarray
    truncated: np.ndarray


def run_chunk(
    spec: ProblemSpec,
    x: Vec3,
    t: float,
    seed: int,
    key: int,
    start: int,
    stop: int,
    depth_cap: int,
    mode: CascadeMode,
) -> ChunkResult:
    """Evaluate cascades start..stop-1 of one point; cascade i draws from stream_seed(seed, key, i)"""
    count = stop - start
    values = np.empty((count, 3))
    nodes = np.empty(count, dtype=np.int64)
    depths = np.empty(count, dtype=np.int64)
    truncated = np.empty(count, dtype=bool)
    for j, i in enumerate(range(start, stop)):
        try:
            outcome = evaluate_cascade(x, t, spec, RngStream(stream_seed(seed, key, i)), depth_cap, mode)
        except DataError as e:
            raise e.with_cascade(i)
        values[j] = outcome.value
        nodes[j] = outcome.nodes
        depths[j] = outcome.max_depth
        truncated[j] = outcome.truncated
    return ChunkResult(start, values, nodes, depths, truncated)


def summarize(x: Vec3, t: float, h: float, n: int, chunks: Sequence[ChunkResult], mode: CascadeMode,
              wall_time: float) -> EstimateReport:
    """Reduce chunk results, in cascade-index order, to a report"""
    chunks = sorted(chunks, key=lambda c: c.start)
    values = np.concatenate([c.values for c in chunks])
    # contiguous rows so each component is a pairwise-summed reduction
    columns = np.ascontiguousarray(values.T)
    mean = columns.sum(axis=1) / n
    std = columns.std(axis=1, ddof=1)
    nodes = np.concatenate([c.nodes for c in chunks])
    truncated = np.concatenate([c.truncated for c in chunks])
    return EstimateReport(
        x=[float(v) for v in as_vec3(x)],
        t=float(t),
        u=(h * mean).tolist(),
        stderr=(h * std / math.sqrt(n)).tolist(),
        n=n,
        truncated_fraction=float(truncated.mean()),
        nodes_mean=float(nodes.mean()),
        max_depth=int(max(int(c.depths.max()) for c in chunks)),
        h=h,
        max_abs_outcome=float(np.max(np.sqrt(np.sum(values * values, axis=1)))),
        mode=mode.value,
        wall_time=wall_time,
    )


class EstimatorEngine:
    """Schedules cascades over worker processes and reduces them deterministically"""

    def __init__(self, workers: int = 1, chunk_size: int = CHUNK_SIZE):
        """
        Args:
            workers: Worker processes; 1 evaluates inline
            chunk_size: Cascades per scheduled task
        """
        if workers < 1:
            raise DomainError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self.chunk_size = chunk_size

    def _chunks(self, n: int) -> List[Tuple[int, int]]:
        return [(start, min(start + self.chunk_size, n)) for start in range(0, n, self.chunk_size)]

    async def _estimate(
        self,
        executor: Optional[Executor],
        spec: ProblemSpec,
        x: Vec3,
        t: float,
        n: int,
        seed: int,
        depth_cap: int,
        mode: CascadeMode,
    ) -> EstimateReport:
        if n < 2:
            raise DomainError(f"n must be at least 2, got {n}")
        if not t > 0:
            raise DomainError(f"time must be positive, got {t}")
        x = as_vec3(x)
        h = spec.pair.h_at(x)
        if not (math.isfinite(h) and h > 0):
            raise DomainError(f"u = h(x) E[Ξ] is undefined at x={x.tolist()} where h={h}")
        key = point_key(x, t)
        started = time.perf_counter()
        args = [(spec, x, t, seed, key, start, stop, depth_cap, mode) for start, stop in self._chunks(n)]
        if executor is None:
            chunks = [run_chunk(*a) for a in args]
        else:
            loop = asyncio.get_running_loop()
            chunks = await asyncio.gather(*[loop.run_in_executor(executor, run_chunk, *a) for a in args])
        report = summarize(x, t, h, n, chunks, mode, time.perf_counter() - started)
        logger.info(f"u({x.tolist()}, {t}) = {report.u} ± {report.stderr} "
                    f"(n={n}, nodes/cascade={report.nodes_mean:.2f}, truncated={report.truncated_fraction:.2e})")
        return report

    async def estimate(
        self,
        spec: ProblemSpec,
        x: Vec3,
        t: float,
        n: int,
        seed: int,
        depth_cap: int = DEFAULT_DEPTH_CAP,
        mode: Optional[CascadeMode] = None,
    ) -> EstimateReport:
        """Monte Carlo estimate of u(x,t)

        Args:
            spec: The problem: ν, p, kernel pair and data
            x, t: Space-time point
            n: Number of cascades (>= 2)
            seed: Master seed
            depth_cap: Depth at which nodes keep only their data term
            mode: Ξ or Υ; defaults to spec.mode

        Returns:
            The report; identical for any worker count given the seed

        Raises:
            DataError: With cascade index and node path of the faulty draw
        """
        reports = await self.evaluate_grid(spec, [(x, t)], n, seed, depth_cap, mode)
        return reports[0]

    async def evaluate_grid(
        self,
        spec: ProblemSpec,
        points: Sequence[SpaceTimePoint],
        n: int,
        seed: int,
        depth_cap: int = DEFAULT_DEPTH_CAP,
        mode: Optional[CascadeMode] = None,
    ) -> List[EstimateReport]:
        """One report per (x, t), in the order given"""
        if not points:
            raise DomainError("grid must be nonempty")
        mode = spec.mode if mode is None else CascadeMode(mode)
        if self.workers == 1:
            return [await self._estimate(None, spec, x, t, n, seed, depth_cap, mode) for x, t in points]
        try:
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                return list(await asyncio.gather(
                    *[self._estimate(executor, spec, x, t, n, seed, depth_cap, mode) for x, t in points]
                ))
        except DataError as e:
            logger.error(f"Cascade data error: {e}", exc_info=True)
            raise


def mc_estimate(x: Vec3, t: float, spec: ProblemSpec, n: int, seed: int, workers: int = 1,
                depth_cap: int = DEFAULT_DEPTH_CAP, mode: Optional[CascadeMode] = None) -> EstimateReport:
    """Synchronous front end of EstimatorEngine.estimate"""
    return asyncio.run(EstimatorEngine(workers).estimate(spec, x, t, n, seed, depth_cap, mode))


def grid_evaluate(grid: Sequence[SpaceTimePoint], spec: ProblemSpec, n: int, seed: int, workers: int = 1,
                  depth_cap: int = DEFAULT_DEPTH_CAP, mode: Optional[CascadeMode] = None) -> List[EstimateReport]:
    """Synchronous front end of EstimatorEngine.evaluate_grid"""
    return asyncio.run(EstimatorEngine(workers).evaluate_grid(spec, grid, n, seed, depth_cap, mode))
