"""
Trial Controller - Orchestrate Monte Carlo trial workers
"""
import asyncio
import logging
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import List, Optional, Tuple

from models.experiment import PartialResult
from services.experiment_service import ExperimentService, TrialTask
import config

logger = logging.getLogger(__name__)


def split_trials(trials: int, parts: int) -> List[Tuple[int, int]]:
    """Contiguous, disjoint ranges covering [0, trials); empty ranges are dropped"""
    parts = max(1, min(parts, trials)) if trials > 0 else 1
    base, extra = divmod(trials, parts)
    ranges, start = [], 0
    for i in range(parts):
        stop = start + base + (1 if i < extra else 0)
        if stop > start:
            ranges.append((start, stop))
        start = stop
    return ranges


class TrialWorker:
    """
    Individual trial worker
    Runs one contiguous range of trials in the pool executor
    """

    def __init__(self, worker_id: int, experiment_service: ExperimentService, executor: Optional[Executor]):
        self.worker_id = worker_id
        self.experiment_service = experiment_service
        self.executor = executor

    async def run(self, task: TrialTask, start: int, stop: int) -> PartialResult:
        """Compute trials [start, stop)"""
        logger.debug(f"Worker {self.worker_id} running trials [{start}, {stop})")
        try:
            loop = asyncio.get_running_loop()
            return await loop.run_in_executor(
                self.executor, self.experiment_service.distances, task, start, stop
            )
        except Exception as e:
            logger.exception(f"Worker {self.worker_id} failed on trials [{start}, {stop}): {e}")
            raise


class TrialController:
    """
    Trial Controller - Manages the pool of trial workers
    The merged result does not depend on the worker count
    """

    def __init__(self, experiment_service: ExperimentService, num_workers: int = None,
                 executor_kind: str = None):
        self.experiment_service = experiment_service
        self.num_workers = max(1, num_workers or config.WORKERS)
        self.executor_kind = executor_kind or config.EXECUTOR
        if self.executor_kind not in ('process', 'thread'):
            raise ValueError(f"executor must be 'process' or 'thread', got {self.executor_kind!r}")
        self.workers: List[TrialWorker] = []
        self.executor: Optional[Executor] = None

    def _make_executor(self, task: TrialTask) -> Executor:
        # custom interactions carry arbitrary callables that need not pickle
        if self.executor_kind == 'thread' or task.needs_threads:
            return ThreadPoolExecutor(max_workers=self.num_workers)
        return ProcessPoolExecutor(max_workers=self.num_workers)

    async def start(self, task: TrialTask):
        """Start the executor and the workers"""
        if self.num_workers > 1:
            self.executor = self._make_executor(task)
        self.workers = [TrialWorker(i, self.experiment_service, self.executor)
                        for i in range(self.num_workers)]
        logger.info(f"Started {self.num_workers} trial workers "
                    f"({type(self.executor).__name__ if self.executor else 'in-process'})")

    async def stop(self):
        """Stop all workers"""
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None
        self.workers.clear()
        logger.debug("All trial workers stopped")

    async def run(self, task: TrialTask, trials: int) -> List[PartialResult]:
        """Fan trials out over the workers and gather the partial results"""
        ranges = split_trials(trials, self.num_workers)
        if self.num_workers == 1:
            return [self.experiment_service.distances(task, start, stop) for start, stop in ranges]

        await self.start(task)
        try:
            jobs = [self.workers[i].run(task, start, stop) for i, (start, stop) in enumerate(ranges)]
            return list(await asyncio.gather(*jobs))
        finally:
            await self.stop()

    def collect(self, task: TrialTask, trials: int) -> List[PartialResult]:
        """Blocking entry point used as the experiment runner"""
        return asyncio.run(self.run(task, trials))
