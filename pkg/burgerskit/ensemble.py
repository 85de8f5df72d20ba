from __future__ import annotations

import asyncio
import contextvars
import dataclasses
import enum
import logging
import traceback
import typing as t
from concurrent.futures import ThreadPoolExecutor

from burgerskit.utils import now

if t.TYPE_CHECKING:
    from collections.abc import Awaitable, Callable, Coroutine, Sequence
    from concurrent.futures import Executor

logger = logging.getLogger("burgerskit")

Hook = t.Callable[["Member"], t.Union[None, "Awaitable[None]"]]


class Status(str, enum.Enum):
    QUEUED = "queued"
    ACTIVE = "active"
    FAILED = "failed"
    COMPLETE = "complete"


@dataclasses.dataclass
class Member:
    """
    One run of an ensemble.

    key: run id, also the name of the member's output directory
    kwargs: keyword arguments passed to the ensemble function
    queued: enqueue time in epoch milliseconds
    started: start time in epoch milliseconds
    completed: completion time in epoch milliseconds
    result: return value of the function
    error: formatted traceback if the function raised
    exception: the exception itself, kept for exit code mapping
    status: Status enum
    """

    key: str
    kwargs: dict[str, t.Any] = dataclasses.field(default_factory=dict)
    queued: int = 0
    started: int = 0
    completed: int = 0
    result: t.Any = None
    error: t.Optional[str] = None
    exception: t.Optional[BaseException] = dataclasses.field(default=None, repr=False)
    status: Status = Status.QUEUED

    def __hash__(self) -> int:
        return hash(self.key)

    def to_dict(self) -> dict[str, t.Any]:
        return {
            "key": self.key,
            "status": self.status.value,
            "process_ms": self.duration("process"),
            "total_ms": self.duration("total"),
            "error": self.error,
        }

    def duration(self, kind: str) -> t.Optional[int]:
        """
        Returns the duration of the run given kind.

        Kind can be process (how long it took to process),
        start (how long it waited for a worker), or total.
        """
        if kind == "process":
            return self._duration(self.completed, self.started)
        if kind == "start":
            return self._duration(self.started, self.queued)
        if kind == "total":
            return self._duration(self.completed, self.queued)
        raise ValueError(f"Unknown duration type: {kind}")

    def _duration(self, a: int, b: int) -> t.Optional[int]:
        return a - b if a and b else None


class EnsembleWorker:
    """
    Runs one function over many members with bounded concurrency.

    function: sync or async callable, called with each member's kwargs
    concurrency: number of members to process concurrently
    before_process: hook called with the member before it runs
    after_process: hook called with the member after it finished or failed
    executor: executor for sync functions, a thread pool sized to concurrency by default
    """

    def __init__(
        self,
        function: Callable[..., t.Any],
        *,
        concurrency: int = 1,
        before_process: t.Optional[Hook] = None,
        after_process: t.Optional[Hook] = None,
        executor: t.Optional[Executor] = None,
    ) -> None:
        if concurrency < 1:
            raise ValueError(f"concurrency must be positive, got {concurrency}")
        self.function = function
        self.concurrency = concurrency
        self.before_process = before_process
        self.after_process = after_process
        self.executor = executor

    async def _hook(self, hook: t.Optional[Hook], member: Member) -> None:
        if hook:
            result = hook(member)
            if asyncio.iscoroutine(result):
                await result

    async def process(self, member: Member, executor: t.Optional[Executor] = None) -> Member:
        try:
            member.started = now()
            member.status = Status.ACTIVE
            await self._hook(self.before_process, member)
            logger.info("Processing member %s", member.key)
            function = ensure_coroutine_function(self.function, executor)
            member.result = await function(**member.kwargs)
            member.status = Status.COMPLETE
        except Exception as exc:  # pylint: disable=broad-except
            logger.exception("Error processing member %s", member.key)
            member.status = Status.FAILED
            member.error = traceback.format_exc()
            member.exception = exc
        finally:
            member.completed = now()
            try:
                await self._hook(self.after_process, member)
            except Exception:  # pylint: disable=broad-except
                logger.exception("Failed to run after process hook")
        return member

    async def run(self, members: Sequence[Member]) -> list[Member]:
        """Processes every member and returns them in input order."""
        semaphore = asyncio.Semaphore(self.concurrency)
        for member in members:
            member.queued = now()
            member.status = Status.QUEUED

        executor = self.executor or ThreadPoolExecutor(max_workers=self.concurrency)

        async def bounded(member: Member) -> Member:
            async with semaphore:
                return await self.process(member, executor)

        try:
            return list(await asyncio.gather(*(bounded(m) for m in members)))
        finally:
            if self.executor is None:
                executor.shutdown(wait=True)


def ensure_coroutine_function(
    func: Callable, executor: t.Optional[Executor] = None
) -> Callable[..., Coroutine]:
    if asyncio.iscoroutinefunction(func):
        return func

    async def wrapped(*args: t.Any, **kwargs: t.Any) -> t.Any:
        loop = asyncio.get_running_loop()
        ctx = contextvars.copy_context()
        return await loop.run_in_executor(executor, lambda: ctx.run(func, *args, **kwargs))

    return wrapped


def run_ensemble(
    function: Callable[..., t.Any],
    members: Sequence[Member],
    concurrency: int = 1,
    **hooks: t.Optional[Hook],
) -> list[Member]:
    """Blocking entry point: runs the ensemble on a fresh event loop."""
    worker = EnsembleWorker(function, concurrency=concurrency, **hooks)
    return asyncio.run(worker.run(members))
