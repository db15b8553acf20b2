from dataclasses import dataclass
from typing import Any, Iterable, List, Optional, Sequence

from ..errors import ConfigurationError, ParameterError
from . import ResultBackend
from .memory import MemoryResultStore
from .redis import RedisResultStore

BACKENDS = ("memory", "redis")


def job_tag(domain: str, task: str, agent: str, seed: int) -> str:
    """Tag shared by every row of one (task, agent, seed) job."""
    return f"job:{domain}:{task}:{agent}:{seed}"


@dataclass(frozen=True)
class EvalRow:
    """Mean exploration-free return of one evaluation point."""

    domain: str
    task: str
    agent: str
    seed: int
    env_steps: int
    mean_return: float
    wallclock_s: float = 0.0

    @property
    def key(self) -> str:
        return f"{self.domain}/{self.task}/{self.agent}/{self.seed}/{self.env_steps}"

    @property
    def job_tag(self) -> str:
        return job_tag(self.domain, self.task, self.agent, self.seed)

    @property
    def tags(self) -> List[str]:
        return [f"task:{self.domain}:{self.task}", f"agent:{self.agent}", f"seed:{self.seed}", self.job_tag]

    def sort_key(self) -> tuple:
        return (self.domain, self.task, self.agent, self.seed, self.env_steps)


class ResultStore:
    """
    Evaluation-row store with tag support.
    Supports in-memory and Redis backends.
    """

    def __init__(self, backend: str = "memory", **kwargs: Any) -> None:
        """
        Initialize the store with the specified backend.

        Args:
            backend: The backend to use ('memory' or 'redis')
            **kwargs: Additional arguments to pass to the backend constructor
        """
        self.backend_name = backend
        self._backend: ResultBackend
        if backend == "memory":
            if kwargs:
                raise ConfigurationError(f"The memory backend takes no settings, got {sorted(kwargs)}")
            self._backend = MemoryResultStore()
        elif backend == "redis":
            self._backend = RedisResultStore(**kwargs)
        else:
            raise ConfigurationError(f"Unsupported backend: {backend}")

    def put_row(self, row: EvalRow) -> None:
        """Store ``row`` under its key, tagged by task, agent, seed and job."""
        self._backend.set(row.key, row, tags=row.tags)

    def put_rows(self, rows: Iterable[EvalRow]) -> None:
        for row in rows:
            self.put_row(row)

    def put_job(self, rows: Sequence[EvalRow]) -> int:
        """
        Replace every stored row of the job that ``rows`` come from.

        Rows of an earlier run of the same job at other evaluation points
        are removed first.

        Returns:
            The number of rows removed
        """
        jobs = {row.job_tag for row in rows}
        if len(jobs) != 1:
            raise ParameterError(f"put_job needs the rows of exactly one job, got {len(jobs)}")
        removed = self._backend.delete_by_tag(jobs.pop())
        self.put_rows(rows)
        return removed

    def rows(self, tag: Optional[str] = None) -> List[EvalRow]:
        """
        Stored rows in a deterministic order.

        Args:
            tag: e.g. ``task:cartpole:swingup``, ``agent:ddpg`` or ``seed:0``
                (all rows when None)
        """
        found = self._backend.getall() if tag is None else self._backend.get_by_tag(tag)
        return sorted(found.values(), key=EvalRow.sort_key)

    def job_rows(self, domain: str, task: str, agent: str, seed: int) -> List[EvalRow]:
        return self.rows(job_tag(domain, task, agent, seed))

    def get(self, key: str) -> Optional[EvalRow]:
        return self._backend.get(key)

    def delete_by_tag(self, tag: str) -> int:
        """
        Remove all rows with a specific tag.

        Returns:
            The number of rows removed
        """
        return self._backend.delete_by_tag(tag)
