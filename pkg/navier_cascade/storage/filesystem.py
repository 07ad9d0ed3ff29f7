import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, TextIO, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from .base import AlreadyExistsError, NotFoundError, Storage, StorageError
from ..models.report import EstimateReport, RunRecord, RunStatus

logger = logging.getLogger(__name__)

T = TypeVar('T', bound=BaseModel)

FIELD_COLUMNS = ["x1", "x2", "x3", "t", "u1", "u2", "u3", "se1", "se2", "se3", "n", "trunc_frac"]


class FilesystemStorage(Storage[T]):
    """One JSON file per entity under <base_dir>/<entity_name>/"""

    def __init__(self, base_dir: str, model_class: Type[T], entity_name: str):
        """Initialize the filesystem storage.

        Args:
            base_dir: Base directory for storing all data.
            model_class: The Pydantic model class this storage handles.
            entity_name: The name of the entity (e.g., 'runs').
        """
        self.base_dir = Path(base_dir)
        self._model_class = model_class
        self.storage_dir = self.base_dir / entity_name
        try:
            self.storage_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"cannot create storage directory {self.storage_dir}: {e}") from e

    @classmethod
    def for_runs(cls, base_dir: str) -> 'Storage[RunRecord]':
        """Create a storage instance for RunRecord."""
        return cls(base_dir, RunRecord, 'runs')

    def _file(self, entity_id: str) -> Path:
        return self.storage_dir / f"{entity_id}.json"

    async def _create(self, entity: T) -> T:
        entity_id = getattr(entity, 'run_id', None)
        if not entity_id:
            raise ValueError("Entity must have a 'run_id' attribute.")
        entity_file = self._file(entity_id)
        if entity_file.exists():
            raise AlreadyExistsError(f"{self._model_class.__name__} with ID {entity_id} already exists.")
        entity_file.write_text(entity.model_dump_json(indent=4))
        return entity

    async def _get(self, id: str) -> T:
        entity_file = self._file(id)
        if not entity_file.exists():
            raise NotFoundError(f"{self._model_class.__name__} with ID {id} not found.")
        return self._model_class.model_validate_json(entity_file.read_text())

    async def _update(self, entity: T) -> T:
        entity_id = getattr(entity, 'run_id', None)
        if not entity_id:
            raise ValueError("Entity must have a 'run_id' attribute.")
        entity_file = self._file(entity_id)
        if not entity_file.exists():
            raise NotFoundError(f"{self._model_class.__name__} with ID {entity_id} not found.")
        entity_file.write_text(entity.model_dump_json(indent=4))
        return entity

    async def _list(self, **filters: Any) -> List[T]:
        entities = []
        for entity_file in sorted(self.storage_dir.glob("*.json")):
            try:
                entity = self._model_class.model_validate_json(entity_file.read_text())
            except (json.JSONDecodeError, ValidationError):
                logger.warning(f"Skipping unreadable record {entity_file.name}")
                continue
            if all(getattr(entity, key, None) == value for key, value in filters.items()):
                entities.append(entity)
        return entities

    async def create_run(self, run: RunRecord) -> RunRecord:
        return await self._create(run)

    async def get_run(self, run_id: str) -> RunRecord:
        return await self._get(run_id)

    async def update_run(self, run: RunRecord) -> RunRecord:
        return await self._update(run)

    async def list_runs(self, command: Optional[str] = None, status: Optional[RunStatus] = None) -> List[RunRecord]:
        filters = {}
        if command:
            filters["command"] = command
        if status:
            filters["status"] = RunStatus(status)
        runs = await self._list(**filters)
        return sorted(runs, key=lambda r: r.created_at)


def provenance_line(version: str, seed: Optional[int], config_hash: Optional[str]) -> str:
    return f"# navier_cascade {version} seed={seed} config={config_hash}"


def report_rows(reports: Iterable[EstimateReport]) -> List[List[Any]]:
    """Rows in FIELD_COLUMNS order, one per estimate"""
    return [[*r.x, r.t, *r.u, *r.stderr, r.n, r.truncated_fraction] for r in reports]


def oracle_rows(points: np.ndarray, times: Sequence[float], values: np.ndarray, tolerance: float) -> List[List[Any]]:
    """Oracle values in the estimator schema: se is the grid tolerance, n and trunc_frac are 0

    Args:
        points: (N, 3) spatial points
        times: N times
        values: (N, 3) velocities
        tolerance: Oracle tolerance reported in every se column
    """
    return [
        [*map(float, x), float(t), *map(float, u), tolerance, tolerance, tolerance, 0, 0.0]
        for x, t, u in zip(points, times, values)
    ]


def write_field_csv(path: str, rows: Sequence[Sequence[Any]], version: str, seed: Optional[int],
                    config_hash: Optional[str]) -> Path:
    """Write a field CSV: one provenance comment line, the header, then rows

    Floats are written with repr so a given seed and config give byte-identical files.

    Raises:
        StorageError: If the file cannot be written
    """
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="") as fh:
            fh.write(provenance_line(version, seed, config_hash) + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(FIELD_COLUMNS)
            for row in rows:
                if len(row) != len(FIELD_COLUMNS):
                    raise StorageError(f"field row has {len(row)} columns, expected {len(FIELD_COLUMNS)}")
                writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    except OSError as e:
        raise StorageError(f"cannot write {target}: {e}") from e
    logger.info(f"Wrote {len(rows)} rows to {target}")
    return target


HISTOGRAM_COLUMNS = ["sampler", "bin_lo", "bin_hi", "count", "expected"]


def write_histogram_csv(target: TextIO, rows: Sequence[Sequence[Any]]) -> None:
    """Sampler histogram rows, HISTOGRAM_COLUMNS order, to an open text stream"""
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(HISTOGRAM_COLUMNS)
    for sampler, lo, hi, count, expected in rows:
        writer.writerow([sampler, repr(float(lo)), repr(float(hi)), int(count), repr(float(expected))])
