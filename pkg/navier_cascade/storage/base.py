from abc import ABC, abstractmethod
from typing import ClassVar, Generic, List, Optional, Type, TypeVar

from navier_cascade.models.base import CascadeBaseModel as BaseModel
from navier_cascade.models.report import RunRecord, RunStatus

T = TypeVar('T', bound=BaseModel)


class StorageError(Exception):
    """Base exception for storage-related errors"""
    pass


class NotFoundError(StorageError):
    """Raised when a requested entity is not found"""
    pass


class AlreadyExistsError(StorageError):
    """Raised when trying to create an entity that already exists"""
    pass


class Storage(ABC, Generic[T]):
    """Abstract base class for run-record backends"""
    model_class: ClassVar[Type[T]]

    @abstractmethod
    async def create_run(self, run: RunRecord) -> RunRecord:
        """
        Persist a new run record

        Args:
            run: The record to store

        Returns:
            The stored record

        Raises:
            AlreadyExistsError: If a record with the same run_id exists
        """
        pass

    @abstractmethod
    async def get_run(self, run_id: str) -> RunRecord:
        """
        Get a run record by ID

        Raises:
            NotFoundError: If no record with the given ID exists
        """
        pass

    @abstractmethod
    async def update_run(self, run: RunRecord) -> RunRecord:
        """Overwrite an existing run record"""
        pass

    @abstractmethod
    async def list_runs(self, command: Optional[str] = None, status: Optional[RunStatus] = None) -> List[RunRecord]:
        """List run records, optionally filtered by command and status, oldest first"""
        pass

