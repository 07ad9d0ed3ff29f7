from navier_cascade.storage.base import AlreadyExistsError, NotFoundError, Storage, StorageError
from navier_cascade.storage.filesystem import (
    FIELD_COLUMNS,
    HISTOGRAM_COLUMNS,
    FilesystemStorage,
    oracle_rows,
    report_rows,
    write_field_csv,
    write_histogram_csv,
)

__all__ = [
    "AlreadyExistsError",
    "FIELD_COLUMNS",
    "HISTOGRAM_COLUMNS",
    "FilesystemStorage",
    "NotFoundError",
    "Storage",
    "StorageError",
    "oracle_rows",
    "report_rows",
    "write_field_csv",
    "write_histogram_csv",
]
