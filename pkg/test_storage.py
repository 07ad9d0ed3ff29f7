"""
Tests for run-record storage and the field/histogram CSV writers.
"""
import io
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from navier_cascade.models.report import EstimateReport, RunRecord, RunStatus
from navier_cascade.storage import (
    FIELD_COLUMNS,
    HISTOGRAM_COLUMNS,
    AlreadyExistsError,
    FilesystemStorage,
    NotFoundError,
    StorageError,
    oracle_rows,
    report_rows,
    write_field_csv,
    write_histogram_csv,
)


def _record(run_id: str, command: str = "estimate", minutes: int = 0) -> RunRecord:
    created = datetime(2024, 6, 11, tzinfo=timezone.utc) + timedelta(minutes=minutes)
    return RunRecord(run_id=run_id, command=command, version="0.1.0", created_at=created, seed=7)


@pytest.fixture
def storage(tmp_path):
    return FilesystemStorage.for_runs(str(tmp_path))


@pytest.mark.asyncio
async def test_create_and_get_run(storage):
    await storage.create_run(_record("a"))
    loaded = await storage.get_run("a")
    assert loaded.command == "estimate"
    assert loaded.status == RunStatus.PENDING
    assert loaded.seed == 7


@pytest.mark.asyncio
async def test_create_twice_raises(storage):
    await storage.create_run(_record("a"))
    with pytest.raises(AlreadyExistsError):
        await storage.create_run(_record("a"))


@pytest.mark.asyncio
async def test_missing_run(storage):
    with pytest.raises(NotFoundError):
        await storage.get_run("missing")
    with pytest.raises(NotFoundError):
        await storage.update_run(_record("missing"))


@pytest.mark.asyncio
async def test_update_and_filter_runs(storage):
    await storage.create_run(_record("late", minutes=5))
    await storage.create_run(_record("early", command="verify"))
    finished = (await storage.get_run("late")).model_copy(update={"status": RunStatus.COMPLETED})
    await storage.update_run(finished)

    assert [r.run_id for r in await storage.list_runs()] == ["early", "late"]
    assert [r.run_id for r in await storage.list_runs(command="verify")] == ["early"]
    assert [r.run_id for r in await storage.list_runs(status=RunStatus.COMPLETED)] == ["late"]


@pytest.mark.asyncio
async def test_list_skips_unreadable_records(storage):
    await storage.create_run(_record("a"))
    (storage.storage_dir / "broken.json").write_text("{not json")
    assert [r.run_id for r in await storage.list_runs()] == ["a"]


def _report() -> EstimateReport:
    return EstimateReport(x=[1.0, 0.0, 0.0], t=0.5, u=[0.1, 1.0 / 3.0, -2e-17], stderr=[1e-3, 2e-3, 3e-3], n=100,
                          truncated_fraction=0.0, nodes_mean=1.5, h=1.0)


def test_field_csv_layout(tmp_path):
    path = write_field_csv(str(tmp_path / "out" / "field.csv"), report_rows([_report()]), "0.1.0", 7, "abc")
    lines = path.read_text().splitlines()
    assert lines[0] == "# navier_cascade 0.1.0 seed=7 config=abc"
    assert lines[1] == ",".join(FIELD_COLUMNS)
    assert repr(1.0 / 3.0) in lines[2]
    assert len(lines) == 3


def test_oracle_rows_report_tolerance_as_stderr():
    rows = oracle_rows(np.zeros((2, 3)), [0.25, 0.5], np.ones((2, 3)), 1e-4)
    assert len(rows[0]) == len(FIELD_COLUMNS)
    assert rows[1][3] == 0.5
    assert rows[0][7:] == [1e-4, 1e-4, 1e-4, 0, 0.0]


def test_field_csv_rejects_short_rows(tmp_path):
    with pytest.raises(StorageError):
        write_field_csv(str(tmp_path / "field.csv"), [[1.0, 2.0]], "0.1.0", 0, None)


def test_field_csv_unwritable_path(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    with pytest.raises(StorageError):
        write_field_csv(str(blocker / "field.csv"), report_rows([_report()]), "0.1.0", 7, "abc")


def test_histogram_csv():
    buffer = io.StringIO()
    write_histogram_csv(buffer, [("tau1", 0.0, 0.5, 12, 11.5)])
    header, row = buffer.getvalue().splitlines()
    assert header == ",".join(HISTOGRAM_COLUMNS)
    assert row == "tau1,0.0,0.5,12,11.5"
