"""Session and track records, CSV ingestion, and the history/target split.

File formats
------------
Track features: header-first CSV (UTF-8, ``.`` decimal separator) with
columns ``track_id``, ``duration``, ``release_year``, the 16 scalar feature
columns named in :data:`SCALAR_FEATURE_NAMES`, and dense vector columns
``acoustic_vector_0 .. acoustic_vector_{D-1}``. The vector dimension D is
inferred from the header and must match on every row. Unknown extra columns
are ignored so files with a wider schema still load.

Session log: CSV with columns ``session_id, session_position,
session_length, track_id, skip_1, skip_2, skip_3, premium, shuffle,
hour_of_day, day, month``. Boolean cells are encoded as ``0``/``1``. Rows
must be contiguous per session and ordered by position.

Parsed collections are built single-writer and treated as immutable
afterwards, so they are safe to share across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import (
    DuplicateTrackError,
    IntegrityError,
    MalformedSessionError,
    RowParseError,
    SchemaError,
    UnknownTrackError,
)

#: Canonical ordering of the per-track scalar features. Index 0 is
#: popularity and index 15 is valence; every 16-wide block in the feature
#: vector uses this order.
SCALAR_FEATURE_NAMES = (
    "popularity",
    "acousticness",
    "beat_strength",
    "bounciness",
    "danceability",
    "dyn_range_mean",
    "energy",
    "flatness",
    "instrumentalness",
    "liveness",
    "loudness",
    "mechanism",
    "tempo",
    "organism",
    "speechiness",
    "valence",
)

N_SCALAR_FEATURES = len(SCALAR_FEATURE_NAMES)

MIN_SESSION_LENGTH = 2
MAX_SESSION_LENGTH = 20
#: Upper bound on targets per session: ceil/floor split of a length-20
#: session leaves at most 10 rows to predict.
MAX_TARGET_POSITIONS = 10

DEFAULT_ACOUSTIC_DIM = 7

SESSION_LOG_COLUMNS = (
    "session_id",
    "session_position",
    "session_length",
    "track_id",
    "skip_1",
    "skip_2",
    "skip_3",
    "premium",
    "shuffle",
    "hour_of_day",
    "day",
    "month",
)


@dataclass(frozen=True, eq=False)
class TrackMetadata:
    """Per-track scalar features plus a dense acoustic vector.

    ``scalars`` holds the 16 values in :data:`SCALAR_FEATURE_NAMES` order;
    ``popularity`` duplicates ``scalars[0]`` for convenient access.
    """

    track_id: str
    duration_s: float
    release_year: int
    popularity: float
    scalars: np.ndarray
    acoustic_vector: np.ndarray


@dataclass(frozen=True)
class SessionRow:
    """One playback event. Skip flags nest: skip_1 => skip_2 => skip_3."""

    session_id: str
    position: int
    session_length: int
    track_id: str
    skip_1: bool
    skip_2: bool
    skip_3: bool
    premium: bool
    shuffle: bool
    hour: int
    day: int
    month: int


@dataclass(frozen=True, eq=False)
class Session:
    """An ordered sequence of rows sharing one session_id."""

    session_id: str
    rows: tuple[SessionRow, ...]

    @property
    def length(self) -> int:
        return len(self.rows)


@dataclass(frozen=True, eq=False)
class SessionSplit:
    """History (skip flags known) and targets (flags to predict).

    History gets the ceiling half, so targets never exceed
    :data:`MAX_TARGET_POSITIONS` rows.
    """

    history: tuple[SessionRow, ...]
    targets: tuple[SessionRow, ...]

    @property
    def h(self) -> int:
        return len(self.history)


def validate_session(session: Session) -> None:
    """Check all Session invariants, raising a typed error on violation."""
    n = session.length
    if not MIN_SESSION_LENGTH <= n <= MAX_SESSION_LENGTH:
        raise MalformedSessionError(
            f"session {session.session_id!r}: length {n} outside "
            f"[{MIN_SESSION_LENGTH}, {MAX_SESSION_LENGTH}]"
        )
    for expect, row in enumerate(session.rows, start=1):
        if row.session_id != session.session_id:
            raise MalformedSessionError(
                f"session {session.session_id!r}: row carries foreign id "
                f"{row.session_id!r}"
            )
        if row.position != expect:
            raise MalformedSessionError(
                f"session {session.session_id!r}: expected position {expect}, "
                f"found {row.position}"
            )
        if row.session_length != n:
            raise MalformedSessionError(
                f"session {session.session_id!r}: declared length "
                f"{row.session_length} does not match row count {n}"
            )
        _validate_row_ranges(row)


def _validate_row_ranges(row: SessionRow) -> None:
    if row.skip_1 and not row.skip_2:
        raise IntegrityError(
            f"session {row.session_id!r} position {row.position}: "
            "skip_1 set without skip_2"
        )
    if row.skip_2 and not row.skip_3:
        raise IntegrityError(
            f"session {row.session_id!r} position {row.position}: "
            "skip_2 set without skip_3"
        )
    if not 0 <= row.hour <= 23:
        raise IntegrityError(f"hour {row.hour} outside [0, 23]")
    if not 1 <= row.day <= 31:
        raise IntegrityError(f"day {row.day} outside [1, 31]")
    if not 1 <= row.month <= 12:
        raise IntegrityError(f"month {row.month} outside [1, 12]")


def split_session(session: Session) -> SessionSplit:
    """Split into history (first ceil(n/2) rows) and targets (the rest)."""
    h = (session.length + 1) // 2
    return SessionSplit(history=session.rows[:h], targets=session.rows[h:])


# ---------------------------------------------------------------------------
# Track-feature CSV


def _track_header_columns(dim: int) -> list[str]:
    cols = ["track_id", "duration", "release_year"]
    cols.extend(SCALAR_FEATURE_NAMES)
    cols.extend(f"acoustic_vector_{k}" for k in range(dim))
    return cols


def _infer_acoustic_dim(fieldnames: Iterable[str]) -> int:
    prefix = "acoustic_vector_"
    indices = set()
    for name in fieldnames:
        if name.startswith(prefix):
            try:
                indices.add(int(name[len(prefix):]))
            except ValueError:
                raise SchemaError(f"malformed acoustic vector column {name!r}")
    if not indices:
        raise SchemaError("no acoustic_vector_* columns in header")
    dim = len(indices)
    if indices != set(range(dim)):
        raise SchemaError(
            "acoustic vector columns must be numbered contiguously from 0, "
            f"got indices {sorted(indices)}"
        )
    return dim


def _float_cell(value: str, column: str, line_num: int) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise RowParseError(
            f"line {line_num}: cannot parse {column}={value!r} as a number",
            line_num,
        )


def _int_cell(value: str, column: str, line_num: int) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise RowParseError(
            f"line {line_num}: cannot parse {column}={value!r} as an integer",
            line_num,
        )


def _bool_cell(value: str, column: str, line_num: int) -> bool:
    if value == "0":
        return False
    if value == "1":
        return True
    raise RowParseError(
        f"line {line_num}: column {column} must be 0 or 1, got {value!r}",
        line_num,
    )


def parse_track_features(stream: IO[str]) -> dict[str, TrackMetadata]:
    """Read a track-feature CSV into a map keyed by track_id.

    The acoustic-vector dimension is inferred from the header and every
    track in the returned map shares it.
    """
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise SchemaError("track feature file is empty")
    fields = set(reader.fieldnames)
    for required in ("track_id", "duration", "release_year", *SCALAR_FEATURE_NAMES):
        if required not in fields:
            raise SchemaError(f"track feature file is missing column {required!r}")
    dim = _infer_acoustic_dim(reader.fieldnames)
    vector_cols = [f"acoustic_vector_{k}" for k in range(dim)]

    track_map: dict[str, TrackMetadata] = {}
    for record in reader:
        line = reader.line_num
        track_id = record["track_id"]
        if track_id in track_map:
            raise DuplicateTrackError(
                f"line {line}: duplicate track_id {track_id!r}"
            )
        duration = _float_cell(record["duration"], "duration", line)
        if duration <= 0:
            raise IntegrityError(f"line {line}: duration must be positive")
        year = _int_cell(record["release_year"], "release_year", line)
        scalars = np.array(
            [_float_cell(record[c], c, line) for c in SCALAR_FEATURE_NAMES],
            dtype=np.float64,
        )
        popularity = float(scalars[0])
        if not 0.0 <= popularity <= 100.0:
            raise IntegrityError(
                f"line {line}: popularity {popularity} outside [0, 100]"
            )
        vector = np.array(
            [_float_cell(record[c], c, line) for c in vector_cols],
            dtype=np.float64,
        )
        track_map[track_id] = TrackMetadata(
            track_id=track_id,
            duration_s=duration,
            release_year=year,
            popularity=popularity,
            scalars=scalars,
            acoustic_vector=vector,
        )
    return track_map


def _fmt(x: float) -> str:
    # repr of a Python float round-trips exactly and stays compact.
    return repr(float(x))


def write_track_csv(track_map: Mapping[str, TrackMetadata], stream: IO[str]) -> None:
    """Write tracks in map order using the canonical column layout."""
    dims = {meta.acoustic_vector.shape[0] for meta in track_map.values()}
    if len(dims) > 1:
        raise IntegrityError(f"mixed acoustic vector dimensions {sorted(dims)}")
    dim = dims.pop() if dims else DEFAULT_ACOUSTIC_DIM
    stream.write(",".join(_track_header_columns(dim)) + "\n")
    for meta in track_map.values():
        cells = [meta.track_id, _fmt(meta.duration_s), str(meta.release_year)]
        cells.extend(_fmt(v) for v in meta.scalars)
        cells.extend(_fmt(v) for v in meta.acoustic_vector)
        stream.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# Session-log CSV


def parse_session_log(
    stream: IO[str], track_map: Mapping[str, TrackMetadata]
) -> list[Session]:
    """Read a session log into validated Session objects.

    Rows must arrive grouped by session_id and ordered by position; every
    referenced track must exist in ``track_map``.
    """
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise SchemaError("session log is empty")
    fields = set(reader.fieldnames)
    for required in SESSION_LOG_COLUMNS:
        if required not in fields:
            raise SchemaError(f"session log is missing column {required!r}")

    sessions: list[Session] = []
    seen: set[str] = set()
    current_id: str | None = None
    current_rows: list[SessionRow] = []

    def finalize() -> None:
        if current_id is None:
            return
        session = Session(session_id=current_id, rows=tuple(current_rows))
        validate_session(session)
        sessions.append(session)

    for record in reader:
        line = reader.line_num
        sid = record["session_id"]
        if sid != current_id:
            finalize()
            if sid in seen:
                raise MalformedSessionError(
                    f"line {line}: session {sid!r} reappears after other "
                    "sessions; rows must be contiguous"
                )
            seen.add(sid)
            current_id = sid
            current_rows = []
        track_id = record["track_id"]
        if track_id not in track_map:
            raise UnknownTrackError(
                f"line {line}: unknown track_id {track_id!r}"
            )
        row = SessionRow(
            session_id=sid,
            position=_int_cell(record["session_position"], "session_position", line),
            session_length=_int_cell(record["session_length"], "session_length", line),
            track_id=track_id,
            skip_1=_bool_cell(record["skip_1"], "skip_1", line),
            skip_2=_bool_cell(record["skip_2"], "skip_2", line),
            skip_3=_bool_cell(record["skip_3"], "skip_3", line),
            premium=_bool_cell(record["premium"], "premium", line),
            shuffle=_bool_cell(record["shuffle"], "shuffle", line),
            hour=_int_cell(record["hour_of_day"], "hour_of_day", line),
            day=_int_cell(record["day"], "day", line),
            month=_int_cell(record["month"], "month", line),
        )
        current_rows.append(row)
    finalize()
    return sessions


def write_session_csv(sessions: Iterable[Session], stream: IO[str]) -> None:
    """Write sessions in order using the canonical session-log layout."""
    stream.write(",".join(SESSION_LOG_COLUMNS) + "\n")
    flag = lambda b: "1" if b else "0"  # noqa: E731
    for session in sessions:
        for row in session.rows:
            cells = (
                row.session_id,
                str(row.position),
                str(row.session_length),
                row.track_id,
                flag(row.skip_1),
                flag(row.skip_2),
                flag(row.skip_3),
                flag(row.premium),
                flag(row.shuffle),
                str(row.hour),
                str(row.day),
                str(row.month),
            )
            stream.write(",".join(cells) + "\n")


def lookup_track(
    track_map: Mapping[str, TrackMetadata], track_id: str
) -> TrackMetadata:
    try:
        return track_map[track_id]
    except KeyError:
        raise UnknownTrackError(f"unknown track_id {track_id!r}")
