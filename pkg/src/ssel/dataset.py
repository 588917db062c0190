"""Input matrices: loading, validation, standardization and centering.

All matrices are held in features x samples orientation (``d x N``), so a
column is one sample and a row is one feature.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

MAGIC = b"SSEL1"

FORMATS = ("csv", "tsv", "dense-binary")
ORIENTATIONS = ("features-rows", "samples-rows")
STANDARDIZE_MODES = ("none", "zscore", "minmax")


class FormatError(ValueError):
    """A data file could not be parsed as a numeric matrix."""


class ValidationError(ValueError):
    """A matrix violates the DataMatrix invariants."""


@dataclass(frozen=True)
class StandardizationSpec:
    """How features were (or should be) rescaled.

    ``per_feature_stats`` holds one ``(offset, scale)`` pair per feature;
    the standardized value is ``(x - offset) / scale``.
    """

    mode: str = "zscore"
    per_feature_stats: Optional[tuple] = None

    def __post_init__(self):
        mode = {"zscore-per-feature": "zscore", "minmax-per-feature": "minmax"}.get(
            self.mode, self.mode
        )
        object.__setattr__(self, "mode", mode)
        if mode not in STANDARDIZE_MODES:
            raise ValueError(f"unknown standardization mode {self.mode!r}")
        if self.per_feature_stats is not None and mode != "none":
            if any(scale <= 0 for _, scale in self.per_feature_stats):
                raise ValueError("standardization scales must be strictly positive")


@dataclass(frozen=True)
class DataMatrix:
    """Feature matrix ``X`` of shape ``(d, N)``."""

    values: np.ndarray
    feature_names: Optional[tuple] = None
    standardization: Optional[StandardizationSpec] = field(default=None, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError(f"expected a 2-D matrix, got {values.ndim}-D")
        d, n = values.shape
        if d < 1 or n < 2:
            raise ValidationError(f"need d >= 1 features and N >= 2 samples, got {d}x{n}")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            i, j = bad[0]
            raise ValidationError(
                f"non-finite entry {values[i, j]!r} at feature {i}, sample {j}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != d:
                raise ValidationError(f"{len(names)} feature names for {d} features")
            object.__setattr__(self, "feature_names", names)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def subset(self, rows: Sequence[int]) -> "DataMatrix":
        """Restrict to the given feature rows."""
        rows = list(rows)
        names = None
        if self.feature_names is not None:
            names = tuple(self.feature_names[i] for i in rows)
        return DataMatrix(self.values[rows], names)


def _as_values(X) -> np.ndarray:
    return X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_delimited(path: Path, delimiter: str):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(t.strip() for t in r)]
    if not rows:
        raise FormatError(f"{path}: file is empty")
    header = None
    if not all(_is_number(t) for t in rows[0]):
        header, rows = [t.strip() for t in rows[0]], rows[1:]
    if not rows:
        raise FormatError(f"{path}: no numeric rows after header")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    line0 = 2 if header is not None else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(
                f"{path}: row {i + line0} has {len(row)} columns, expected {width}"
            )
        for j, tok in enumerate(row):
            try:
                data[i, j] = float(tok)
            except ValueError:
                raise FormatError(
                    f"{path}: cannot parse {tok!r} at row {i + line0}, column {j + 1}"
                ) from None
    return data, header


def _read_binary(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    head = len(MAGIC) + 16
    if raw[: len(MAGIC)] != MAGIC or len(raw) < head:
        raise FormatError(f"{path}: missing SSEL1 header")
    d, n = struct.unpack("<QQ", raw[len(MAGIC):head])
    if len(raw) - head != 8 * d * n:
        raise FormatError(
            f"{path}: payload has {len(raw) - head} bytes, expected {8 * d * n} for {d}x{n}"
        )
    return np.frombuffer(raw, dtype="<f8", offset=head).reshape(d, n).astype(np.float64)


def load_matrix(path, format: str = "csv", orientation: str = "features-rows") -> DataMatrix:
    """Read a numeric matrix from disk.

    Parameters
    ----------
    path : path-like
    format : {"csv", "tsv", "dense-binary"}
    orientation : {"features-rows", "samples-rows"}
        Layout of the file. ``samples-rows`` files are transposed so the
        returned matrix is always features x samples. A CSV/TSV header row
        is used as feature names when the file is ``samples-rows``.

    Raises
    ------
    FormatError
        The file does not parse; the message names the offending cell.
    ValidationError
        A parsed value is NaN or infinite.
    """
    path = Path(path)
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    if orientation not in ORIENTATIONS:
        raise ValueError(f"unknown orientation {orientation!r}; expected one of {ORIENTATIONS}")
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")

    header = None
    if format == "dense-binary":
        data = _read_binary(path)
    else:
        data, header = _read_delimited(path, "," if format == "csv" else "\t")

    names = None
    if orientation == "samples-rows":
        data = data.T
        if header is not None and len(header) == data.shape[0]:
            names = header
    return DataMatrix(data, names)


def save_matrix(X, path, format: str = "dense-binary") -> None:
    """Write ``X`` in features x samples orientation."""
    values = _as_values(X)
    path = Path(path)
    if format == "dense-binary":
        d, n = values.shape
        payload = np.ascontiguousarray(values, dtype="<f8").tobytes()
        path.write_bytes(MAGIC + struct.pack("<QQ", d, n) + payload)
    elif format in ("csv", "tsv"):
        np.savetxt(path, values, delimiter="," if format == "csv" else "\t", fmt="%.17g")
    else:
        raise ValueError(f"unknown format {format!r}")


def standardize(X: DataMatrix, spec: StandardizationSpec = StandardizationSpec()) -> DataMatrix:
    """Rescale each feature row.

    ``zscore`` uses the population standard deviation; ``minmax`` maps each
    feature onto ``[0, 1]``. Constant features become all-zero rows in both
    modes. If ``spec`` already carries statistics they are applied as-is,
    otherwise they are estimated from ``X``. The statistics used are
    recorded on the returned matrix's ``standardization`` attribute.
    Plain arrays are wrapped in a ``DataMatrix`` first.
    """
    if not isinstance(X, DataMatrix):
        X = DataMatrix(X)
    values = X.values
    if spec.mode == "none":
        return replace(X, standardization=spec)

    if spec.per_feature_stats is not None:
        stats = np.asarray(spec.per_feature_stats, dtype=np.float64)
        offset, scale = stats[:, 0], stats[:, 1]
        constant = np.zeros(X.d, dtype=bool)
    else:
        if spec.mode == "zscore":
            offset = values.mean(axis=1)
            scale = values.std(axis=1)
        else:
            offset = values.min(axis=1)
            scale = values.max(axis=1) - offset
        constant = scale <= 0
        scale = np.where(constant, 1.0, scale)

    out = (values - offset[:, None]) / scale[:, None]
    out[constant] = 0.0
    recorded = StandardizationSpec(
        spec.mode, tuple((float(o), float(s)) for o, s in zip(offset, scale))
    )
    return DataMatrix(out, X.feature_names, recorded)


def apply_centering(M) -> np.ndarray:
    """Return ``M @ H`` with ``H = I - 11^T / n``, i.e. subtract row means.

    ``H`` is never formed.
    """
    M = _as_values(M)
    if M.ndim == 1:
        return M - M.mean()
    return M - M.mean(axis=1, keepdims=True)
