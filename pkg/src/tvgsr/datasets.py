"""Load spatio-temporal datasets from local CSV files.

Signal CSV: ``n`` rows of ``m`` comma-separated numbers, with an optional
``t1,...,tm`` header.  Empty cells and ``NaN`` are gaps.  Coordinates CSV:
``id,x,y`` or ``id,lon,lat`` with a header.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tvgsr.graph import read_coords_csv, write_coords_csv
from tvgsr.models import ObservationSet
from tvgsr.synth import add_noise

NAN_POLICIES = ("mask", "reject")


@dataclass(frozen=True)
class DatasetBundle:
    coords: np.ndarray
    signal: np.ndarray
    name: str = "dataset"
    units: str = ""
    ids: tuple = field(default=())

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        signal = np.asarray(self.signal, dtype=float)
        if signal.ndim != 2:
            raise ValueError("signal must be a matrix")
        if coords.shape[0] != signal.shape[0]:
            raise ValueError(f"dimension mismatch: {coords.shape[0]} coordinate rows "
                             f"vs {signal.shape[0]} signal rows")
        coords.setflags(write=False)
        signal.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "signal", signal)
        if not self.ids:
            object.__setattr__(self, "ids", tuple(str(i) for i in range(signal.shape[0])))

    @property
    def shape(self):
        return self.signal.shape

    @property
    def valid(self):
        """Entries with a finite ground-truth value."""
        return np.isfinite(self.signal)


def _parse_cell(text, where):
    text = text.strip()
    if text == "" or text.lower() == "nan":
        return np.nan
    try:
        return float(text)
    except ValueError as exc:
        raise ValueError(f"{where}: unparsable value {text!r}") from exc


def read_signal_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty signal file")
    first = rows[0]
    if all(c.strip().lower().startswith("t") and c.strip()[1:].isdigit() for c in first):
        rows = rows[1:]
    width = len(rows[0]) if rows else 0
    data = []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ValueError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        data.append([_parse_cell(c, f"{path}: row {lineno}") for c in row])
    return np.array(data, dtype=float)


def write_signal_csv(path, signal, header=True):
    signal = np.asarray(signal, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"t{j + 1}" for j in range(signal.shape[1])])
        for row in signal:
            w.writerow(["nan" if not np.isfinite(v) else f"{v:.17g}" for v in row])


def load_bundle(signal_path, coords_path, name=None, units="", nan_policy="mask"):
    """Read a signal/coordinates pair into a validated :class:`DatasetBundle`.

    With ``nan_policy="reject"`` any gap raises; with ``"mask"`` gaps are kept
    as NaN and later excluded from sampling and scoring.
    """
    if nan_policy not in NAN_POLICIES:
        raise ValueError(f"unknown nan_policy {nan_policy!r}")
    signal = read_signal_csv(signal_path)
    ids, coords = read_coords_csv(coords_path)
    if nan_policy == "reject" and not np.all(np.isfinite(signal)):
        raise ValueError(f"{signal_path}: contains non-finite entries")
    if np.any(np.isinf(signal)):
        raise ValueError(f"{signal_path}: infinite entries are not allowed")
    return DatasetBundle(coords=coords, signal=signal, name=name or Path(signal_path).stem,
                         units=units, ids=tuple(ids))


def save_bundle(bundle, signal_path, coords_path):
    write_signal_csv(signal_path, bundle.signal)
    write_coords_csv(coords_path, bundle.coords, ids=list(bundle.ids))


def make_observation(bundle, mask, noise="none", seed=0):
    """``Y = mask o (signal + noise)``; gaps in the signal are never observed."""
    mask = np.asarray(mask, dtype=float)
    if mask.shape != bundle.shape:
        raise ValueError(f"mask shape {mask.shape} does not match signal {bundle.shape}")
    valid = bundle.valid
    J = mask * valid
    truth = np.where(valid, bundle.signal, 0.0)
    Y = J * add_noise(truth, noise, seed)
    return ObservationSet(Y=Y, J=J, ground_truth=truth, valid=valid)
