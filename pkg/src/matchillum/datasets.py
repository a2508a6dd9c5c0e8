"""Reference tables shipped with the package.

All loaders resample onto the 400-700/10 nm grid. See ``data/README.md`` for
provenance; ``scripts/build_reference_data.py`` regenerates the files.
"""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

import numpy as np

from .colorimetry import CmfSet
from .errors import FormatError
from .spectral import SensorSet, load_spectral_csv

ILLUMINANTS = ("D65", "A")


def data_path(name: str):
    return resources.files("matchillum") / "data" / name


@lru_cache(maxsize=None)
def _table(name: str):
    with resources.as_file(data_path(name)) as p:
        names, m = load_spectral_csv(p)
    m.setflags(write=False)
    return tuple(names), m


def cie1931() -> CmfSet:
    return CmfSet(_table("cie1931_2deg.csv")[1])


def illuminant(name: str) -> np.ndarray:
    names, m = _table("illuminants.csv")
    key = name.upper()
    if key not in names:
        raise FormatError(f"unknown illuminant {name!r}; built-in: {', '.join(names)}")
    return m[:, names.index(key)].copy()


def nikon_d5100() -> SensorSet:
    return SensorSet(_table("nikon_d5100.csv")[1], ("R", "G", "B"))


def macbeth() -> tuple[tuple[str, ...], np.ndarray]:
    """24 ColorChecker patch names and their 31x24 reflectances."""
    names, m = _table("macbeth_babelcolor.csv")
    return names, m.copy()


def sfu1995_standin() -> tuple[tuple[str, ...], np.ndarray]:
    """1995 measured reflectances standing in for the SFU composite set."""
    names, m = _table("sfu1995_standin.csv")
    return names, m.copy()


__all__ = [
    "ILLUMINANTS",
    "cie1931",
    "data_path",
    "illuminant",
    "macbeth",
    "nikon_d5100",
    "sfu1995_standin",
]
