"""Regenerate the reference tables shipped in ``src/matchillum/data``.

Not needed at runtime. Requires ``colour-science`` and an unpacked ``luxpy``
wheel (for the reflectance databases)::

    pip download luxpy --no-deps -d /tmp/dl
    python -m zipfile -e /tmp/dl/luxpy-*.whl /tmp/lx
    python scripts/build_reference_data.py --luxpy-data /tmp/lx/luxpy/data

Sources
-------
colour-science: CIE 1931 2 degree CMFs, CIE D65 and A, BabelColor average
ColorChecker reflectances, Nikon D5100 sensitivities (NPL measurement).
luxpy: Munsell 1269 matte chips (Univ. of Eastern Finland), Opstelten 1983
natural objects, IES TM-30-15 4880 reflectances.
"""
from __future__ import annotations

import argparse
import re
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "matchillum" / "data"
GRID = np.arange(400, 701, 10)
N_SFU = 1995


def _write(path: Path, wl, names, columns, fmt="%.6g") -> None:
    columns = np.asarray(columns, dtype=float)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["wavelength_nm", *names]) + "\n")
        for i, w in enumerate(wl):
            row = [f"{w:g}"] + [fmt % v for v in columns[i]]
            fh.write(",".join(row) + "\n")


def _on(sd, wl):
    # source tables carry ~1e-19 negatives and interpolation noise in the 8th digit
    v = np.array([sd[w] for w in wl], dtype=float)
    return np.clip(np.array([float(f"{x:.6g}") for x in v.ravel()]).reshape(v.shape), 0.0, None)


def build_colour_tables() -> np.ndarray:
    import colour

    wl5 = np.arange(380, 781, 5)
    cmf = colour.MSDS_CMFS["CIE 1931 2 Degree Standard Observer"]
    _write(OUT / "cie1931_2deg.csv", wl5, ["x_bar", "y_bar", "z_bar"], _on(cmf, wl5))

    ill = [colour.SDS_ILLUMINANTS[k] for k in ("D65", "A")]
    _write(OUT / "illuminants.csv", wl5, ["D65", "A"],
           np.column_stack([_on(s, wl5) for s in ill]))

    cam = colour.MSDS_CAMERA_SENSITIVITIES["Nikon 5100 (NPL)"]
    _write(OUT / "nikon_d5100.csv", wl5, ["R", "G", "B"], _on(cam, wl5))

    cc = colour.SDS_COLOURCHECKERS["BabelColor Average"]
    wl10 = np.arange(380, 731, 10)
    names = [re.sub(r"[^0-9a-zA-Z]+", "_", n).strip("_").lower() for n in cc]
    refl = np.column_stack([_on(cc[n], wl10) for n in cc])
    _write(OUT / "macbeth_babelcolor.csv", wl10, names, refl)
    return refl[(wl10 >= 400) & (wl10 <= 700)]


def build_reflectance_set(luxpy_data: Path, macbeth: np.ndarray) -> None:
    """SFU1995-style composite: same size, drawn from public measured sets."""
    rfl = luxpy_data / "rfls"
    mun = np.loadtxt(rfl / "Munsell1269.dat", delimiter=",")
    mun = mun[np.isin(mun[:, 0], GRID), 1:]
    nat = np.loadtxt(rfl / "Opstelten1983_215.dat", delimiter=",")
    nat = nat[np.isin(nat[:, 0], GRID), 1:]
    ies = np.load(rfl / "IESTM30_15_R4880.npz")["_IESTM30_R4880"]
    ies = ies[1:, np.isin(ies[0], GRID)].T

    # drop IES entries that duplicate a Munsell chip or each other
    pool = np.hstack([mun, nat])
    keep = []
    for j in range(ies.shape[1]):
        s = ies[:, j]
        if s.max() <= 0:
            continue
        d = np.sqrt(((pool - s[:, None]) ** 2).mean(axis=0)).min()
        if d > 5e-3:
            keep.append(j)
    ies = ies[:, keep]
    n_extra = N_SFU - mun.shape[1] - nat.shape[1] - macbeth.shape[1]
    pick = np.linspace(0, ies.shape[1] - 1, n_extra).round().astype(int)
    parts = [
        ("munsell", mun),
        ("macbeth", macbeth),
        ("natural", nat),
        ("ies", ies[:, pick]),
    ]
    names, cols = [], []
    for tag, block in parts:
        names += [f"{tag}_{i:04d}" for i in range(block.shape[1])]
        cols.append(block)
    data = np.clip(np.hstack(cols), 0.0, None)
    assert data.shape == (GRID.size, N_SFU), data.shape
    _write(OUT / "sfu1995_standin.csv", GRID, names, data, "%.5g")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--luxpy-data", type=Path, required=True)
    args = ap.parse_args()
    OUT.mkdir(parents=True, exist_ok=True)
    macbeth = build_colour_tables()
    build_reflectance_set(args.luxpy_data, macbeth)


if __name__ == "__main__":
    main()
