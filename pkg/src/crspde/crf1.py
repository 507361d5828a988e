"""CRF1 binary field container.

Layout: magic "CRF1", little-endian u32 grid size n, u32 component count,
then for each component the n*n complex samples in row-major order as
interleaved little-endian f64 pairs (re, im).  The container does not record
whether the numbers are physical samples or spectral coefficients; writers
note that in an accompanying JSON sidecar.
"""

from __future__ import annotations

import struct

import numpy as np

from .spectral import ScalarField, VectorField3, make_grid

MAGIC = b"CRF1"
_HEADER = struct.Struct("<4sII")


def write_crf1(path, components) -> None:
    """Write a list of (n, n) complex arrays."""
    comps = [np.ascontiguousarray(c, dtype=complex) for c in components]
    if not comps:
        raise ValueError("need at least one component")
    n = comps[0].shape[0]
    for c in comps:
        if c.shape != (n, n):
            raise ValueError(f"component shape {c.shape} != ({n}, {n})")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, len(comps)))
        for c in comps:
            inter = np.empty((n, n, 2), dtype="<f8")
            inter[..., 0] = c.real
            inter[..., 1] = c.imag
            fh.write(inter.tobytes())


def read_crf1(path):
    """Read back (n, [arrays]); inverse of write_crf1 bit-for-bit."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError("truncated CRF1 header")
        magic, n, ncomp = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        comps = []
        for _ in range(ncomp):
            raw = fh.read(n * n * 16)
            if len(raw) != n * n * 16:
                raise ValueError("truncated CRF1 payload")
            inter = np.frombuffer(raw, dtype="<f8").reshape(n, n, 2)
            comps.append(inter[..., 0] + 1j * inter[..., 1])
    return n, comps


def write_vector_field(path, vf: VectorField3, rep: str = "physical") -> None:
    if rep == "physical":
        write_crf1(path, [c.values for c in vf])
    elif rep == "spectral":
        write_crf1(path, [c.coeffs for c in vf])
    else:
        raise ValueError(f"bad representation {rep!r}")


def read_vector_field(path, rep: str = "physical") -> VectorField3:
    n, comps = read_crf1(path)
    if len(comps) != 3:
        raise ValueError(f"expected 3 components, found {len(comps)}")
    grid = make_grid(n)
    if rep == "physical":
        return VectorField3([ScalarField.from_values(grid, c) for c in comps])
    return VectorField3([ScalarField.from_coeffs(grid, c) for c in comps])
