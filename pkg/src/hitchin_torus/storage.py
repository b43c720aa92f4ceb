"""Binary persistence for solutions.

Container layout (version 1, little-endian, row-major float64/complex128):

    magic   8 bytes  b"HTSOLv01"
    n       uint32   grid resolution
    kmu     int32    band of mu (-1 if unknown)
    knu     int32    band of nu (-1 if unknown)
    steps   uint32   Newton steps taken
    res     float64  residual sup-norm
    tol     float64  tolerance the residual was verified against
    hash    32 bytes sha256 of the (mu, nu) sample bytes (provenance)
    psi1    n*n float64
    psi2    n*n float64
    mu      n*n complex128
    nu      n*n complex128

Round-trips are bitwise: save(load(path)) reproduces the file.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .fields import ComplexField, GridSpec
from .higgs import HiggsData
from .solver import SolutionPair

MAGIC = b"HTSOLv01"


def provenance_hash(data: HiggsData) -> bytes:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(data.mu.values.astype("<c16")).tobytes())
    h.update(np.ascontiguousarray(data.nu.values.astype("<c16")).tobytes())
    return h.digest()


def save_solution(sol: SolutionPair, path) -> None:
    n = sol.grid.n
    kmu = sol.data.mu.max_mode
    knu = sol.data.nu.max_mode
    header = MAGIC + struct.pack(
        "<IiiIdd",
        n,
        -1 if kmu is None else kmu,
        -1 if knu is None else knu,
        sol.newton_steps,
        sol.residual_norm,
        sol.tolerance,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(provenance_hash(sol.data))
        fh.write(np.ascontiguousarray(sol.psi1.astype("<f8")).tobytes())
        fh.write(np.ascontiguousarray(sol.psi2.astype("<f8")).tobytes())
        fh.write(np.ascontiguousarray(sol.data.mu.values.astype("<c16")).tobytes())
        fh.write(np.ascontiguousarray(sol.data.nu.values.astype("<c16")).tobytes())


def load_solution(path) -> SolutionPair:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise ValueError(f"{path}: not a solution container (bad magic)")
    n, kmu, knu, steps, res, tol = struct.unpack_from("<IiiIdd", blob, 8)
    off = 8 + struct.calcsize("<IiiIdd")
    stored_hash = blob[off : off + 32]
    off += 32
    cnt = n * n

    def take(dtype, count):
        nonlocal off
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=off)
        off += arr.nbytes
        return arr.reshape(n, n).copy()

    psi1 = take("<f8", cnt)
    psi2 = take("<f8", cnt)
    mu = take("<c16", cnt)
    nu = take("<c16", cnt)
    grid = GridSpec(n)
    data = HiggsData(
        ComplexField(mu, grid, max_mode=None if kmu < 0 else kmu),
        ComplexField(nu, grid, max_mode=None if knu < 0 else knu),
        grid,
    )
    if provenance_hash(data) != stored_hash:
        raise ValueError(f"{path}: provenance hash mismatch (corrupt container)")
    return SolutionPair(psi1, psi2, data, res, tol, steps)
