"""Binary container for DMRG checkpoints and density-operator fixtures.

Layout (all integers little-endian)::

    magic      8 bytes   b"BLKNEG\\x00\\x00"
    version    u16       currently 1
    reserved   u16       0
    meta_len   u32       length of the JSON metadata that follows
    meta       bytes     UTF-8 JSON object; "kind" says what is stored
    n_arrays   u32
    n_arrays times:
        name_len  u16, name  UTF-8
        dtype     u8         1 = float64, 2 = int64
        ndim      u8
        shape     ndim x u64
        data      prod(shape) elements, little-endian, C order

Kinds are ``"dmrg"`` (a full :class:`GroundStateResult`, all block transforms
included) and ``"density_operator"``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .dmrg import BlockBasis, Chains, DmrgConfig, GroundStateResult, SuperblockState
from .entanglement import DensityOperator
from .model import ModelParams, Sector

MAGIC = b"BLKNEG\x00\x00"
VERSION = 1
_DTYPES = {1: np.dtype("<f8"), 2: np.dtype("<i8")}
_CODES = {"f": 1, "i": 2, "u": 2, "b": 2}


class CheckpointError(IOError):
    pass


def _write_array(fh: BinaryIO, name: str, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    code = _CODES.get(arr.dtype.kind)
    if code is None:
        raise CheckpointError(f"cannot store array {name!r} of dtype {arr.dtype}")
    raw = name.encode()
    fh.write(struct.pack("<H", len(raw)) + raw)
    fh.write(struct.pack("<BB", code, arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    fh.write(np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes())


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError("truncated container")
    return data


def _read_array(fh: BinaryIO) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<H", _read_exact(fh, 2))
    name = _read_exact(fh, name_len).decode()
    code, ndim = struct.unpack("<BB", _read_exact(fh, 2))
    if code not in _DTYPES:
        raise CheckpointError(f"unknown dtype code {code}")
    shape = struct.unpack(f"<{ndim}Q", _read_exact(fh, 8 * ndim))
    dtype = _DTYPES[code]
    count = int(np.prod(shape, dtype=np.int64))
    data = np.frombuffer(_read_exact(fh, count * dtype.itemsize), dtype=dtype)
    return name, data.reshape(shape).astype(dtype.newbyteorder("="))


def write_container(path, meta: dict, arrays: dict) -> None:
    blob = json.dumps(meta, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<HHI", VERSION, 0, len(blob)) + blob)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            _write_array(fh, name, arr)


def read_container(path) -> tuple[dict, dict]:
    with open(path, "rb") as fh:
        if _read_exact(fh, 8) != MAGIC:
            raise CheckpointError(f"{path} is not a checkpoint container")
        version, _, meta_len = struct.unpack("<HHI", _read_exact(fh, 8))
        if version != VERSION:
            raise CheckpointError(f"unsupported container version {version}")
        meta = json.loads(_read_exact(fh, meta_len).decode())
        (n_arrays,) = struct.unpack("<I", _read_exact(fh, 4))
        arrays = dict(_read_array(fh) for _ in range(n_arrays))
    return meta, arrays


def _block_arrays(prefix: str, block: BlockBasis, arrays: dict) -> None:
    arrays[f"{prefix}/transform"] = block.transform
    arrays[f"{prefix}/hamiltonian"] = block.block_hamiltonian
    arrays[f"{prefix}/charges"] = block.charges
    for j, op in enumerate(block.edge_operators):
        arrays[f"{prefix}/edge/{j}"] = op


def _load_block(prefix: str, side: str, block_len: int, n_edge: int, arrays: dict) -> BlockBasis:
    block = BlockBasis(
        block_len=block_len,
        side=side,
        transform=arrays[f"{prefix}/transform"],
        block_hamiltonian=arrays[f"{prefix}/hamiltonian"],
        edge_operators=[arrays[f"{prefix}/edge/{j}"] for j in range(n_edge)],
        charges=arrays[f"{prefix}/charges"],
    )
    block.check_isometry(1e-10)
    return block


def _sector_meta(sector):
    return None if sector is None else [sector.modulus, sector.target]


def _sector_from(meta):
    return None if meta is None else Sector(*meta)


def save_ground_state(result: GroundStateResult, path) -> None:
    p, c, s = result.params, result.config, result.state
    meta = {
        "kind": "dmrg",
        "params": {"n_sites": p.n_sites, "gamma": p.gamma, "lambda": p.lam},
        "config": {
            "max_kept_states": c.max_kept_states,
            "n_sweeps": c.n_sweeps,
            "eigensolver_tol": c.eigensolver_tol,
            "target_epsilon": c.target_epsilon,
            "sector": _sector_meta(c.sector),
        },
        "state": {
            "bond": s.bond,
            "energy": s.energy,
            "truncated_weight": s.truncated_weight,
            "sector": _sector_meta(s.sector),
        },
        "converged": result.converged,
        "sweep_energies": result.sweep_energies,
        "truncations": [list(t) for t in result.truncations],
        "n_left": len(result.chains.left),
        "n_right": len(result.chains.right),
        "n_edge": len(result.chains.left[0].edge_operators),
    }
    arrays = {"psi": s.psi, "schmidt": s.schmidt_spectrum}
    for side, chain in (("left", result.chains.left), ("right", result.chains.right)):
        for k, block in enumerate(chain):
            _block_arrays(f"{side}/{k}", block, arrays)
    write_container(path, meta, arrays)


def load_ground_state(path) -> GroundStateResult:
    meta, arrays = read_container(path)
    if meta.get("kind") != "dmrg":
        raise CheckpointError(f"{path} holds {meta.get('kind')!r}, not a DMRG checkpoint")
    pm = meta["params"]
    params = ModelParams(pm["n_sites"], pm["gamma"], pm["lambda"])
    cm = dict(meta["config"])
    cm["sector"] = _sector_from(cm["sector"])
    config = DmrgConfig(**cm)
    n_edge = meta["n_edge"]
    chains = Chains(
        [_load_block(f"left/{k}", "left", k + 1, n_edge, arrays) for k in range(meta["n_left"])],
        [_load_block(f"right/{k}", "right", k + 1, n_edge, arrays) for k in range(meta["n_right"])],
    )
    sm = meta["state"]
    centre = params.n_sites // 2 - 1
    state = SuperblockState(
        psi=arrays["psi"],
        bond=sm["bond"],
        energy=sm["energy"],
        truncated_weight=sm["truncated_weight"],
        schmidt_spectrum=arrays["schmidt"],
        left=chains.left[centre - 1],
        right=chains.right[centre - 1],
        sector=_sector_from(sm["sector"]),
    )
    truncations = [tuple(t) for t in meta["truncations"]]
    return GroundStateResult(
        params, config, state, chains, meta["sweep_energies"], meta["converged"], truncations
    )


def save_density_operator(rho: DensityOperator, path) -> None:
    meta = {
        "kind": "density_operator",
        "d_s": rho.d_s,
        "d_e": rho.d_e,
        "block_len": rho.block_len,
        "separation": rho.separation,
        "basis_tag": rho.basis_tag,
        "modulus": rho.modulus,
    }
    arrays = {"matrix": rho.matrix}
    if rho.charges_s is not None:
        arrays["charges_s"] = rho.charges_s
        arrays["charges_e"] = rho.charges_e
    write_container(path, meta, arrays)


def load_density_operator(path) -> DensityOperator:
    meta, arrays = read_container(path)
    if meta.get("kind") != "density_operator":
        raise CheckpointError(f"{path} does not hold a density operator")
    return DensityOperator(
        arrays["matrix"],
        meta["d_s"],
        meta["d_e"],
        block_len=meta["block_len"],
        separation=meta["separation"],
        basis_tag=meta["basis_tag"],
        charges_s=arrays.get("charges_s"),
        charges_e=arrays.get("charges_e"),
        modulus=meta["modulus"],
    )


def is_container(path) -> bool:
    try:
        with open(Path(path), "rb") as fh:
            return fh.read(8) == MAGIC
    except OSError:
        return False
