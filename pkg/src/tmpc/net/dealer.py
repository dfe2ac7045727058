"""Test-mode trusted dealer: split a fixed-point program and its input into per-party bundles.

Stands in for the model owner and the client each sharing their private
input.  P0 and P1 each get one additive share of every weight and of the
input; P2 gets its keys and the weight-free program structure only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import ring
from ..ir.container import load_model, load_tensor, save_model, save_tensor, serialize
from ..ir.graph import LLILProgram
from ..porthos.sharing import share
from .party import DEFAULT_TIMEOUT, PartyConfig, derive_keys, pair_of

PROGRAM_FILE = "program.llil"
CONFIG_FILE = "config.json"
INPUT_FILE = "input.tmpt"


def _share_file(node_id: str) -> str:
    return f"w_{node_id}.tmpt"


@dataclass
class PartyBundle:
    party: int
    shares: dict[str, np.ndarray]  # node id -> uint64 share; empty for P2


def deal_shares(program: LLILProgram, x, seed: int) -> list[PartyBundle]:
    """Share the program's weights and the (already quantized) input ``x``.

    Deterministic under ``seed``.
    """
    rng = np.random.default_rng(seed)
    x = ring.ring(np.asarray(x))
    if x.shape != tuple(program.input_shape):
        raise ValueError(f"input shape {x.shape} != program input {program.input_shape}")
    s0: dict[str, np.ndarray] = {}
    s1: dict[str, np.ndarray] = {}
    for n in program.nodes:
        if n.op == "Input":
            v = x
        elif n.op == "Const":
            v = ring.ring(np.asarray(program.weights[n.id]))
        else:
            continue
        s0[n.id], s1[n.id] = share(v, rng)
    return [PartyBundle(0, s0), PartyBundle(1, s1), PartyBundle(2, {})]


def write_bundles(program: LLILProgram, bundles: list[PartyBundle], out_dir, *, seed: int,
                  base_port: int = 47000, host: str = "127.0.0.1", recipients=(0,),
                  reshaped_conv: bool = True, prf_opt: bool = True,
                  timeout: float = DEFAULT_TIMEOUT) -> list[Path]:
    """Write ``out_dir/p{i}/`` with config.json, the program structure and share files."""
    out_dir = Path(out_dir)
    keys = derive_keys(seed)
    addrs = {i: (host, base_port + i) for i in range(3)}
    structure = serialize(program, include_weights=False)
    dirs = []
    for b in bundles:
        d = out_dir / f"p{b.party}"
        d.mkdir(parents=True, exist_ok=True)
        (d / PROGRAM_FILE).write_bytes(structure)
        manifest = {}
        for node_id, sh in b.shares.items():
            name = INPUT_FILE if node_id == program.input_id else _share_file(node_id)
            save_tensor(d / name, sh.view(np.int64))
            manifest[node_id] = name
        (d / "shares.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        cfg = PartyConfig(
            party=b.party,
            listen=addrs[b.party],
            peers={j: addrs[j] for j in range(3) if j != b.party},
            keys={pair_of(b.party, j): keys[pair_of(b.party, j)] for j in range(3) if j != b.party},
            output_recipients=tuple(recipients),
            reshaped_conv=reshaped_conv,
            prf_opt=prf_opt,
            timeout=timeout,
            share_dir=".",
        )
        cfg.save(d / CONFIG_FILE)
        dirs.append(d)
    return dirs


def load_bundle(share_dir, accessed: list[str] | None = None):
    """Read a party's program structure and shares; records every file opened in ``accessed``."""
    d = Path(share_dir)

    def note(p: Path) -> Path:
        if accessed is not None:
            accessed.append(str(p))
        return p

    program = load_model(note(d / PROGRAM_FILE))
    manifest = json.loads(note(d / "shares.json").read_text())
    shares = {nid: load_tensor(note(d / name)).view(np.uint64) for nid, name in manifest.items()}
    return program, shares
