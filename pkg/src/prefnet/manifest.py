"""Run manifests: a reproducibility record written next to every output.

The manifest captures the subcommand, seed, a digest of the effective
configuration, digests of every input file, and the output file names.
Paths are recorded as basenames so that reruns into different directories
produce byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Mapping

from . import __version__

MANIFEST_NAME = "manifest.json"


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def config_digest(config: Mapping) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()


def write_manifest(out_dir: str | Path, *, subcommand: str, config: Mapping,
                   seed: int | None, inputs: Iterable[str | Path],
                   outputs: Iterable[str | Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "prefnet",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "config_digest": config_digest(config),
        "inputs": {Path(p).name: file_digest(p) for p in sorted(inputs, key=lambda p: Path(p).name)},
        "outputs": sorted(Path(p).name for p in outputs),
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
