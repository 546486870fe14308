"""Run manifests.

Every CLI invocation writes a manifest recording the exact argument
vector, the seed, digests of every input consumed and output produced,
and wall-clock timestamps. Because all randomness is seed-derived and
all file formats are deterministic, re-invoking the recorded argv must
reproduce every output byte for byte; ``replay_manifest`` does exactly
that and reports the comparison.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    package_version: str
    seed: int | None
    config_hash: str | None
    input_digests: dict[str, str]
    outputs: dict[str, str]
    notes: list[str]
    started_utc: str
    finished_utc: str


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class ManifestBuilder:
    """Collects inputs/outputs during a command run, digests them at the end."""

    command: str
    argv: list[str]
    package_version: str
    seed: int | None = None
    config_path: str | None = None
    _inputs: list[str] = field(default_factory=list)
    _outputs: list[str] = field(default_factory=list)
    _notes: list[str] = field(default_factory=list)
    _started: str = field(default_factory=lambda: _utcnow())

    def add_input(self, path) -> None:
        p = str(path)
        if p not in self._inputs:
            self._inputs.append(p)

    def add_output(self, path) -> None:
        p = str(path)
        if p not in self._outputs:
            self._outputs.append(p)

    def note(self, text: str) -> None:
        self._notes.append(text)

    @property
    def outputs(self) -> tuple[str, ...]:
        return tuple(self._outputs)

    def finish(self, out_dir) -> Path:
        manifest = RunManifest(
            command=self.command,
            argv=list(self.argv),
            package_version=self.package_version,
            seed=self.seed,
            config_hash=file_sha256(self.config_path) if self.config_path else None,
            input_digests={p: file_sha256(p) for p in self._inputs},
            outputs={p: file_sha256(p) for p in self._outputs},
            notes=list(self._notes),
            started_utc=self._started,
            finished_utc=_utcnow(),
        )
        path = Path(out_dir) / f"manifest_{self.command}.json"
        path.write_text(
            json.dumps(dataclasses.asdict(manifest), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        return path


def _utcnow() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def load_manifest(path) -> RunManifest:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: manifest not found")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    expected = {f.name for f in dataclasses.fields(RunManifest)}
    if set(raw) != expected:
        raise ValidationError(
            f"{path}: manifest keys {sorted(raw)} do not match the schema"
        )
    return RunManifest(**raw)


def replay_manifest(path) -> dict:
    """Re-run the recorded command and compare output digests.

    Returns {"exit_code", "match", "outputs": {path: (recorded, recomputed)}}.
    The recomputed digest is None for outputs the replay did not produce.
    """
    manifest = load_manifest(path)
    from .cli import main  # deferred: cli imports this module

    exit_code = main(list(manifest.argv))
    outputs = {}
    all_match = exit_code == 0
    for out_path, recorded in manifest.outputs.items():
        recomputed = file_sha256(out_path) if Path(out_path).exists() else None
        outputs[out_path] = (recorded, recomputed)
        all_match = all_match and recomputed == recorded
    return {"exit_code": exit_code, "match": all_match, "outputs": outputs}
