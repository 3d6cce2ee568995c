"""Experiment manifests: a list of CLI invocations plus expected values.

A manifest is JSON::

    {"name": "...",
     "commands": [{"id": "t", "argv": ["tradeoff", "--alpha", "0.2", ...]}],
     "expected": [{"path": "t.summary.gamma_inf", "value": 0.332,
                   "tolerance": 5e-4, "provenance": "..."}]}

Paths address ``<id>.summary.<key>[.<index>...]`` or
``<id>.rows.<row>.<column>``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import InvalidParameter

_PACKAGE_DIR = "manifests"


@dataclass(frozen=True)
class Expectation:
    path: str
    value: float
    tolerance: float
    provenance: str


@dataclass(frozen=True)
class ExperimentManifest:
    name: str
    commands: list
    expected: list

    def __post_init__(self):
        ids = [c["id"] for c in self.commands]
        if len(set(ids)) != len(ids):
            raise InvalidParameter("commands", "command ids must be unique")
        for e in self.expected:
            if not e.provenance:
                raise InvalidParameter("expected", f"{e.path} has no provenance note")
            if e.path.split(".", 1)[0] not in ids:
                raise InvalidParameter("expected", f"{e.path} refers to an unknown command")


def manifest_from_dict(raw: dict) -> ExperimentManifest:
    try:
        commands = [{"id": str(c["id"]), "argv": [str(a) for a in c["argv"]]}
                    for c in raw["commands"]]
        expected = [Expectation(str(e["path"]), float(e["value"]), float(e["tolerance"]),
                                str(e.get("provenance", ""))) for e in raw["expected"]]
        return ExperimentManifest(str(raw["name"]), commands, expected)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameter("manifest", f"malformed manifest ({exc})") from None


def builtin_names() -> list[str]:
    root = resources.files("lagmmse").joinpath(_PACKAGE_DIR)
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_manifest(source: str) -> ExperimentManifest:
    if source in builtin_names():
        text = resources.files("lagmmse").joinpath(f"{_PACKAGE_DIR}/{source}.json").read_text()
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise InvalidParameter("manifest", f"no built-in or file {source!r} ({exc.strerror})")
    try:
        return manifest_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise InvalidParameter("manifest", f"{source}: {exc.msg}") from None


def resolve(results: dict, path: str):
    head, *rest = path.split(".")
    if head not in results:
        raise InvalidParameter("path", f"unknown command id in {path!r}")
    res = results[head]
    if not rest or rest[0] not in ("summary", "rows"):
        raise InvalidParameter("path", f"{path!r} must continue with summary or rows")
    node = res.summary if rest[0] == "summary" else res.rows
    for key in rest[1:]:
        try:
            node = node[int(key)] if isinstance(node, (list, tuple)) or hasattr(node, "shape") \
                else node[key]
        except (KeyError, IndexError, ValueError):
            raise InvalidParameter("path", f"{path!r} does not resolve at {key!r}") from None
    return float(node)


@dataclass
class ManifestReport:
    name: str
    rows: list
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures


def run_manifest(manifest: ExperimentManifest) -> ManifestReport:
    from .cli import execute

    results = {}
    for cmd in manifest.commands:
        _, res, _ = execute(cmd["argv"])
        results[cmd["id"]] = res
    rows, failures = [], []
    for e in manifest.expected:
        obs = resolve(results, e.path)
        ok = math.isfinite(obs) and abs(obs - e.value) <= e.tolerance
        rows.append({"path": e.path, "observed": obs, "expected": e.value,
                     "tolerance": e.tolerance, "pass": ok, "provenance": e.provenance})
        if not ok:
            failures.append({"path": e.path, "observed": obs, "expected": e.value,
                             "tolerance": e.tolerance})
    return ManifestReport(manifest.name, rows, failures)
