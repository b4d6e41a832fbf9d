"""Run manifests and deterministic persistence.

A manifest is a JSON document in which every field is explicit, so the
file on disk is the complete experiment definition: no behavior hides in
code defaults. Records and analysis tables persist through atomic writes
(temp file then rename) and never include wall-clock data, which keeps
rerun outputs byte-identical.
"""

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from vqorder.ansatz import ParamVector
from vqorder.errors import ManifestError
from vqorder.train import (
    INIT_STATE_KINDS,
    RunSpec,
    TrainingRecord,
    run_spec_from_dict,
)

SCHEMA_VERSION = 1
MANIFEST_KINDS = ("z2", "spt", "benchmark")

_TOP_LEVEL_KEYS = ("schema_version", "kind", "n_qubits", "n_restarts",
                   "base_seed", "out_dir", "model", "circuit", "loss",
                   "optimizer", "init_state")


@dataclass(frozen=True)
class RunManifest:
    """Complete, explicit definition of one training experiment."""

    kind: str
    n_qubits: int
    run_spec: RunSpec
    n_restarts: int
    base_seed: int
    out_dir: str | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        doc = {"schema_version": self.schema_version, "kind": self.kind,
               "n_qubits": self.n_qubits, "n_restarts": self.n_restarts,
               "base_seed": self.base_seed, "out_dir": self.out_dir}
        doc.update(self.run_spec.to_dict())
        return doc


def manifest_from_dict(doc: dict) -> RunManifest:
    """Validate a manifest document, anchoring errors to their field."""
    if not isinstance(doc, dict):
        raise ManifestError("manifest root must be a JSON object")
    missing = [key for key in _TOP_LEVEL_KEYS if key not in doc]
    if missing:
        raise ManifestError(
            f"{missing[0]}: required field is missing (every field must be "
            f"explicit)")
    unknown = [key for key in doc if key not in _TOP_LEVEL_KEYS]
    if unknown:
        raise ManifestError(f"{unknown[0]}: unknown field")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ManifestError(
            f"schema_version: expected {SCHEMA_VERSION}, "
            f"got {doc['schema_version']!r}")
    if doc["kind"] not in MANIFEST_KINDS:
        raise ManifestError(
            f"kind: must be one of {MANIFEST_KINDS}, got {doc['kind']!r}")
    if not isinstance(doc["n_restarts"], int) or doc["n_restarts"] < 1:
        raise ManifestError(
            f"n_restarts: must be a positive integer, got {doc['n_restarts']!r}")
    if not isinstance(doc["base_seed"], int):
        raise ManifestError(
            f"base_seed: must be an integer, got {doc['base_seed']!r}")
    if doc["out_dir"] is not None and not isinstance(doc["out_dir"], str):
        raise ManifestError(f"out_dir: must be a string or null")

    spec_doc = {key: doc[key] for key in
                ("model", "circuit", "loss", "optimizer", "init_state")}
    for section in ("model", "circuit", "loss", "optimizer"):
        if not isinstance(spec_doc[section], dict):
            raise ManifestError(f"{section}: must be a JSON object")
    if doc["init_state"] not in INIT_STATE_KINDS:
        raise ManifestError(
            f"init_state: must be one of {INIT_STATE_KINDS}, "
            f"got {doc['init_state']!r}")
    try:
        run_spec = run_spec_from_dict(spec_doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise ManifestError(_anchor_spec_error(spec_doc, exc)) from exc

    n = doc["n_qubits"]
    if run_spec.circuit.n_qubits != n:
        raise ManifestError(
            f"circuit: built for {run_spec.circuit.n_qubits} qubits but "
            f"n_qubits is {n}")
    if run_spec.hamiltonian.n_qubits != n:
        raise ManifestError(
            f"model: built for {run_spec.hamiltonian.n_qubits} qubits but "
            f"n_qubits is {n}")
    return RunManifest(kind=doc["kind"], n_qubits=n, run_spec=run_spec,
                       n_restarts=doc["n_restarts"],
                       base_seed=doc["base_seed"], out_dir=doc["out_dir"],
                       schema_version=doc["schema_version"])


def _anchor_spec_error(spec_doc: dict, exc: Exception) -> str:
    """Find which section a spec-building error belongs to."""
    from vqorder.ansatz import build_circuit
    from vqorder.models import build_model
    from vqorder.objective import loss_config_from_dict
    from vqorder.train import optimizer_config_from_dict

    def probe_model():
        doc = dict(spec_doc["model"])
        build_model(doc.pop("label"), doc.pop("n_qubits"), **doc)

    probes = (
        ("model", probe_model),
        ("circuit", lambda: build_circuit(spec_doc["circuit"])),
        ("loss", lambda: loss_config_from_dict(spec_doc["loss"])),
        ("optimizer", lambda: optimizer_config_from_dict(spec_doc["optimizer"])),
    )
    for section, probe in probes:
        try:
            probe()
        except (ValueError, KeyError, TypeError) as section_exc:
            return f"{section}: {section_exc}"
    return f"manifest: {exc}"


def default_manifest(kind: str, n_qubits: int, depth: int | None = None,
                     n_restarts: int = 10, base_seed: int = 2000,
                     out_dir: str | None = None) -> RunManifest:
    """Standard experiment definitions for each manifest kind.

    z2: frustrated chain with a flip-symmetric brickwork of the given depth
    (defaults to n_qubits) trained from random product states. spt: cluster
    chain with the structured layer, string-order objective, cluster start.
    benchmark: zero-budget reference run whose final state is exactly the
    collective superposition state (for baseline tables).
    """
    from vqorder.ansatz import build_spt_layer, build_z2_brickwork
    from vqorder.models import build_cluster_ising, build_ising_annni
    from vqorder.objective import (
        LossConfig,
        StringOrder,
        default_string_endpoints,
    )
    from vqorder.train import OptimizerConfig

    if kind == "z2":
        run_spec = RunSpec(build_z2_brickwork(n_qubits, depth or n_qubits),
                           build_ising_annni(n_qubits), LossConfig(),
                           OptimizerConfig())
    elif kind == "spt":
        i, j = default_string_endpoints(n_qubits)
        run_spec = RunSpec(build_spt_layer(n_qubits),
                           build_cluster_ising(n_qubits),
                           LossConfig(order_observable=StringOrder(i, j)),
                           OptimizerConfig(), init_state_kind="cluster")
    elif kind == "benchmark":
        run_spec = RunSpec(build_z2_brickwork(n_qubits, 1),
                           build_ising_annni(n_qubits),
                           LossConfig(sigma=0.0, beta=0.0),
                           OptimizerConfig(max_iters=0, init_scale=0.0),
                           init_state_kind="ghz")
    else:
        raise ManifestError(
            f"kind: must be one of {MANIFEST_KINDS}, got {kind!r}")
    return RunManifest(kind=kind, n_qubits=n_qubits, run_spec=run_spec,
                       n_restarts=n_restarts, base_seed=base_seed,
                       out_dir=out_dir)


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def manifest_hash(manifest: RunManifest) -> str:
    """Stable content hash of the canonical manifest serialization."""
    compact = json.dumps(manifest.to_dict(), sort_keys=True,
                         separators=(",", ":"))
    return hashlib.sha256(compact.encode()).hexdigest()


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(path: str, manifest: RunManifest) -> None:
    atomic_write_text(path, canonical_json(manifest.to_dict()))


def load_manifest(path: str) -> RunManifest:
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    return manifest_from_dict(doc)


def record_to_dict(record: TrainingRecord) -> dict:
    """Serialize a record; wall time is measured but never persisted."""
    return {
        "seed": record.seed,
        "status": record.status,
        "loss_trace": [float(v) for v in record.loss_trace],
        "order_trace": [float(v) for v in record.order_trace],
        "energy_trace": [float(v) for v in record.energy_trace],
        "variance_trace": [float(v) for v in record.variance_trace],
        "parity_traces": {key: [float(v) for v in trace]
                          for key, trace in record.parity_traces.items()},
        "final_params": [float(v) for v in np.asarray(record.final_params.values)],
    }


def record_from_dict(doc: dict) -> TrainingRecord:
    return TrainingRecord(
        seed=doc["seed"],
        loss_trace=np.array(doc["loss_trace"]),
        order_trace=np.array(doc["order_trace"]),
        energy_trace=np.array(doc["energy_trace"]),
        variance_trace=np.array(doc["variance_trace"]),
        parity_traces={key: np.array(trace)
                       for key, trace in doc["parity_traces"].items()},
        final_params=ParamVector(np.array(doc["final_params"])),
        status=doc["status"])


def write_record(path: str, record: TrainingRecord,
                 manifest: RunManifest) -> None:
    doc = {"schema_version": SCHEMA_VERSION,
           "manifest_hash": manifest_hash(manifest),
           "manifest": manifest.to_dict(),
           "record": record_to_dict(record)}
    atomic_write_text(path, canonical_json(doc))


def load_record(path: str) -> tuple[TrainingRecord, RunManifest]:
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise ManifestError(f"cannot read record {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    for key in ("schema_version", "manifest", "record"):
        if key not in doc:
            raise ManifestError(f"{key}: required field is missing in record")
    return record_from_dict(doc["record"]), manifest_from_dict(doc["manifest"])


def format_cell(value) -> str:
    """Format one CSV cell; floats use shortest round-trip notation."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str, columns: dict, metadata: dict) -> None:
    """Write a flat CSV table with '#'-prefixed metadata lines.

    columns maps name -> sequence; all sequences must share one length.
    metadata keys always include the schema version; callers add the
    manifest hash and anything else worth pinning.
    """
    names = list(columns)
    lengths = {len(columns[name]) for name in names}
    if len(lengths) != 1:
        raise ValueError(f"ragged columns: lengths {sorted(lengths)}")
    lines = [f"# schema_version: {SCHEMA_VERSION}"]
    lines += [f"# {key}: {value}" for key, value in metadata.items()]
    lines.append(",".join(names))
    for row in zip(*(columns[name] for name in names)):
        lines.append(",".join(format_cell(cell) for cell in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path: str) -> tuple[dict, dict]:
    """Read back a table written by write_csv: (columns, metadata)."""
    metadata = {}
    rows = []
    header = None
    with open(path) as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                metadata[key.strip()] = value.strip()
            elif header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    if header is None:
        raise ManifestError(f"{path}: no header row found")
    columns = {name: [row[k] for row in rows]
               for k, name in enumerate(header)}
    return columns, metadata
