"""Command-line front end for training and analysis runs.

Four subcommands cover the full workflow: ``train`` executes a manifest
and persists one record per restart plus a summary table, ``diagnose``
recomputes structural diagnostics from a stored record, ``measure``
samples measurement-robustness curves over a trained ensemble, and
``spectrum`` tabulates exact eigensystems of the built-in models.

Exit codes: 0 on success, 1 on usage or manifest errors, 2 when some
requested work was skipped or some restarts failed, 3 when numerics broke
down entirely.
"""

import argparse
import glob
import os
import sys

import numpy as np

from vqorder import manifest as mf
from vqorder.ansatz import (
    apply_circuit,
    circuit_unitary,
    ghz_state,
    symmetry_operators,
)
from vqorder.diagnostics import (
    clifford_angle_histogram,
    eigenphase_spectrum,
    level_spacing_r,
    measurement_robustness,
    qfi_collective,
    spectral_support,
    symmetry_sector_phases,
)
from vqorder.errors import (
    CapacityError,
    ManifestError,
    NumericError,
    StatisticsError,
)
from vqorder.models import (
    ED_MAX_QUBITS,
    build_cluster_ising,
    build_ising_annni,
    exact_diagonalize,
)
from vqorder.objective import (
    ChiSusceptibility,
    StringOrder,
    default_string_endpoints,
)
from vqorder.qstate import StateVector
from vqorder.train import multi_restart

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_NUMERIC = 3

OUT_DIR_ENV = "VQORDER_OUT_DIR"
DIAGNOSTIC_NAMES = ("spectral", "eigenphases", "level-spacing", "qfi",
                    "clifford")


def _usage_error(message: str) -> int:
    print(f"vqorder: error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _resolve_out_dir(flag_value, manifest_out_dir=None) -> str:
    """Output directory priority: flag, then manifest, then env, then cwd."""
    out_dir = flag_value or manifest_out_dir or os.environ.get(OUT_DIR_ENV) \
        or "."
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _final_state(manifest: mf.RunManifest, record) -> StateVector:
    """Rebuild the trained state a record describes, bit for bit."""
    spec = manifest.run_spec
    return apply_circuit(spec.circuit, record.final_params,
                         spec.initial_state(record.seed))


def cmd_train(args) -> int:
    try:
        manifest = mf.load_manifest(args.manifest)
    except ManifestError as exc:
        return _usage_error(str(exc))
    if args.jobs < 1:
        return _usage_error(f"--jobs must be positive, got {args.jobs}")
    base_seed = manifest.base_seed if args.seed is None else args.seed
    out_dir = _resolve_out_dir(args.out_dir, manifest.out_dir)

    try:
        summary = multi_restart(manifest.run_spec, manifest.n_restarts,
                                base_seed, jobs=args.jobs)
    except NumericError as exc:
        print(f"vqorder: numeric breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    digest = mf.manifest_hash(manifest)
    for record in summary.records:
        path = os.path.join(out_dir, f"record_seed{record.seed}.json")
        mf.write_record(path, record, manifest)

    columns = {"iteration": list(range(summary.mean_traces["loss"].shape[0]))}
    for name in ("loss", "order", "energy", "variance"):
        columns[f"mean_{name}"] = summary.mean_traces[name]
        columns[f"stderr_{name}"] = summary.stderr_traces[name]
    metadata = {
        "manifest_hash": digest,
        "kind": manifest.kind,
        "n_qubits": manifest.n_qubits,
        "n_restarts": manifest.n_restarts,
        "base_seed": base_seed,
        "seeds": " ".join(str(s) for s in summary.seeds),
        "statuses": " ".join(r.status for r in summary.records),
        "n_aborted": len(summary.failures),
    }
    mf.write_csv(os.path.join(out_dir, "summary.csv"), columns, metadata)

    for index, message in summary.failures:
        print(f"vqorder: restart {index} aborted: {message}",
              file=sys.stderr)
    print(f"wrote {len(summary.records)} record file(s) and summary.csv "
          f"to {out_dir}")
    if summary.failures or any(r.status == "failed" for r in summary.records):
        return EXIT_PARTIAL
    return EXIT_OK


def _diag_spectral(manifest, record, state, path) -> dict:
    spec = manifest.run_spec
    if manifest.n_qubits > ED_MAX_QUBITS:
        raise CapacityError(
            f"dense diagonalization needs n_qubits <= {ED_MAX_QUBITS}, "
            f"got {manifest.n_qubits}")
    eigensystem = exact_diagonalize(spec.hamiltonian)
    support = spectral_support(state, eigensystem,
                               observable=spec.loss_cfg.order_observable)
    columns = {
        "index": list(range(eigensystem.dim)),
        "energy": support.energies,
        "weight": support.weights,
        "phase": support.phases,
        "diagonal_order": support.diagonal_expectations,
    }
    metadata = {
        "manifest_hash": mf.manifest_hash(manifest),
        "seed": record.seed,
        "mean_energy": support.mean_energy,
        "total_weight": float(support.weights.sum()),
    }
    mf.write_csv(path, columns, metadata)
    return columns


def _diag_eigenphases(manifest, record, state, path) -> dict:
    spec = manifest.run_spec
    unitary = circuit_unitary(spec.circuit, record.final_params)
    spectrum = eigenphase_spectrum(unitary)
    reps = [phase for phase, _ in spectrum.clusters]
    mults = [mult for _, mult in spectrum.clusters]
    columns = {"cluster": list(range(len(reps))), "phase": reps,
               "multiplicity": mults}
    metadata = {
        "manifest_hash": mf.manifest_hash(manifest),
        "seed": record.seed,
        "n_levels": spectrum.phases.shape[0],
        "n_clusters": len(spectrum.clusters),
        "modal_multiplicity": spectrum.modal_multiplicity(),
    }
    mf.write_csv(path, columns, metadata)
    return columns


def _diag_level_spacing(manifest, record, state, path) -> dict:
    spec = manifest.run_spec
    unitary = circuit_unitary(spec.circuit, record.final_params)
    operators = symmetry_operators(spec.circuit.symmetry,
                                   manifest.n_qubits)
    masks = [sum(1 << site for site in op.terms) for op in operators]
    sectors = symmetry_sector_phases(unitary, masks)
    labels, counts, values = [], [], []
    all_levels, all_labels = [], []
    for index, signs in enumerate(sorted(sectors)):
        phases = sectors[signs]
        labels.append("/".join(f"{int(s):+d}" for s in signs))
        counts.append(phases.shape[0])
        values.append(level_spacing_r(phases, circular=True))
        all_levels.append(phases)
        all_labels.append(np.full(phases.shape[0], index))
    labels.append("all")
    counts.append(sum(counts))
    values.append(level_spacing_r(np.concatenate(all_levels),
                                  sector_labels=np.concatenate(all_labels),
                                  circular=True))
    columns = {"sector": labels, "n_levels": counts, "mean_r": values}
    metadata = {"manifest_hash": mf.manifest_hash(manifest),
                "seed": record.seed,
                "symmetry": spec.circuit.symmetry}
    mf.write_csv(path, columns, metadata)
    return columns


def _diag_qfi(manifest, record, state, path) -> dict:
    value = qfi_collective(state)
    n = manifest.n_qubits
    columns = {"n_qubits": [n], "qfi": [value],
               "qfi_per_qubit": [value / n]}
    metadata = {"manifest_hash": mf.manifest_hash(manifest),
                "seed": record.seed}
    mf.write_csv(path, columns, metadata)
    return columns


def _diag_clifford(manifest, record, state, path) -> dict:
    histogram = clifford_angle_histogram(record.final_params)
    columns = {"bin_left": histogram.bin_edges[:-1],
               "bin_right": histogram.bin_edges[1:],
               "count": histogram.counts}
    metadata = {
        "manifest_hash": mf.manifest_hash(manifest),
        "seed": record.seed,
        "n_params": int(histogram.counts.sum()),
        "mean_clifford_distance": histogram.mean_clifford_distance,
    }
    mf.write_csv(path, columns, metadata)
    return columns


_DIAGNOSTIC_RUNNERS = {
    "spectral": _diag_spectral,
    "eigenphases": _diag_eigenphases,
    "level-spacing": _diag_level_spacing,
    "qfi": _diag_qfi,
    "clifford": _diag_clifford,
}


def cmd_diagnose(args) -> int:
    try:
        record, manifest = mf.load_record(args.record)
    except ManifestError as exc:
        return _usage_error(str(exc))
    out_dir = _resolve_out_dir(args.out_dir, manifest.out_dir)
    stem = os.path.splitext(os.path.basename(args.record))[0]
    state = _final_state(manifest, record)

    code = EXIT_OK
    for name in args.diagnostics:
        path = os.path.join(out_dir, f"{stem}_{name}.csv")
        try:
            _DIAGNOSTIC_RUNNERS[name](manifest, record, state, path)
        except (CapacityError, StatisticsError) as exc:
            print(f"vqorder: skipping {name}: {exc}", file=sys.stderr)
            code = EXIT_PARTIAL
            continue
        print(f"wrote {path}")
    return code


def _collect_records(target: str):
    """Load one record file, or every record in an ensemble directory."""
    if os.path.isdir(target):
        paths = sorted(glob.glob(os.path.join(target, "record_seed*.json")))
        if not paths:
            raise ManifestError(f"no record_seed*.json files in {target}")
    else:
        paths = [target]
    loaded = [mf.load_record(path) for path in paths]
    manifest = loaded[0][1]
    digest = mf.manifest_hash(manifest)
    for path, (_, other) in zip(paths, loaded):
        if mf.manifest_hash(other) != digest:
            raise ManifestError(
                f"{path}: record belongs to a different manifest")
    return [record for record, _ in loaded], manifest


def cmd_measure(args) -> int:
    try:
        records, manifest = _collect_records(args.record)
    except ManifestError as exc:
        return _usage_error(str(exc))
    n = manifest.n_qubits
    if not 0 <= args.m_max < n:
        return _usage_error(
            f"--m-max must lie in [0, {n - 1}] for {n} qubits, "
            f"got {args.m_max}")
    if args.samples < 1:
        return _usage_error(f"--samples must be positive, got {args.samples}")
    out_dir = _resolve_out_dir(args.out_dir, manifest.out_dir)

    states = [_final_state(manifest, record) for record in records]
    rng = np.random.default_rng(args.seed)
    curve = measurement_robustness(states, args.m_max, args.samples, rng)
    ensembles = ["trained"] * curve.m_values.shape[0]
    m_values = list(curve.m_values)
    means = list(curve.mean_entropy)
    errors = list(curve.stderr)
    sample_counts = list(curve.sample_counts)
    if args.with_ghz_baseline:
        baseline = measurement_robustness([ghz_state(n)], args.m_max,
                                          args.samples, rng)
        ensembles += ["ghz"] * baseline.m_values.shape[0]
        m_values += list(baseline.m_values)
        means += list(baseline.mean_entropy)
        errors += list(baseline.stderr)
        sample_counts += list(baseline.sample_counts)

    columns = {"ensemble": ensembles, "m": m_values,
               "mean_entropy": means, "stderr": errors,
               "n_samples": sample_counts}
    metadata = {"manifest_hash": mf.manifest_hash(manifest),
                "n_qubits": n, "n_states": len(states),
                "samples_per_m": args.samples, "seed": args.seed}
    path = os.path.join(out_dir, "measurements.csv")
    mf.write_csv(path, columns, metadata)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if args.n > ED_MAX_QUBITS:
        return _usage_error(
            f"--n must not exceed the dense-diagonalization ceiling "
            f"{ED_MAX_QUBITS}, got {args.n}")
    try:
        if args.model == "ising_annni":
            hamiltonian = build_ising_annni(args.n, h=args.h,
                                            boundary=args.boundary)
        else:
            hamiltonian = build_cluster_ising(args.n, gamma=args.gamma)
    except ValueError as exc:
        return _usage_error(str(exc))

    eigensystem = exact_diagonalize(hamiltonian)
    if args.model == "ising_annni":
        observable = ChiSusceptibility()
    else:
        try:
            observable = StringOrder(*default_string_endpoints(args.n))
        except ValueError:
            observable = ChiSusceptibility()

    diagonal = np.empty(eigensystem.dim)
    for k in range(eigensystem.dim):
        vec = StateVector(eigensystem.eigenvectors[:, k].astype(complex),
                          args.n)
        diagonal[k] = np.real(np.vdot(vec.amps, observable.apply(vec).amps))

    columns = {"index": list(range(eigensystem.dim)),
               "energy": eigensystem.energies,
               "diagonal_order": diagonal}
    metadata = {"model": hamiltonian.label, "n_qubits": args.n,
                "order_observable": type(observable).__name__,
                "energy_sum": float(eigensystem.energies.sum()),
                "min_energy": float(eigensystem.energies[0]),
                "max_energy": float(eigensystem.energies[-1])}
    for key, value in sorted(hamiltonian.parameters.items()):
        metadata[key] = value
    out_dir = _resolve_out_dir(args.out_dir)
    path = os.path.join(out_dir,
                        f"spectrum_{hamiltonian.label}_n{args.n}.csv")
    mf.write_csv(path, columns, metadata)
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqorder",
        description="Train and analyze symmetry-ordered variational states.")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser(
        "train", help="run a manifest: one record per restart plus summary")
    train.add_argument("--manifest", required=True,
                       help="path to a JSON run manifest")
    train.add_argument("--seed", type=int, default=None,
                       help="override the manifest base seed")
    train.add_argument("--jobs", type=int, default=1,
                       help="worker processes for restarts")
    train.add_argument("--out-dir", default=None,
                       help="output directory (overrides manifest and env)")
    train.set_defaults(handler=cmd_train)

    diagnose = sub.add_parser(
        "diagnose", help="recompute diagnostics from a stored record")
    diagnose.add_argument("--record", required=True,
                          help="path to a record JSON file")
    diagnose.add_argument("--diagnostics", nargs="+",
                          choices=DIAGNOSTIC_NAMES,
                          default=list(DIAGNOSTIC_NAMES),
                          help="which diagnostics to run")
    diagnose.add_argument("--out-dir", default=None)
    diagnose.set_defaults(handler=cmd_diagnose)

    measure = sub.add_parser(
        "measure",
        help="measurement-robustness curve for a record or ensemble dir")
    measure.add_argument("--record", required=True,
                         help="record file, or directory of record files")
    measure.add_argument("--m-max", type=int, required=True,
                         help="largest number of measured sites")
    measure.add_argument("--samples", type=int, required=True,
                         help="samples per measurement count")
    measure.add_argument("--seed", type=int, default=0,
                         help="sampling seed")
    measure.add_argument("--with-ghz-baseline", action="store_true",
                         help="append rows for a GHZ reference state")
    measure.add_argument("--out-dir", default=None)
    measure.set_defaults(handler=cmd_measure)

    spectrum = sub.add_parser(
        "spectrum", help="tabulate an exact model spectrum")
    spectrum.add_argument("--model", required=True,
                          choices=("ising_annni", "cluster_ising"))
    spectrum.add_argument("--n", type=int, required=True,
                          help="chain length in qubits")
    spectrum.add_argument("--h", type=float, default=1.0,
                          help="transverse field (ising_annni)")
    spectrum.add_argument("--gamma", type=float, default=0.5,
                          help="coupling ratio (cluster_ising)")
    spectrum.add_argument("--boundary", choices=("open", "periodic"),
                          default="open")
    spectrum.add_argument("--out-dir", default=None)
    spectrum.set_defaults(handler=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
