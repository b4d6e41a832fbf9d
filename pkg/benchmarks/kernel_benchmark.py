"""Benchmark the compiled kernels against the numpy fallback.

Both backends are imported directly (bypassing the runtime selector), so
one process times the same operations on identical inputs. Reported
numbers are per-call medians over --repeats batches.

Usage:
    python benchmarks/kernel_benchmark.py [--sizes 8 10 12 14] [--repeats 5]
"""

import argparse
import timeit

import numpy as np

from vqorder import _kernels_numpy


def random_amps(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    dim = 1 << n_qubits
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return np.ascontiguousarray(amps / np.linalg.norm(amps))


def mask_cases(n_qubits: int) -> dict:
    """A two-site rotation mask set and a chain-spanning string mask set."""
    mid = n_qubits // 2
    local = {"x_mask": (1 << mid) | (1 << (mid + 1)), "y_mask": 0,
             "z_mask": 0}
    string = {"x_mask": sum(1 << q for q in range(2, n_qubits - 2)),
              "y_mask": (1 << 1) | (1 << (n_qubits - 2)),
              "z_mask": 1 | (1 << (n_qubits - 1))}
    return {"two-site": local, "string": string}


def time_call(func, repeats: int, inner: int) -> float:
    times = timeit.repeat(func, number=inner, repeat=repeats)
    return min(times) / inner


def bench_backend(impl, n_qubits: int, repeats: int, inner: int) -> dict:
    rng = np.random.default_rng(7)
    psi = random_amps(n_qubits, rng)
    out = np.zeros_like(psi)
    results = {}
    for case, masks in mask_cases(n_qubits).items():
        work = psi.copy()
        results[f"rotate/{case}"] = time_call(
            lambda: impl.rotate_pauli(work, masks["x_mask"],
                                      masks["y_mask"], masks["z_mask"],
                                      0.37),
            repeats, inner)
        results[f"bracket/{case}"] = time_call(
            lambda: impl.bracket_pauli(psi, psi, masks["x_mask"],
                                       masks["y_mask"], masks["z_mask"]),
            repeats, inner)
        results[f"acc/{case}"] = time_call(
            lambda: impl.acc_pauli(out, psi, 0.5 + 0.0j, masks["x_mask"],
                                   masks["y_mask"], masks["z_mask"]),
            repeats, inner)
    results["cz"] = time_call(
        lambda: impl.apply_cz(psi.copy(), 0b11 << (n_qubits // 2)),
        repeats, inner)
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[8, 10, 12, 14])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--inner", type=int, default=50,
                        help="calls per timed batch")
    args = parser.parse_args()

    try:
        from vqorder import _core
    except ImportError:
        print("compiled extension not importable; nothing to compare")
        return 1

    print(f"{'n':>3} {'kernel':<18} {'compiled':>12} {'numpy':>12} "
          f"{'speedup':>8}")
    for n in args.sizes:
        fast = bench_backend(_core, n, args.repeats, args.inner)
        slow = bench_backend(_kernels_numpy, n, args.repeats, args.inner)
        for kernel in fast:
            ratio = slow[kernel] / fast[kernel]
            print(f"{n:>3} {kernel:<18} {fast[kernel] * 1e6:>10.2f}us "
                  f"{slow[kernel] * 1e6:>10.2f}us {ratio:>7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
