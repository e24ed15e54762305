"""Benchmark the tone-synthesis kernel: compiled extension vs numpy fallback.

Runs the dataset generator's hot loop (7-line banks over 8192-sample blocks)
standalone and then times end-to-end dataset generation under both
implementations.  Usage: python benchmarks/bench_synth.py [--blocks N]
"""

import argparse
import os
import subprocess
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import numpy as np


def time_kernel(synth, blocks, reps=3):
    rng = np.random.default_rng(0)
    freqs = rng.uniform(10.0, 5000.0, 7)
    amps = rng.uniform(0.1, 1.0, 7)
    phases = rng.uniform(0.0, 2 * np.pi, 7)
    best = float("inf")
    for _ in range(reps):
        start = time.perf_counter()
        for b in range(blocks):
            synth(freqs, amps, phases, b * 8192, 8192, 32768.0)
        best = min(best, time.perf_counter() - start)
    return best


def time_generation(samples):
    from framesense import turbine

    fleet = turbine.default_fleet()
    cfg = turbine.SimConfig(samples_per_state=samples, snr_db=0.0)
    start = time.perf_counter()
    turbine.generate_dataset(
        fleet, turbine.mixing_matrix(0.1), cfg, turbine.engine1_conditions()
    )
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--blocks", type=int, default=512)
    parser.add_argument("--samples", type=int, default=64)
    parser.add_argument("--generation", action="store_true",
                        help="also time end-to-end dataset generation "
                             "(re-executes under both implementations)")
    args = parser.parse_args()

    from framesense import _kernels
    from framesense._kernels import pure

    print(f"kernel selected at import: {_kernels.IMPLEMENTATION}")
    rows = [("numpy fallback", time_kernel(pure.synth_tones, args.blocks))]
    if _kernels.IMPLEMENTATION == "cython":
        rows.insert(0, ("cython kernel", time_kernel(_kernels.synth_tones, args.blocks)))
    print(f"\nsynthesis kernel, {args.blocks} blocks x 8192 samples x 7 lines:")
    base = rows[-1][1]
    for name, secs in rows:
        rate = args.blocks * 8192 * 7 / secs / 1e6
        print(f"  {name:16s} {secs:8.3f} s   {rate:8.1f} Mtone-samples/s   x{base / secs:.2f}")

    if args.generation:
        print(f"\nend-to-end generation, 3 conditions x {args.samples} samples:")
        for force, label in (("0", "selected"), ("1", "numpy fallback")):
            env = dict(os.environ, FRAMESENSE_PURE=force,
                       PYTHONPATH=str(Path(__file__).parent.parent / "src"))
            code = (
                "import sys; sys.path.insert(0, 'src');"
                f"from benchmarks.bench_synth import time_generation;"
                f"print(time_generation({args.samples}))"
            )
            out = subprocess.run(
                [sys.executable, "-c", code],
                capture_output=True, text=True, env=env,
                cwd=Path(__file__).parent.parent,
            )
            print(f"  {label:16s} {float(out.stdout.strip()):8.3f} s")


if __name__ == "__main__":
    main()
