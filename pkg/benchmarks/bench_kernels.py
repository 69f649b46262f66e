"""Time the compiled and numpy pair-scattering kernels on the same walks.

    python benchmarks/bench_kernels.py [--steps 60] [--repeat 3]
"""

import argparse
import time

import numpy as np

from clusterwalk import (
    CoinUnitary, LatticeConfig, Mode, Phase, Port, Statistics, from_single_modes, step,
)
from clusterwalk._kernels import BACKENDS
from clusterwalk.coin import single_photon_transfer


def walk(backend, stats, steps):
    lat = LatticeConfig(steps + 1)
    s = from_single_modes(
        Mode(0, Port.P1, Phase.INCOMING), Mode(0, Port.P3, Phase.INCOMING), stats, lat
    )
    # the Grover coin keeps this input localized; a DFT coin spreads it
    coin = CoinUnitary(np.fft.fft(np.eye(4)) / 2, name="dft")
    transfers = [single_photon_transfer(coin, None, n, lat) for n in range(steps)]
    t0 = time.perf_counter()
    for t in transfers:
        s = step(s, t, backend)
    return time.perf_counter() - t0, s


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=60)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'statistics':16} {'backend':8} {'terms':>8} {'best s':>9}")
    for stats in Statistics:
        finals = {}
        for name in sorted(BACKENDS):
            best = min(walk(name, stats, args.steps)[0] for _ in range(args.repeat))
            finals[name] = walk(name, stats, args.steps)[1]
            print(f"{stats.value:16} {name:8} {len(finals[name]):8d} {best:9.4f}")
        ref = next(iter(finals.values()))
        same = all(np.array_equal(f.amps, ref.amps) for f in finals.values())
        print(f"{'':16} bitwise identical: {same}")


if __name__ == "__main__":
    main()
