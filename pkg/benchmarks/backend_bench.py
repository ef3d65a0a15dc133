"""Compare the pure-numpy and compiled kernel backends.

Times the two hot kernels (the CD Gibbs chain and the autoencoding
gradient) over identical inputs and verifies the outputs agree, then
prints a small table with the speedup.

Usage: python3 benchmarks/backend_bench.py [--batch 256] [--repeats 20]
"""

import argparse
import time

import numpy as np

from tarbm import backend
from tarbm.tensor_core import Rng


def make_gibbs_case(rng, v, h, batch, k):
    return (rng.normal(v, h) * 0.1, rng.normal(v) * 0.1, rng.normal(h) * 0.1,
            rng.integers(0, 2, size=(batch, v)).astype(np.float64),
            rng.normal(batch, h) * 0.1, k,
            rng.uniform(k, batch, h), rng.uniform(k, batch, v), False)


def make_ae_case(rng, v, h, d, batch):
    return (rng.normal(v, h) * 0.1, rng.normal(v) * 0.1, rng.normal(h) * 0.1,
            rng.normal(d, h, h) * 0.1, rng.normal(d + 1, batch, v), True)


def time_kernel(fn, case, repeats):
    fn(*case)  # warm up
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*case)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--visible", type=int, default=64)
    ap.add_argument("--hidden", type=int, default=100)
    ap.add_argument("--delay", type=int, default=3)
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--cd-k", type=int, default=1)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    names = backend.available_backends()
    if len(names) < 2:
        print(f"only {names} available; build the extension to compare")
    rng = Rng(0)
    cases = {
        "gibbs_chain": make_gibbs_case(rng, args.visible, args.hidden,
                                       args.batch, args.cd_k),
        "ae_grad": make_ae_case(rng, args.visible, args.hidden, args.delay,
                                args.batch),
    }
    print(f"V={args.visible} H={args.hidden} M={args.delay} "
          f"batch={args.batch} k={args.cd_k}, best of {args.repeats}")
    ratio_label = f"{names[0]}/{names[1]}" if len(names) == 2 else ""
    print(f"{'kernel':<12} " + " ".join(f"{n:>12}" for n in names)
          + (f"  {ratio_label:>13}" if ratio_label else ""))
    before = backend.active_backend()
    try:
        for kernel, case in cases.items():
            times, outputs = [], []
            for name in names:
                backend.set_backend(name)
                fn = getattr(backend, kernel)
                times.append(time_kernel(fn, case, args.repeats))
                out = fn(*case)
                if not isinstance(out, tuple):
                    out = (out,)
                outputs.append([np.asarray(a) for a in out])
            for ref, other in zip(outputs[0], outputs[-1]):
                assert np.allclose(ref, other, rtol=0, atol=1e-10), \
                    f"{kernel}: backends disagree"
            row = f"{kernel:<12} " + " ".join(f"{t * 1e3:>10.3f}ms"
                                              for t in times)
            if len(times) == 2:
                row += f"  {times[0] / times[1]:>10.2f}x"
            print(row)
    finally:
        backend.set_backend(before)


if __name__ == "__main__":
    main()
