"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/compare_backends.py [--samples N]

Covers the three kernel entry points on representative workloads: a dense
n=4 table structure (quadrature-style batches), a mid-size random graph, and
a small-world graph at experiment scale.
"""

import argparse
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from diffauction import structures as st                      # noqa: E402
from diffauction._kernels import available_backends           # noqa: E402
from diffauction.engine import BatchAuction                   # noqa: E402
from diffauction.mechanisms import parse_mechanism_id         # noqa: E402
from diffauction.network import generate_small_world          # noqa: E402
from diffauction.valuation import UniformDistribution         # noqa: E402

U01 = UniformDistribution(0.0, 1.0)


def workloads(samples):
    rng = np.random.default_rng(0)
    dense4 = st.TABLE1_N4["n4-13"]
    random12 = st.random_connected_structure(12, rng)
    sw100 = generate_small_world(100, 2, 0.5, seed=7)
    for label, structure, rows in (
        ("table n=4", dense4, samples),
        ("random n=12", random12, samples // 2),
        ("small-world n=100", sw100, samples // 10),
    ):
        bids = np.random.default_rng(1).random((rows, structure.n))
        yield label, structure, bids


def main(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=400_000)
    args = parser.parse_args(argv)

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    mechs = ["myerson-all", "cwm", "cwm-srp2", "kpwm:2"]
    header = f"{'workload':>20s} {'mechanism':>12s}" + "".join(
        f" {name + ' M/s':>12s}" for name in backends) + f" {'speedup':>8s}"
    print(header)
    for label, structure, bids in workloads(args.samples):
        pattern = structure.truthful_report({i: 0.0 for i in structure.buyers})
        for mech in mechs:
            if mech.startswith("kpwm") and structure.n > 20:
                continue
            spec = parse_mechanism_id(mech)
            rates = {}
            reference = None
            for name, module in backends.items():
                ba = BatchAuction(pattern, U01, spec, backend=module)
                ba.run(bids[:1000])     # warm up / compile candidate tables once
                t0 = time.perf_counter()
                winners, pays = ba.run(bids)
                rates[name] = len(bids) / (time.perf_counter() - t0) / 1e6
                if reference is None:
                    reference = (winners, pays)
                else:
                    assert np.array_equal(reference[0], winners), (label, mech)
            speedup = (rates.get("cython", 0.0) / rates["python"]
                       if "cython" in rates else float("nan"))
            cells = "".join(f" {rates[name]:12.2f}" for name in backends)
            print(f"{label:>20s} {mech:>12s}{cells} {speedup:7.1f}x")


if __name__ == "__main__":
    main()
