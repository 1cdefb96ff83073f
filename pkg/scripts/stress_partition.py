"""Time the resampling partition on large hosts.

Random regular hosts are used up to --max-pairing-n; beyond that a random
circulant keeps memory and generation time flat.

    python scripts/stress_partition.py --n 4001 --d 2000 --c 0.925 --gamma 0.025 --seeds 3
"""

import argparse
import sys
import time

from cardreduce.graph import gen_random_regular
from cardreduce.partition import NonConvergence, circulant_csr, find_partition_csr, verify_partition_csr


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4001)
    ap.add_argument("--d", type=int, default=2000)
    ap.add_argument("--c", type=float, default=0.925)
    ap.add_argument("--gamma", type=float, default=0.025)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--max-rounds", type=int, default=1_000_000)
    ap.add_argument("--max-pairing-n", type=int, default=2000)
    a = ap.parse_args()
    failures = 0
    for seed in range(a.seeds):
        start = time.perf_counter()
        if a.n <= a.max_pairing_n:
            indptr, indices = gen_random_regular(a.n, a.d, seed).csr()
        else:
            indptr, indices = circulant_csr(a.n, a.d, seed)
        built = time.perf_counter() - start
        try:
            p = find_partition_csr(indptr, indices, a.d, a.c, a.gamma, seed=seed,
                                   max_rounds=a.max_rounds)
        except NonConvergence as exc:
            failures += 1
            print(f"seed={seed} FAIL {exc}")
            continue
        ok = verify_partition_csr(indptr, indices, a.d, p)
        print(f"seed={seed} build={built:.2f}s solve={time.perf_counter() - start - built:.2f}s "
              f"|A|={len(p.A)} resamples={p.iterations} restarts={p.restarts} verified={ok}",
              flush=True)
        failures += not ok
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
