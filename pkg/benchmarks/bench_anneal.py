"""Compiled vs interpreted annealing kernel on a synthetic placement problem.

Each mode runs in its own interpreter because the switch is read at import
time.  Both must end with the same cost, since they consume the same move
stream.

    python3 benchmarks/bench_anneal.py [--cells 60] [--grid 10] [--temps 40]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def problem(cells, grid, nets, seed=0):
    rng = np.random.default_rng(seed)
    lists = []
    for _ in range(nets):
        k = int(rng.integers(2, 5))
        lists.append(sorted(set(rng.integers(0, cells, size=k).tolist())))
    per_cell = [[] for _ in range(cells)]
    for i, cs in enumerate(lists):
        for c in cs:
            per_cell[c].append(i)

    def csr(ls):
        ptr = np.zeros(len(ls) + 1, dtype=np.int64)
        for i, xs in enumerate(ls):
            ptr[i + 1] = ptr[i] + len(xs)
        return ptr, np.array([x for xs in ls for x in xs], dtype=np.int64)

    net_ptr, net_cells = csr(lists)
    cell_ptr, cell_nets = csr(per_cell)
    site_of = rng.permutation(grid * grid)[:cells].astype(np.int64)
    owner = np.full(grid * grid, -1, dtype=np.int64)
    owner[site_of] = np.arange(cells)
    return site_of, owner, net_ptr, net_cells, cell_ptr, cell_nets


def child(args):
    from afpga import kernels
    from afpga._accel import USE_NUMBA

    site_of, owner, net_ptr, net_cells, cell_ptr, cell_nets = problem(args.cells, args.grid, 2 * args.cells)
    moves = max(10, int(10 * args.cells**1.33))
    temps = np.repeat(2.0 * 0.9 ** np.arange(args.temps), moves)
    rng = np.random.default_rng(1)
    mc = rng.integers(0, args.cells, size=temps.size, dtype=np.int64)
    ms = rng.integers(0, args.grid * args.grid, size=temps.size, dtype=np.int64)
    u = rng.random(temps.size)

    call = lambda s, o: kernels.anneal(s, o, args.grid, net_ptr, net_cells, cell_ptr, cell_nets, mc, ms, u, temps)
    if USE_NUMBA:
        call(site_of.copy(), owner.copy())  # compile / load cache outside the timing
    t0 = time.perf_counter()
    cost = call(site_of, owner)
    dt = time.perf_counter() - t0
    print(json.dumps({"numba": USE_NUMBA, "seconds": dt, "cost": int(cost), "moves": int(temps.size)}))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cells", type=int, default=60)
    ap.add_argument("--grid", type=int, default=10)
    ap.add_argument("--temps", type=int, default=40)
    ap.add_argument("--child", action="store_true")
    args = ap.parse_args()
    if args.child:
        child(args)
        return

    results = {}
    for label, flag in (("numba", "0"), ("python", "1")):
        env = dict(os.environ, AFPGA_DISABLE_NUMBA=flag)
        cmd = [sys.executable, __file__, "--child", "--cells", str(args.cells),
               "--grid", str(args.grid), "--temps", str(args.temps)]
        out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True).stdout
        results[label] = json.loads(out.strip().splitlines()[-1])

    nb, py = results["numba"], results["python"]
    print(f"moves            {nb['moves']}")
    print(f"numba   {nb['seconds']:9.4f} s   final cost {nb['cost']}")
    print(f"python  {py['seconds']:9.4f} s   final cost {py['cost']}")
    print(f"speedup {py['seconds'] / max(nb['seconds'], 1e-9):9.1f}x")
    if nb["cost"] != py["cost"]:
        sys.exit("compiled and interpreted kernels disagree")


if __name__ == "__main__":
    main()
