"""Random placement problems shared by the kernel tests."""

import numpy as np


def csr(lists):
    ptr = np.zeros(len(lists) + 1, dtype=np.int64)
    for i, xs in enumerate(lists):
        ptr[i + 1] = ptr[i] + len(xs)
    return ptr, np.array([x for xs in lists for x in xs], dtype=np.int64)


def problem(cells, grid, n_nets, seed):
    rng = np.random.default_rng(seed)
    nets = []
    for _ in range(n_nets):
        k = int(rng.integers(2, 5))
        nets.append(sorted(set(rng.integers(0, cells, size=k).tolist())))
    nets = [n for n in nets if len(n) > 1] or [[0, 1]]
    per_cell = [[] for _ in range(cells)]
    for i, cs in enumerate(nets):
        for c in cs:
            per_cell[c].append(i)
    net_ptr, net_cells = csr(nets)
    cell_ptr, cell_nets = csr(per_cell)
    site_of = rng.permutation(grid * grid)[:cells].astype(np.int64)
    owner = np.full(grid * grid, -1, dtype=np.int64)
    owner[site_of] = np.arange(cells)
    return site_of, owner, nets, net_ptr, net_cells, cell_ptr, cell_nets
