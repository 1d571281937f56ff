"""Placement hot loops: half-perimeter wirelength and the annealing sweep.

Each kernel has a compiled form (``anneal``/``hpwl``, numba when enabled) and
an interpreted twin (``anneal.py_func``).  ``hpwl_numpy`` is an independent
vectorised implementation used as a cross-check.
"""

import math

import numpy as np

from ._accel import njit


@njit
def net_hpwl(site_of, cols, net_ptr, net_cells, net):
    rmin = cmin = 1 << 30
    rmax = cmax = -1
    for k in range(net_ptr[net], net_ptr[net + 1]):
        s = site_of[net_cells[k]]
        r = s // cols
        c = s % cols
        if r < rmin:
            rmin = r
        if r > rmax:
            rmax = r
        if c < cmin:
            cmin = c
        if c > cmax:
            cmax = c
    return (rmax - rmin) + (cmax - cmin)


@njit
def hpwl(site_of, cols, net_ptr, net_cells):
    total = 0
    for net in range(net_ptr.shape[0] - 1):
        total += net_hpwl(site_of, cols, net_ptr, net_cells, net)
    return total


def hpwl_numpy(site_of, cols, net_ptr, net_cells):
    """Vectorised total wirelength; no Python loop over nets."""
    if net_ptr.shape[0] < 2 or net_cells.shape[0] == 0:
        return 0
    sites = site_of[net_cells]
    rows_, cols_ = sites // cols, sites % cols
    starts = net_ptr[:-1]
    span_r = np.maximum.reduceat(rows_, starts) - np.minimum.reduceat(rows_, starts)
    span_c = np.maximum.reduceat(cols_, starts) - np.minimum.reduceat(cols_, starts)
    return int(span_r.sum() + span_c.sum())


@njit
def anneal(site_of, owner, cols, net_ptr, net_cells, cell_ptr, cell_nets, move_cell, move_site, rand_u, temps):
    """Run the pre-drawn move sequence; mutates ``site_of``/``owner``, returns final cost.

    Move ``m`` relocates cell ``move_cell[m]`` to site ``move_site[m]``,
    swapping with the occupant if there is one.  A worsening move of
    ``delta`` is accepted when ``rand_u[m] < exp(-delta / temps[m])``.
    """
    n_nets = net_ptr.shape[0] - 1
    stamp = np.zeros(n_nets, dtype=np.int64)
    touched = np.zeros(n_nets, dtype=np.int64)
    cost = hpwl(site_of, cols, net_ptr, net_cells)
    for m in range(move_cell.shape[0]):
        a = move_cell[m]
        s_new = move_site[m]
        s_old = site_of[a]
        if s_new == s_old:
            continue
        b = owner[s_new]
        nt = 0
        for k in range(cell_ptr[a], cell_ptr[a + 1]):
            net = cell_nets[k]
            if stamp[net] != m + 1:
                stamp[net] = m + 1
                touched[nt] = net
                nt += 1
        if b >= 0:
            for k in range(cell_ptr[b], cell_ptr[b + 1]):
                net = cell_nets[k]
                if stamp[net] != m + 1:
                    stamp[net] = m + 1
                    touched[nt] = net
                    nt += 1
        before = 0
        for i in range(nt):
            before += net_hpwl(site_of, cols, net_ptr, net_cells, touched[i])
        site_of[a] = s_new
        owner[s_new] = a
        owner[s_old] = b
        if b >= 0:
            site_of[b] = s_old
        after = 0
        for i in range(nt):
            after += net_hpwl(site_of, cols, net_ptr, net_cells, touched[i])
        delta = after - before
        if delta <= 0 or rand_u[m] < math.exp(-delta / temps[m]):
            cost += delta
        else:
            site_of[a] = s_old
            owner[s_old] = a
            owner[s_new] = b
            if b >= 0:
                site_of[b] = s_new
    return cost
