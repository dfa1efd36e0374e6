"""Stochastic simulation of the zero range dynamics.

Continuous time: Gillespie sampling of the ring process whose rates come
from the local generator (rates depend on the departure site only, so the
per-occupancy tables are memoized exactly once and converted to float64 at
the boundary).  Discrete time: the mixed-boundary chain is sampled site by
site along the auxiliary line, which realizes the open-boundary transfer
matrix exactly because the right end is free.
"""

from __future__ import annotations

import numpy as np

from . import stoch, transfer
from .qkit import rat, weight


class RngStream:
    """Deterministic per-trajectory random stream."""

    def __init__(self, seed):
        self.seed = int(seed)
        self._gen = np.random.default_rng(self.seed)

    def exponential(self, rate):
        return self._gen.exponential(1.0 / rate)

    def choice(self, weights):
        total = sum(weights)
        u = self._gen.random() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                return i
        return len(weights) - 1


def site_events(alpha, p: transfer.HamiltonianParams, direction="right"):
    """(gamma, rate) pairs for content leaving a site of occupancy alpha.

    direction right uses the outflow rates of h_r, left the inflow rates of
    h_l read as departures toward the left neighbor."""
    events = []
    for gamma in stoch._down_set(alpha):
        if weight(gamma) == 0:
            continue
        if direction == "right":
            r = transfer._out_rate(p, alpha, gamma)
        elif direction == "left":
            r = transfer._in_rate(p, alpha, gamma)
        else:
            raise ValueError(f"unknown direction {direction!r}")
        if r:
            events.append((gamma, r))
    return events


def rate_table(config, p: transfer.HamiltonianParams, direction="right"):
    """All (site, gamma, rate) events of the current configuration."""
    out = []
    for i, alpha in enumerate(config):
        for gamma, r in site_events(alpha, p, direction):
            out.append((i, gamma, float(r)))
    return out


def gillespie_run(initial, p: transfer.HamiltonianParams, t_max, rng,
                  direction="right"):
    """Continuous-time trajectory on the periodic ring.

    Returns a list of (time, configuration) with the initial state first;
    the last holding interval is clipped at t_max."""
    L = len(initial)
    state = [tuple(s) for s in initial]
    step = 1 if direction == "right" else -1
    tables = {}

    def events(alpha):
        if alpha not in tables:
            tables[alpha] = [(g, float(r))
                             for g, r in site_events(alpha, p, direction)]
        return tables[alpha]

    traj = [(0.0, tuple(state))]
    t = 0.0
    while True:
        evs = [(i, g, r) for i in range(L) for g, r in events(state[i])]
        total = sum(r for _, _, r in evs)
        if total == 0.0:
            break
        t += rng.exponential(total)
        if t >= t_max:
            break
        i, g, _ = evs[rng.choice([r for _, _, r in evs])]
        j = (i + step) % L
        state[i] = tuple(a - x for a, x in zip(state[i], g))
        state[j] = tuple(a + x for a, x in zip(state[j], g))
        traj.append((t, tuple(state)))
    return traj


def gillespie_histogram(initial, p: transfer.HamiltonianParams, n_events,
                        rng, direction="right"):
    """Holding-time-weighted occupation histogram over a run of exactly
    n_events jumps, accumulated online (no trajectory storage)."""
    L = len(initial)
    state = tuple(tuple(s) for s in initial)
    step = 1 if direction == "right" else -1
    site_tables = {}
    config_tables = {}

    def events_for(cfg):
        if cfg not in config_tables:
            evs = []
            for i in range(L):
                if cfg[i] not in site_tables:
                    site_tables[cfg[i]] = [
                        (g, float(r))
                        for g, r in site_events(cfg[i], p, direction)]
                evs.extend((i, g, r) for g, r in site_tables[cfg[i]])
            config_tables[cfg] = (evs, [r for _, _, r in evs],
                                  sum(r for _, _, r in evs))
        return config_tables[cfg]

    hist = {}
    total_time = 0.0
    for _ in range(int(n_events)):
        evs, ws, total = events_for(state)
        if total == 0.0:
            break
        dt = rng.exponential(total)
        hist[state] = hist.get(state, 0.0) + dt
        total_time += dt
        i, g, _ = evs[rng.choice(ws)]
        j = (i + step) % L
        new = list(state)
        new[i] = tuple(a - x for a, x in zip(state[i], g))
        new[j] = tuple(a + x for a, x in zip(state[j], g))
        state = tuple(new)
    return {cfg: w / total_time for cfg, w in hist.items()}


def occupation_histogram(traj, t_max):
    """Holding-time-weighted empirical distribution of a trajectory."""
    hist = {}
    for idx, (t, cfg) in enumerate(traj):
        t_next = traj[idx + 1][0] if idx + 1 < len(traj) else t_max
        hist[cfg] = hist.get(cfg, 0.0) + (t_next - t)
    return {cfg: w / t_max for cfg, w in hist.items()}


def total_variation(emp, exact):
    keys = set(emp) | set(exact)
    return 0.5 * sum(abs(emp.get(s, 0.0) - float(exact.get(s, 0)))
                     for s in keys)


def mixed_discrete_run(initial, lam, mus, q, steps, rng):
    """Discrete-time trajectory of the open chain: particles drift right and
    exit at the free boundary.  Returns the list of configurations after
    each sweep, starting with the initial one."""
    sweep = make_mixed_sampler(lam, mus, q)
    state = tuple(tuple(s) for s in initial)
    traj = [state]
    for _ in range(int(steps)):
        state = sweep(state, rng)
        traj.append(state)
    return traj


def make_mixed_sampler(lam, mus, q):
    """Returns sweep(config, rng) -> config performing one step of the
    open-boundary discrete-time chain."""
    lam, q = rat(lam), rat(q)
    mus = [rat(m) for m in mus]
    cols = {}

    def column(i, g, b):
        key = (i, g, b)
        if key not in cols:
            col = stoch.script_S_column(g, b, q, lam, mus[i])
            outs = list(col.items())
            cols[key] = (outs, [float(v) for _, v in outs])
        return cols[key]

    def sweep(config, rng):
        g = (0,) * len(config[0])
        out = []
        for i, beta in enumerate(config):
            outs, ws = column(i, g, beta)
            (g, alpha), _ = outs[rng.choice(ws)]
            out.append(alpha)
        return tuple(out)

    return sweep
