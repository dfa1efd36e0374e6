"""Command line front end.

Subcommands build R matrices, run identity verification suites, assemble
transfer matrices, solve for stationary states exactly, evaluate the
matrix-product traces, and simulate the dynamics.  All exact inputs are
'p/q' strings; floats are rejected with an error naming the offending
field.  A flat key=value config file may supply any flag, with command
line flags taking precedence.  Outputs are deterministic: the same config
and seed produce byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from gmpy2 import mpq

from . import dyn, mpf, report, stoch, tetra, transfer, uqa
from .qkit import rat
from .stationary import solve_stationary, stationary_state
from .transfer import ChainSpec, HamiltonianParams


class CliError(Exception):
    """User-input error; rendered as 'error: --field: message'."""

    def __init__(self, fieldname, msg):
        super().__init__(f"--{fieldname}: {msg}")
        self.field = fieldname


# ---------------------------------------------------------------------------
# typed field conversion (shared by flags and config-file values)
# ---------------------------------------------------------------------------

def _to_rat(name, s):
    if s is None:
        return None
    s = str(s).strip()
    if any(ch in s for ch in ".eE") and not s.lstrip("+-").isdigit():
        raise CliError(name, f"expected an exact rational like '3/7', got {s!r}"
                             " (floats are not accepted in exact mode)")
    try:
        return rat(s)
    except (ValueError, TypeError) as exc:
        raise CliError(name, str(exc)) from exc


def _to_rat_list(name, s):
    if s is None:
        return None
    return tuple(_to_rat(name, part) for part in str(s).split(","))


def _to_int(name, s):
    if s is None:
        return None
    try:
        return int(str(s), 10)
    except ValueError as exc:
        raise CliError(name, f"expected an integer, got {s!r}") from exc


def _to_int_list(name, s):
    if s is None:
        return None
    return tuple(_to_int(name, part) for part in str(s).split(","))


def _to_state(name, s):
    """Parse a chain state like '1,0;0,1' into ((1,0),(0,1))."""
    if s is None:
        return None
    return tuple(_to_int_list(name, site) for site in str(s).split(";"))


_CONVERTERS = {
    "q": _to_rat, "z": _to_rat, "lam": _to_rat, "mu": _to_rat_list,
    "w": _to_rat_list,
    "eps": _to_int_list, "sector": _to_int_list, "caps": _to_int_list,
    "bound": _to_int_list, "initial": _to_state,
    "l": _to_int, "m": _to_int, "n": _to_int, "L": _to_int,
    "cutoff": _to_int, "events": _to_int, "seed": _to_int,
    "trials": _to_int, "species": _to_int, "sign": _to_int,
}


def load_config(path):
    """Flat key=value file; '#' starts a comment, blank lines ignored."""
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError("config", f"{path}:{lineno}: expected key=value,"
                                         f" got {line!r}")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


@dataclass
class RunConfig:
    """Fully resolved invocation: command plus typed option values."""
    command: str
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def resolve(ns: argparse.Namespace) -> RunConfig:
    """Merge config-file defaults under the flags and convert all fields."""
    opts = dict(vars(ns))
    command = opts.pop("command")
    cfg_path = opts.pop("config", None)
    if cfg_path:
        for key, val in load_config(cfg_path).items():
            if key in opts and opts[key] is None:
                opts[key] = val
    for key, val in list(opts.items()):
        conv = _CONVERTERS.get(key)
        if conv is not None and isinstance(val, str):
            opts[key] = conv(key, val)
    return RunConfig(command, opts)


def threads():
    raw = os.environ.get("ZRPLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliError("ZRPLAB_THREADS", f"expected an integer, got {raw!r}")
    if n < 1:
        raise CliError("ZRPLAB_THREADS", "must be >= 1")
    return n


def _require(cfg, *names):
    for name in names:
        if cfg.options.get(name) is None:
            raise CliError(name, "required (flag or config file)")


# ---------------------------------------------------------------------------
# rmat
# ---------------------------------------------------------------------------

def run_rmat(cfg: RunConfig) -> int:
    _require(cfg, "eps", "l", "m", "q")
    form = cfg.options.get("form") or "trace"
    if form == "trace":
        _require(cfg, "z")
        op = tetra.build_R(cfg.eps, cfg.l, cfg.m, cfg.z, cfg.q)
    elif form == "factorized":
        op = stoch.factorized_R_eps(cfg.eps, cfg.l, cfg.m, cfg.q)
    elif form == "gauged":
        _require(cfg, "z")
        if any(cfg.eps):
            raise CliError("form", "the stochastic gauge needs eps all zero")
        op = stoch.s_gauge(cfg.l, cfg.m, cfg.z, cfg.q, len(cfg.eps) - 1)
    else:
        raise CliError("form", f"unknown form {form!r}")
    meta = {"kind": "rmat", "form": form, "eps": list(cfg.eps),
            "l": cfg.l, "m": cfg.m, "q": report.rational_str(cfg.q)}
    if cfg.options.get("z") is not None:
        meta["z"] = report.rational_str(cfg.z)
    if cfg.options.get("out"):
        report.write_matrix(cfg.out, op, meta)
        print(f"wrote {op.nnz()} entries to {cfg.out}")
    else:
        for out, inp, v in sorted(op.items(), key=repr):
            print(f"{inp!r} -> {out!r}: {v}")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

PROFILES = {
    "quick": {"ybe_weight": (1, 1), "ybe_sizes": (1, 1, 2), "fac_top": 2,
              "tetra_cutoff": 1, "uqa_l": (1,), "zf_N": 8, "zf_n3": False},
    "desk": {"ybe_weight": (2, 2), "ybe_sizes": (2, 2, 2), "fac_top": 3,
             "tetra_cutoff": 4, "uqa_l": (1, 2), "zf_N": 10, "zf_n3": True},
}

EPS_GRID = ((0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1))


def _check_ybe(prof, q, seed, trials):
    reps = [stoch.verify_ybe("S", 2, q, sizes=prof["ybe_sizes"],
                             trials=trials, seed=seed),
            stoch.verify_ybe("sS", 2, q, max_weight=prof["ybe_weight"],
                             trials=trials, seed=seed + 1)]
    for i, eps in enumerate(EPS_GRID):
        sz = tuple(min(s, 1) if all(eps) else s for s in prof["ybe_sizes"])
        reps.append(stoch.verify_ybe("Reps", len(eps) - 1, q, sizes=sz,
                                     eps=eps, trials=trials, seed=seed + 2 + i))
    return reps


def _check_stu(prof, q, seed, trials):
    lam, mu = mpq(2, 3), mpq(1, 3)
    reps = [stoch.verify_stu(stoch.script_S(lam, mu, q, 2, prof["ybe_weight"]))]
    rep = dict(stoch.verify_stu(stoch.s_gauge(2, 2, mpq(3, 7), q, 1)))
    rep["check"] = "sum-to-unity-gauged"
    reps.append(rep)
    # hard-core slot: the doubly occupied column loses exactly the known mass
    op = stoch.script_S_eps((1,), lam, mu, q, (2,))
    deficit = (lam - mu) / (lam * (1 - mu))
    ok = op.column_sum(((1,), (1,))) == 1 - deficit
    reps.append({"check": "restricted-deficit", "pass": ok,
                 "deficit": report.rational_str(deficit), "witness": None})
    return reps


def _check_fac(prof, q, seed, trials):
    top = prof["fac_top"]
    reps = []
    ok, wit = True, None
    for n in (1, 2):
        for l in range(1, top + 1):
            for m in range(l, top + 1):
                if stoch.s_gauge(l, m, q ** (l - m), q, n) != \
                        stoch.factorized_S(l, m, q, n):
                    ok, wit = False, repr((n, l, m))
    reps.append({"check": "factorization-gauged", "pass": ok, "witness": wit})
    ok, wit = True, None
    for np1 in (2, 3):
        for kappa in range(np1 + 1):
            eps = (1,) * kappa + (0,) * (np1 - kappa)
            lim = min(top, kappa) if kappa == np1 else top
            for l in range(1, lim + 1):
                for m in range(l, lim + 1):
                    F = stoch.factorized_R_eps(eps, l, m, q)
                    if tetra.build_R(eps, l, m, q ** (l - m), q) != F:
                        ok, wit = False, repr((eps, l, m))
    reps.append({"check": "factorization-steps", "pass": ok, "witness": wit})
    return reps


def _check_tetra(prof, q, seed, trials):
    return [tetra.check_tetrahedron(e, prof["tetra_cutoff"], q)
            for e in (0, 1)]


def _check_uqa(prof, q, seed, trials):
    reps = []
    for eps in EPS_GRID:
        for l in prof["uqa_l"]:
            if all(eps) and l > len(eps):
                continue
            ctx = uqa.RepContext(eps, l, mpq(3, 5), q)
            rep = dict(uqa.check_relations(ctx))
            rep.setdefault("check", "relations")
            rep["eps"], rep["l"] = list(eps), l
            reps.append(rep)
    for eps in ((0, 0), (1, 0)):
        R = tetra.build_R(eps, 1, 2, mpq(3, 5), q)
        reps.append(uqa.check_intertwiner(
            R, uqa.RepContext(eps, 1, mpq(3, 5), q),
            uqa.RepContext(eps, 2, mpq(1), q)))
    return reps


def _check_zf(prof, q, seed, trials):
    N = prof["zf_N"]
    reps = [mpf.zf_check(2, mpq(4, 7), mpq(2, 5), q, N, 2),
            mpf.hat_check(2, mpq(2, 5), q, N, 2)]
    if prof["zf_n3"]:
        reps.append(mpf.zf_check(3, mpq(4, 7), mpq(2, 5), q, 6, 2))
    return reps


CHECKS = {"ybe": _check_ybe, "stu": _check_stu, "fac": _check_fac,
          "tetra": _check_tetra, "uqa": _check_uqa, "zf": _check_zf}


def run_verify(cfg: RunConfig) -> int:
    suite = cfg.suite
    names = list(CHECKS) if suite == "all" else [suite]
    prof = PROFILES[cfg.options.get("profile") or "quick"]
    q = cfg.options.get("q") or mpq(2, 7)
    seed = cfg.options.get("seed") or 0
    trials = cfg.options.get("trials") or 3
    nthreads = threads()
    if nthreads > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            futures = [(nm, pool.submit(CHECKS[nm], prof, q, seed, trials))
                       for nm in names]
            results = [(nm, fut.result()) for nm, fut in futures]
    else:
        results = [(nm, CHECKS[nm](prof, q, seed, trials)) for nm in names]
    all_pass = True
    flat = []
    for nm, reps in results:
        for rep in reps:
            ok = rep["pass"]
            all_pass &= ok
            label = rep.get("check", nm)
            extra = [str(rep[k]) for k in ("family", "eps", "l", "m")
                     if rep.get(k) is not None]
            tag = f" [{' '.join(extra)}]" if extra else ""
            print(f"{'PASS' if ok else 'FAIL'}  {nm}:{label}{tag}")
            if not ok and rep.get("witness"):
                print(f"      witness: {rep['witness']}")
            flat.append({"suite": nm, **{k: _plain(v) for k, v in rep.items()}})
    if cfg.options.get("out"):
        report.write_json(cfg.out, {"kind": "verify", "pass": all_pass,
                                    "profile": cfg.options.get("profile")
                                    or "quick", "reports": flat})
    print("all checks passed" if all_pass else "FAILURES present")
    return 0 if all_pass else 1


def _plain(v):
    if isinstance(v, mpq):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return v


# ---------------------------------------------------------------------------
# transfer
# ---------------------------------------------------------------------------

def run_transfer(cfg: RunConfig) -> int:
    _require(cfg, "family", "n", "q", "mu")
    spec = ChainSpec(cfg.n, cfg.mu, cfg.q, cfg.options.get("caps"))
    fam = cfg.family
    if fam == "periodic-T":
        _require(cfg, "l", "z", "sector")
        op = transfer.periodic_T(cfg.l, cfg.z, spec, cfg.sector)
    elif fam == "periodic-script":
        _require(cfg, "lam", "sector")
        op = transfer.periodic_scriptT(cfg.lam, spec, cfg.sector)
    elif fam == "mixed-T":
        _require(cfg, "l", "z", "species")
        op = transfer.mixed_T(cfg.species, cfg.l, cfg.z, spec)
    elif fam == "mixed-script":
        _require(cfg, "lam", "bound")
        op = transfer.mixed_scriptT(cfg.lam, spec, cfg.bound)
    else:
        raise CliError("family", f"unknown family {fam!r}")
    code = 0
    if cfg.options.get("gate"):
        gate = transfer.markov_gate(op, cfg.gate)
        print(f"markov gate ({cfg.gate}): "
              f"{'PASS' if gate['pass'] else 'FAIL'}")
        if not gate["pass"]:
            for w in gate["witness"][:3]:
                print(f"  witness: {w}")
            code = 1
    meta = {"kind": "transfer", "family": fam, "n": cfg.n,
            "q": report.rational_str(cfg.q),
            "mu": [report.rational_str(m) for m in cfg.mu]}
    if cfg.options.get("out"):
        report.write_matrix(cfg.out, op, meta)
        print(f"wrote {op.nnz()} entries to {cfg.out}")
    return code


# ---------------------------------------------------------------------------
# stationary
# ---------------------------------------------------------------------------

def run_stationary(cfg: RunConfig) -> int:
    _require(cfg, "n", "q", "mu", "sector")
    spec = ChainSpec(cfg.n, cfg.mu, cfg.q, cfg.options.get("caps"))
    pi = stationary_state(spec, cfg.sector, cfg.options.get("lam"))
    states = sorted(pi)
    rows = [{"state": [list(s) for s in st],
             "label": report.state_label(st),
             "prob": report.rational_str(pi[st])} for st in states]
    for row in rows:
        print(f"{row['label']:>20}  {row['prob']}")
    if cfg.options.get("out"):
        report.write_json(cfg.out, {
            "kind": "stationary", "n": cfg.n,
            "q": report.rational_str(cfg.q),
            "mu": [report.rational_str(m) for m in cfg.mu],
            "sector": list(cfg.sector), "states": rows})
    if cfg.options.get("csv"):
        report.write_histogram_csv(
            cfg.csv, [(repr(st), report.state_label(st), "",
                       report.rational_str(pi[st])) for st in states])
        fig = os.path.splitext(cfg.csv)[0] + ".png"
        report.write_histogram_figure(
            fig, [report.state_label(st) for st in states],
            [float(pi[st]) for st in states])
        print(f"wrote {cfg.csv} and {fig}")
    return 0


# ---------------------------------------------------------------------------
# mpf
# ---------------------------------------------------------------------------

def run_mpf(cfg: RunConfig) -> int:
    _require(cfg, "n", "sector", "q", "mu", "cutoff")
    L = cfg.options.get("L") or len(cfg.mu)
    if L != len(cfg.mu):
        raise CliError("mu", f"expected {L} site parameters, got {len(cfg.mu)}")
    spec = ChainSpec(cfg.n, cfg.mu, cfg.q)
    basis = transfer.enumerate_sector(spec, cfg.sector)
    results = {st: mpf.stationary_mpf(st, cfg.mu, cfg.q, cfg.cutoff)
               for st in basis}
    total = sum(r["value"] for r in results.values())
    total2 = sum(r["value_2N"] for r in results.values())
    gap = max(r["relative_gap"] for r in results.values())
    states = []
    for st in sorted(basis):
        r = results[st]
        states.append({"state": [list(s) for s in st],
                       "label": report.state_label(st),
                       "value": float(r["value"] / total),
                       "value_doubled_cutoff": float(r["value_2N"] / total2),
                       "relative_gap": r["relative_gap"]})
        print(f"{states[-1]['label']:>20}  {states[-1]['value']:.12g}"
              f"  (gap {r['relative_gap']:.3e})")
    payload = {"kind": "mpf", "cutoff": cfg.cutoff,
               "doubled_cutoff": 2 * cfg.cutoff,
               "q": report.rational_str(cfg.q),
               "mu": [report.rational_str(m) for m in cfg.mu],
               "sector": list(cfg.sector), "relative_gap": gap,
               "states": states}
    code = 0
    if cfg.options.get("compare_exact"):
        pi = stationary_state(spec, cfg.sector)
        dev = max(abs(float(s["value"]) - float(pi[tuple(
            tuple(x) for x in s["state"])])) / float(pi[tuple(
                tuple(x) for x in s["state"])]) for s in states)
        payload["max_relative_deviation"] = dev
        print(f"max relative deviation from exact solver: {dev:.3e}")
        code = 0 if dev < 1e-9 else 1
    if cfg.options.get("out"):
        report.write_json(cfg.out, payload)
        print(f"wrote {cfg.out}")
    return code


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def run_simulate(cfg: RunConfig) -> int:
    _require(cfg, "kind", "n", "q", "mu", "initial", "events", "seed")
    rng = dyn.RngStream(cfg.seed)
    if cfg.kind in ("r", "l"):
        if len(cfg.mu) != 1:
            raise CliError("mu", "the ring dynamics takes a single value")
        p = HamiltonianParams(cfg.n, cfg.q, cfg.mu[0],
                              cfg.options.get("sign") or 1)
        direction = "right" if cfg.kind == "r" else "left"
        hist = dyn.gillespie_histogram(cfg.initial, p, cfg.events, rng,
                                       direction)
        spec = ChainSpec(cfg.n, cfg.mu * len(cfg.initial), cfg.q)
        sector = tuple(sum(c) for c in zip(*cfg.initial))
        exact = stationary_state(spec, sector)
        tv = dyn.total_variation(hist, exact)
        print(f"total variation vs exact stationary state: {tv:.5f}")
    elif cfg.kind == "mixed":
        _require(cfg, "lam")
        sweep = dyn.make_mixed_sampler(cfg.lam, cfg.mu, cfg.q)
        counts = {}
        for _ in range(cfg.events):
            out = sweep(cfg.initial, rng)
            counts[out] = counts.get(out, 0) + 1
        hist = {st: c / cfg.events for st, c in counts.items()}
        spec = ChainSpec(cfg.n, cfg.mu, cfg.q)
        bound = tuple(max(s[i] for s in cfg.initial) * len(cfg.initial)
                      for i in range(cfg.n))
        exact = dict(transfer.mixed_scriptT(cfg.lam, spec, bound)
                     .column(cfg.initial))
        tv = dyn.total_variation(hist, exact)
        print(f"total variation vs exact one-step column: {tv:.5f}")
    else:
        raise CliError("kind", f"unknown kind {cfg.kind!r}")
    if cfg.options.get("hist"):
        states = sorted(set(hist) | set(exact))
        rows = [(repr(st), report.state_label(st),
                 repr(hist.get(st, 0.0)), report.rational_str(exact[st])
                 if st in exact else "") for st in states]
        report.write_histogram_csv(cfg.hist, rows)
        fig = os.path.splitext(cfg.hist)[0] + ".png"
        report.write_histogram_figure(
            fig, [report.state_label(st) for st in states],
            [hist.get(st, 0.0) for st in states],
            [float(exact[st]) if st in exact else 0.0 for st in states])
        print(f"wrote {cfg.hist} and {fig}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="zrplab",
        description="exact tools for the multispecies zero range chain")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key=value file of defaults")
        sp.add_argument("--q", help="deformation parameter, 'p/q'")

    sp = sub.add_parser("rmat", help="build an R matrix")
    common(sp)
    for f in ("eps", "l", "m", "z", "out", "form"):
        sp.add_argument(f"--{f}")

    sp = sub.add_parser("verify", help="run identity verification suites")
    common(sp)
    sp.add_argument("suite", choices=[*CHECKS, "all"])
    sp.add_argument("--profile", choices=list(PROFILES))
    for f in ("seed", "trials", "out"):
        sp.add_argument(f"--{f}")

    sp = sub.add_parser("transfer", help="assemble a transfer matrix")
    common(sp)
    for f in ("family", "n", "mu", "caps", "sector", "l", "z", "lam",
              "species", "bound", "gate", "out"):
        sp.add_argument(f"--{f}")

    sp = sub.add_parser("stationary", help="solve for the stationary state")
    common(sp)
    for f in ("n", "mu", "caps", "sector", "lam", "out", "csv"):
        sp.add_argument(f"--{f}")

    sp = sub.add_parser("mpf", help="matrix-product trace evaluation")
    common(sp)
    sp.add_argument("mode", choices=["prob"])
    for f in ("L", "n", "sector", "mu", "cutoff", "out"):
        sp.add_argument(f"--{f}")
    sp.add_argument("--compare-exact", action="store_true",
                    dest="compare_exact")

    sp = sub.add_parser("simulate", help="sample the stochastic dynamics")
    common(sp)
    for f in ("kind", "n", "mu", "lam", "sign", "initial", "events",
              "seed", "hist"):
        sp.add_argument(f"--{f}")
    return p


RUNNERS = {"rmat": run_rmat, "verify": run_verify, "transfer": run_transfer,
           "stationary": run_stationary, "mpf": run_mpf,
           "simulate": run_simulate}


def run(config: RunConfig) -> int:
    return RUNNERS[config.command](config)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return run(resolve(ns))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
