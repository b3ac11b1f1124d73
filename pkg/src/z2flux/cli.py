"""Command-line entry point: one subcommand per verification, CSV/JSON output, PASS/FAIL lines."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, bloch, gibbs, lattice, rpchess, spectral, transport


class UsageError(ValueError):
    pass


@dataclass
class Outcome:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)
    header: str = ""
    rows: list[str] = field(default_factory=list)
    payload: dict | None = None

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))


def config_hash(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "func")}
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:12]


def _parity_list(args) -> list[str]:
    return ["even", "odd"] if args.parity is None else [args.parity]


def _first(values: Sequence[float] | None, default: float) -> float:
    return float(values[0]) if values else default


def _require_mult4(L: int) -> None:
    if L < 4 or L % 4:
        raise UsageError(f"--L must be a positive multiple of 4, got {L}")


def cmd_optimum(args) -> Outcome:
    if args.L != 4:
        raise UsageError("exhaustive enumeration needs --L 4")
    out = Outcome(header="sector_id,a,b,k_zero_flux,log_z_plus,z_minus_sign,log_abs_z_minus,slack,passed")
    t = _first(args.t, 1.0)
    for beta in args.beta or [1.0, 2.0]:
        for parity in _parity_list(args):
            res = rpchess.brute_force_optimum(4, beta, t, parity)
            table = rpchess.enumerate_sectors(beta, t)
            if t == 0:
                out.check(f"optimum beta={beta:g} {parity}", res.tie, "all sectors tie at t=0")
                continue
            all_pi = bool(np.all(res.sector.phi == -1))
            out.check(
                f"optimum beta={beta:g} {parity}",
                all_pi,
                f"maximiser all-pi={all_pi} loops=({res.sector.a},{res.sector.b}) log_z={res.pair.log_z(parity):.10g}",
            )
            scores = table.log_z(parity)
            slack = scores[rpchess.sector_id(res.sector)] - scores
            for sid in res.ranking[: args.samples]:
                a, b = rpchess.LOOPS[sid % 4]
                out.rows.append(
                    f"{sid},{a},{b},{table.n_zero_flux[sid]},{table.log_z_plus[sid]:.12g},"
                    f"{table.z_minus_sign[sid]},{table.log_abs_z_minus[sid]:.12g},{slack[sid]:.12g},True"
                )
    return out


def cmd_rp_check(args) -> Outcome:
    rng = np.random.default_rng(args.seed)
    t = _first(args.t, 1.0)
    betas = args.beta or [0.5, 1.0, 2.0]
    out = Outcome(header="sample,orientation,position,beta,parity,lhs,rhs,slack,passed,degenerate")
    n_fail = n_deg = n_total = 0
    for s in range(args.samples):
        cfg = lattice.GaugeConfig.random(args.L, rng)
        for orient in ("vertical", "horizontal"):
            cut = lattice.ReflectionCut(orient, int(rng.integers(args.L)))
            for beta in betas:
                for parity in _parity_list(args):
                    r = rpchess.rp_check(cfg, cut, beta, t, parity)
                    n_total += 1
                    n_deg += r.degenerate
                    n_fail += not r.passed
                    out.rows.append(
                        f"{s},{orient},{cut.position},{beta:g},{parity},{r.lhs:.12g},{r.rhs:.12g},"
                        f"{r.slack:.12g},{r.passed},{r.degenerate}"
                    )
    out.check("reflection positivity", n_fail == 0, f"{n_total} checks, {n_fail} violations, {n_deg} degenerate")
    return out


def _sector_sweep(args, name: str, check: Callable) -> Outcome:
    _require_mult4(args.L)
    rng = np.random.default_rng(args.seed)
    t = _first(args.t, 1.0)
    out = Outcome(header="sample,k_zero_flux,a,b,beta,parity,lhs,rhs,slack,passed,degenerate")
    n_fail = n_total = 0
    for s in range(args.samples):
        sector = lattice.FluxSector.random(args.L, rng)
        for beta in args.beta or [1.0, 4.0]:
            for parity in _parity_list(args):
                r = check(sector, beta, t, parity)
                n_total += 1
                n_fail += not r.passed
                out.rows.append(
                    f"{s},{sector.n_zero_flux},{sector.a},{sector.b},{beta:g},{parity},"
                    f"{r.lhs:.12g},{r.rhs:.12g},{r.slack:.12g},{r.passed},{r.degenerate}"
                )
    out.check(name, n_fail == 0, f"{n_total} checks, {n_fail} violations")
    return out


def cmd_chessboard(args) -> Outcome:
    return _sector_sweep(args, "chessboard estimate", rpchess.chessboard_check)


def cmd_monopole_bound(args) -> Outcome:
    return _sector_sweep(
        args, "monopole bound", lambda s, beta, t, par: rpchess.monopole_bound_check(s, s.a, s.b, beta, t, par)
    )


def cmd_monopole_mass(args) -> Outcome:
    t = _first(args.t, 1.0)
    out = Outcome(header="quantity,value")
    d_inf = bloch.monopole_mass_infinity(t)
    p, e1, e2 = bloch.monopole_mass_terms()
    out.rows += [f"delta_infinity,{d_inf:.12g}", f"pi_root_average,{p:.12g}", f"chess_root_plus,{e1:.12g}", f"chess_root_minus,{e2:.12g}"]
    out.rows.append(f"kappa,{d_inf / t:.12g}")
    out.rows.append(f"t0,{t / d_inf:.12g}")
    out.check("delta_infinity = 0.181 t +- 0.002 t", abs(d_inf / t - 0.181) <= 0.002, f"delta_infinity/t = {d_inf / t:.6f}")
    L = args.L if args.L_given else 64
    _require_mult4(L)
    beta = _first(args.beta, 40.0)
    for parity in _parity_list(args):
        d = bloch.monopole_mass(beta, L, t, parity)
        out.rows.append(f"delta_beta{beta:g}_L{L}_{parity},{d:.12g}")
        out.check(f"finite-size mass {parity} within 0.01 t", abs(d - d_inf) <= 0.01 * t, f"delta={d:.6f}")
    return out


def cmd_pi_phases(args) -> Outcome:
    L, t = args.L, _first(args.t, 1.0)
    if L % 2:
        raise UsageError("--L must be even")
    out = Outcome(header="a,b,beta,ground_energy,log_z_plus,z_minus_sign,log_abs_z_minus,realspace_log_z_plus,realspace_log_abs_z_minus")
    energies = {}
    for beta in args.beta or [1.0]:
        for a, b in bloch.LOOPS:
            pb = bloch.pi_partition(L, a, b, beta, t)
            cfg = lattice.representative(lattice.FluxSector.uniform(L, -1, a, b))
            pr = spectral.partition_pair(spectral.eigensolve(spectral.hopping_matrix(cfg, t), t), beta)
            e0 = bloch.pi_ground_energy(L, a, b, t)
            energies[(a, b)] = e0
            out.rows.append(
                f"{a},{b},{beta:g},{e0:.12g},{pb.log_z_plus:.12g},{pb.z_minus_sign},{pb.log_abs_z_minus:.12g},"
                f"{pr.log_z_plus:.12g},{pr.log_abs_z_minus:.12g}"
            )
            same = abs(pb.log_z_plus - pr.log_z_plus) <= 1e-8 * abs(pr.log_z_plus) and pb.z_minus_sign == pr.z_minus_sign
            if pb.z_minus_sign:
                same = same and abs(pb.log_abs_z_minus - pr.log_abs_z_minus) <= 1e-8 * max(1.0, abs(pr.log_abs_z_minus))
            out.check(f"bloch = real space ({a},{b}) beta={beta:g}", same)
            if L % 4 == 0:
                want = 0 if (a, b) == (1, 1) else 1
                out.check(f"sign Z- ({a},{b}) beta={beta:g}", pb.z_minus_sign == want, f"sign={pb.z_minus_sign}")
    if L % 4 == 0:
        e = energies
        ok = e[(-1, -1)] < e[(1, -1)] and abs(e[(1, -1)] - e[(-1, 1)]) < 1e-9 and e[(-1, 1)] < e[(1, 1)]
        out.check("ground-energy ordering (-1,-1) < (+-1,-+1) < (1,1)", ok)
    return out


def cmd_degeneracy_scaling(args) -> Outcome:
    t = _first(args.t, 1.0)
    sizes = [8, 16, 32, 64, 128, 256, 512]
    gaps = [bloch.degeneracy_gap(L, t) for L in sizes]
    out = Outcome(header="L,gap", rows=[f"{L},{g:.12g}" for L, g in zip(sizes, gaps)])
    mono = all(gaps[i + 1] < gaps[i] for i in range(1, len(gaps) - 1))
    out.check("gap monotone for L >= 16", mono)
    g = dict(zip(sizes, gaps))
    limit = g[64] * (np.log(512) / np.log(64)) * (64 / 512) * 1.5
    out.check("gap(512) within log L / L profile", g[512] <= limit, f"gap(512)={g[512]:.6g} limit={limit:.6g}")
    return out


def cmd_gibbs_sweep(args) -> Outcome:
    if args.L != 4:
        raise UsageError("exact Gibbs sums need --L 4")
    sums = [gibbs.full_partition(beta, t) for beta in args.beta or [1.0, 2.0, 3.0] for t in args.t or [6.0, 8.0, 10.0]]
    out = Outcome()
    out.header, *out.rows = gibbs.sweep_csv(sums).strip().split("\n")
    for s in sums:
        out.check(
            f"free-energy sandwich beta={s.beta:g} t={s.t:g}",
            s.passed,
            f"gap={s.gap:.6g} rhs={s.bound_rhs:.6g} delta={s.delta:.6g}",
        )
    return out


def cmd_ward(args) -> Outcome:
    out = Outcome(header="L,beta,m,diamagnetic,kubo,residual,passed")
    t, q = _first(args.t, 1.0), args.q
    sizes = [args.L] if args.L_given else [8, 16, 32]
    for L in sizes:
        for beta in args.beta or [1.0, 5.0]:
            for m in [args.m] if args.m is not None else [1, 2, 3]:
                r = transport.ward_check(L, beta, t, 2 * np.pi * m / L, q=q)
                out.rows.append(f"{L},{beta:g},{m},{r.diamagnetic:.15g},{r.kubo:.15g},{r.residual:.3g},{r.passed}")
                out.check(f"ward L={L} beta={beta:g} m={m}", r.passed, f"residual={r.residual:.2e}")
    return out


def cmd_susceptibility(args) -> Outcome:
    t, q = _first(args.t, 1.0), args.q
    L = args.L if args.L_given else 512
    beta = _first(args.beta, 2000.0)
    target = -transport.bloch_velocity(t) * q * q / 8
    out = Outcome(header=transport.RESPONSE_HEADER)
    ms = [args.m] if args.m is not None else [2, 3, 4]
    if args.method == "lattice":
        samples = [transport.susceptibility_lattice(m, L, beta, t, q) for m in ms]
        out.rows += [s.csv_row() for s in samples]
        for s in samples:
            rel = abs(s.p2 * s.value / target - 1)
            out.check(f"lattice |p2| chi m={round(s.p2 * L / (2 * np.pi))} within 5%", rel <= 0.05, f"|p2|chi={abs(s.p2) * s.value:.6f}")
        if len(samples) >= 3:
            ext = transport.richardson_zero([s.p2 for s in samples], [s.p2 * s.value for s in samples])
            out.check("extrapolated |p2| chi within 3%", abs(ext / target - 1) <= 0.03, f"extrapolated={ext:.6f}")
    else:
        delta = args.delta
        for m in ms:
            p2 = 2 * np.pi * m / L
            s = transport.susceptibility_continuum(p2, delta, t, q)
            out.rows.append(s.csv_row())
            out.check(f"continuum |p2| chi m={m} within 5%", abs(s.p2 * s.value / target - 1) <= 0.05, f"|p2|chi={s.p2 * s.value:.6f}")
            d = transport.dirac_subtracted_integral(p2, delta, t)
            out.check(f"dirac arctan profile m={m}", abs(d - transport.dirac_arctan(p2, delta)) <= 1e-4, f"integral={d:.8f}")
    return out


def cmd_bands(args) -> Outcome:
    t = _first(args.t, 1.0)
    a, b = args.loops
    text = bloch.chess_bands_csv(args.L, a, b, t) if args.phase == "chess" else bloch.pi_bands_csv(args.L, a, b, t)
    out = Outcome()
    out.header, *out.rows = text.strip().split("\n")
    v, spread = transport.dirac_velocity(t)
    out.check("fermi velocity 2t", abs(v - 2 * t) <= 1e-4 and spread <= 1e-6, f"v={v:.8f} spread={spread:.2e}")
    return out


# even lattice offsets along (1,1) with tau = n sqrt(2): separations 12..40
DIAGONAL_STEPS = (6, 8, 10, 14, 20)


def cmd_propagator(args) -> Outcome:
    t = _first(args.t, 1.0)
    radii = np.array([10.0, 14.0, 20.0, 28.0, 40.0])
    out = Outcome(header="ray,r,x1,x2,tau,norm_g,density")
    for ray in ("time", "diagonal"):
        g, d, R = [], [], []
        for r in radii:
            if ray == "time":
                x, tau = (0, 0), r
            else:
                n = DIAGONAL_STEPS[int(np.flatnonzero(radii == r)[0])]
                x, tau = (n, n), n * np.sqrt(2)
            rr = float(np.sqrt(x[0] ** 2 + x[1] ** 2 + tau**2))
            gn = float(np.linalg.norm(gibbs.ground_state_propagator(x, tau, t)))
            dn = gibbs.density_correlation(x, tau, t)
            g.append(gn)
            d.append(abs(dn))
            R.append(rr)
            out.rows.append(f"{ray},{rr:.12g},{x[0]},{x[1]},{tau:.12g},{gn:.12g},{dn:.12g}")
        sg = np.polyfit(np.log(R), np.log(g), 1)[0]
        sd = np.polyfit(np.log(R), np.log(d), 1)[0]
        out.check(f"propagator slope ({ray})", abs(sg + 2) <= 0.3, f"slope={sg:.4f}")
        out.check(f"density slope ({ray})", abs(sd + 4) <= 0.3, f"slope={sd:.4f}")
    return out


COMMANDS: dict[str, Callable[[argparse.Namespace], Outcome]] = {
    "optimum": cmd_optimum,
    "rp-check": cmd_rp_check,
    "chessboard": cmd_chessboard,
    "monopole-bound": cmd_monopole_bound,
    "monopole-mass": cmd_monopole_mass,
    "pi-phases": cmd_pi_phases,
    "degeneracy-scaling": cmd_degeneracy_scaling,
    "gibbs-sweep": cmd_gibbs_sweep,
    "ward": cmd_ward,
    "susceptibility": cmd_susceptibility,
    "bands": cmd_bands,
    "propagator": cmd_propagator,
}

DEFAULT_SAMPLES = {"rp-check": 1000, "chessboard": 100, "monopole-bound": 100, "optimum": 20}


def _loops(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected a,b with entries +-1") from exc
    if a not in (1, -1) or b not in (1, -1):
        raise argparse.ArgumentTypeError("loop fluxes must be +1 or -1")
    return a, b


def _positive(kind):
    def conv(text: str):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return v

    return conv


def _nonnegative(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative value, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--L", type=_positive(int), default=None)
    common.add_argument("--beta", type=_positive(float), nargs="+", default=None)
    common.add_argument("--t", type=_nonnegative, nargs="+", default=None)
    common.add_argument("--q", type=float, default=1.0)
    common.add_argument("--parity", choices=["even", "odd"], default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=_positive(int), default=None)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--samples", type=_positive(int), default=None)
    common.add_argument("--m", type=int, default=None)
    common.add_argument("--method", choices=["lattice", "continuum"], default="lattice")
    common.add_argument("--delta", type=float, default=0.3)
    common.add_argument("--phase", choices=["pi", "chess"], default="pi")
    common.add_argument("--loops", type=_loops, default=(-1, -1))
    parser = argparse.ArgumentParser(prog="z2flux", description=__doc__)
    parser.add_argument("--version", action="version", version=f"z2flux {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _write(path: Path, args: argparse.Namespace, out: Outcome) -> None:
    lines = [f"# z2flux {__version__} command={args.command} config={config_hash(args)} seed={args.seed}"]
    lines.append(out.header)
    lines.extend(out.rows)
    path.write_text("\n".join(lines) + "\n")


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.L_given = args.L is not None
    if args.L is None:
        args.L = 4
    if args.samples is None:
        args.samples = DEFAULT_SAMPLES.get(args.command, 1)
    if args.m == 0:
        print("error: --m must be nonzero", file=sys.stderr)
        return 2
    try:
        with threadpool_limits(limits=args.threads):
            out = COMMANDS[args.command](args)
    except (UsageError, lattice.InvalidSize, bloch.InvalidSize) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, ok, detail in out.checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else ""))
    if args.out is not None:
        _write(args.out, args, out)
    return 0 if all(ok for _, ok, _ in out.checks) else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
