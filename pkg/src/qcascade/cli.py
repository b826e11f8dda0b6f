"""Command-line front end: paper-figure sweeps as CSV plus verification.

All physical rates are expressed in units of the waveguide rate gamma
(gamma = 1 internally).  Every CSV starts with ``#`` header lines carrying
the tool version, the fully resolved parameter set, the solver tolerances
and the units note; identical invocations produce byte-identical files.

Exit codes: 0 success, 1 bad arguments, 2 solver failure, 3 physics
contract violation (e.g. a claimed dark point fails its residual test).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .absorber import (DegenerateSpectrumError, SymmetryConditionError,
                       build_absorber, check_dark_state)
from .kerr import (CutoffError, KerrSpec, PoleError, alpha_closed_form,
                   alpha_recursion, dark_state_fock, dark_state_residuals,
                   entropy_map, hypergeom_0F2, moments_ab,
                   single_cavity_steady_state)
from .lindblad import SolverError, build_liouvillian, output_intensity, steady_state
from .measures import block_entropy, concurrence_2qubit, purity
from .operator_io import read_operator, write_operator
from .operators import partial_trace
from .spins import SpinNetworkSpec, build_spin_cascade, dark_state_for_profile, \
    interpolate_profiles

TOLERANCE_NOTE = ("steady-state residual <= 1e-10*||L||; uniqueness threshold 1e-9; "
                  "integration rtol 1e-8 / atol 1e-10")

FIG3_WAYPOINTS = ("0.2,-0.2,0.2,-0.2,0.2,-0.2;"
                  "1,0.5,-0.5,-1,0.2,-0.2;"
                  "1,0.5,0,0,-0.5,-1;"
                  "0,0,0,0,0,0")


class CliError(Exception):
    """Bad arguments or malformed input files (exit code 1)."""


class PhysicsViolation(Exception):
    """A physics contract failed its residual/tolerance test (exit code 3)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_csv(out, subcommand: str, params: dict, columns: list, rows) -> None:
    lines = [f"# qcascade {subcommand} v{__version__}",
             "# units: all rates in units of gamma (gamma = 1); entropies in bits (base 2)",
             f"# tolerances: {TOLERANCE_NOTE}"]
    for key in sorted(params):
        lines.append(f"# param: {key} = {params[key]}")
    lines.append("# columns: " + ",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _parse_profile(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",") if tok.strip() != ""])
    except ValueError as exc:
        raise CliError(f"malformed profile {text!r}") from exc


def _parse_waypoints(text: str) -> list:
    profiles = [_parse_profile(seg) for seg in text.split(";") if seg.strip()]
    if len(profiles) < 2:
        raise CliError("need at least two waypoint profiles separated by ';'")
    if len({p.size for p in profiles}) != 1:
        raise CliError("all waypoint profiles must have the same length")
    return profiles


def _parse_range(text: str, name: str) -> tuple:
    try:
        lo, hi = (float(tok) for tok in text.split(":"))
        return lo, hi
    except ValueError as exc:
        raise CliError(f"malformed {name} range {text!r}; expected 'lo:hi'") from exc


def _parse_grid(text: str) -> tuple:
    try:
        a, b = (int(tok) for tok in text.lower().split("x"))
        if a < 1 or b < 1:
            raise ValueError
        return a, b
    except ValueError as exc:
        raise CliError(f"malformed grid {text!r}; expected 'NDxNO'") from exc


def _pmap(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# spin-pair
# ---------------------------------------------------------------------------

def _pair_point(args):
    omega, delta, kappa0, deph, eta, eps = args
    spec = SpinNetworkSpec(2, omega, (delta + eps, -delta + eps),
                           kappa0=kappa0, dephasing_rate=deph, eta=(eta,))
    casc = build_spin_cascade(spec)
    rho, _ = steady_state(build_liouvillian(casc))
    return concurrence_2qubit(rho), purity(rho), output_intensity(casc, rho)


def cmd_spin_pair(ns) -> int:
    sweep_vals = np.linspace(ns.min, ns.max, ns.points)
    deph = 0.0 if np.isinf(ns.t2) else 1.0 / (2.0 * ns.t2)
    base = dict(omega=ns.omega, delta=ns.delta, kappa0=ns.kappa0,
                dephasing=deph, eta=ns.eta, epsilon=ns.epsilon)
    if ns.sweep not in ("omega", "kappa0", "dephasing", "eta", "epsilon", "delta"):
        raise CliError(f"unknown sweep variable {ns.sweep!r}")
    points = []
    for v in sweep_vals:
        p = dict(base)
        p[ns.sweep] = v
        points.append((p["omega"], p["delta"], p["kappa0"], p["dephasing"],
                       p["eta"], p["epsilon"]))
    results = _pmap(_pair_point, points, ns.jobs)
    rows = [(v, c, pu, ii) for v, (c, pu, ii) in zip(sweep_vals, results)]
    params = dict(base, sweep=ns.sweep, min=ns.min, max=ns.max,
                  points=ns.points, t2=ns.t2, seed=ns.seed)
    _write_csv(ns.out, "spin-pair", params,
               [ns.sweep, "concurrence", "purity", "intensity"], rows)
    return 0


# ---------------------------------------------------------------------------
# spin-sweep (Fig. 3 style path through profile waypoints)
# ---------------------------------------------------------------------------

def _sweep_point(args):
    profile, omega, kappa0 = args
    spec = SpinNetworkSpec(len(profile), omega, tuple(profile), kappa0=kappa0)
    casc = build_spin_cascade(spec)
    rho, _ = steady_state(build_liouvillian(casc))
    return purity(rho), output_intensity(casc, rho)


def cmd_spin_sweep(ns) -> int:
    waypoints = _parse_waypoints(ns.waypoints)
    if waypoints[0].size != ns.n:
        raise CliError(f"waypoint length {waypoints[0].size} != --n {ns.n}")
    profiles = []
    coords = []
    n_seg = len(waypoints) - 1
    for seg in range(n_seg):
        local = np.linspace(0.0, 1.0, ns.points_per_segment, endpoint=False)
        for s in local:
            profiles.append(interpolate_profiles(waypoints[seg], waypoints[seg + 1], s))
            coords.append(seg + s)
    profiles.append(waypoints[-1])
    coords.append(float(n_seg))
    results = _pmap(_sweep_point, [(p, ns.omega, ns.kappa0) for p in profiles],
                    ns.jobs)
    rows = [(c, *p, pu, ii) for c, p, (pu, ii) in zip(coords, profiles, results)]
    params = dict(n=ns.n, omega=ns.omega, kappa0=ns.kappa0,
                  points_per_segment=ns.points_per_segment,
                  waypoints=ns.waypoints, seed=ns.seed)
    cols = ["path_coord"] + [f"delta_{i+1}" for i in range(ns.n)] + \
        ["purity", "intensity"]
    _write_csv(ns.out, "spin-sweep", params, cols, rows)
    return 0


# ---------------------------------------------------------------------------
# spin-entropy (Fig. 2b style block-entropy scaling)
# ---------------------------------------------------------------------------

def cmd_spin_entropy(ns) -> int:
    profile = _parse_profile(ns.profile) if ns.profile else \
        np.array([1.0 / 3.0, -1.0 / 3.0] * (ns.n // 2))
    if profile.size != ns.n:
        raise CliError(f"profile length {profile.size} != --n {ns.n}")
    try:
        psi = dark_state_for_profile(profile, ns.omega)
    except ValueError as exc:
        raise PhysicsViolation(f"no analytic dark state: {exc}") from exc
    rows = [(cut, block_entropy(psi, cut)) for cut in range(ns.n + 1)]
    params = dict(n=ns.n, omega=ns.omega,
                  profile=",".join(_fmt(x) for x in profile), seed=ns.seed)
    _write_csv(ns.out, "spin-entropy", params, ["cut_n", "entropy_bits"], rows)
    return 0


# ---------------------------------------------------------------------------
# kerr-map (Fig. 5 style response/entropy maps)
# ---------------------------------------------------------------------------

def cmd_kerr_map(ns) -> int:
    n_delta, n_omega = _parse_grid(ns.grid)
    dlo, dhi = _parse_range(ns.delta_range, "delta")
    olo, ohi = _parse_range(ns.omega_range, "omega")
    deltas = np.linspace(dlo, dhi, n_delta)
    omegas = np.linspace(olo, ohi, n_omega)
    if ns.jobs <= 1:
        n_norm, s_lin = entropy_map(deltas, omegas, ns.kerr)
    else:
        chunks = _pmap(_kerr_map_row, [(d, omegas, ns.kerr) for d in deltas], ns.jobs)
        n_norm = np.vstack([c[0] for c in chunks])
        s_lin = np.vstack([c[1] for c in chunks])
    rows = []
    for i, d in enumerate(deltas):
        for j, om in enumerate(omegas):
            rows.append((d, om, n_norm[i, j], s_lin[i, j]))
    params = dict(kerr=ns.kerr, grid=ns.grid, delta_range=ns.delta_range,
                  omega_range=ns.omega_range, seed=ns.seed)
    _write_csv(ns.out, "kerr-map", params,
               ["delta", "omega", "photon_number_normalized", "linear_entropy"],
               rows)
    return 0


def _kerr_map_row(args):
    d, omegas, kerr = args
    return entropy_map([d], omegas, kerr)


# ---------------------------------------------------------------------------
# kerr-verify
# ---------------------------------------------------------------------------

def cmd_kerr_verify(ns) -> int:
    spec = KerrSpec(ns.delta, ns.kerr, ns.omega, cutoff=ns.cutoff)
    checks = []

    rec = alpha_recursion(spec, n_max=2 * spec.cutoff)
    clo = alpha_closed_form(spec, n_max=2 * spec.cutoff)
    checks.append(("recursion_vs_closed_form",
                   float(np.abs(rec.alpha - clo.alpha).max()), 1e-12))
    norm_sq = rec.norm ** 2
    f2 = hypergeom_0F2(spec.x, np.conj(spec.x), 2 * abs(spec.eps) ** 2)
    checks.append(("normalization_vs_0F2",
                   float(abs(norm_sq - f2.real) / norm_sq), 1e-10))
    res_dark, res_h = dark_state_residuals(spec)
    checks.append(("dark_residual_a_plus_b", res_dark, 1e-10))
    checks.append(("hamiltonian_residual_interior", res_h, 1e-8))

    psi = dark_state_fock(spec)
    rho_a = partial_trace(psi.density(), {0})
    rho_me = single_cavity_steady_state(spec)
    tdist = 0.5 * float(np.abs(np.linalg.eigvalsh(rho_a.matrix - rho_me.matrix)).sum())
    checks.append(("purification_trace_distance", tdist, 1e-8))

    b_mat = psi.amplitudes.reshape(spec.cutoff + 1, spec.cutoff + 1)
    n_direct = float((np.arange(spec.cutoff + 1)[:, None] * np.abs(b_mat) ** 2).sum())
    n_moment = moments_ab(1, 0, 0, 1, spec).real
    checks.append(("photon_number_vs_moments", abs(n_direct - n_moment), 1e-9))

    lines = [f"# qcascade kerr-verify v{__version__}",
             f"# param: delta = {ns.delta}", f"# param: kerr = {ns.kerr}",
             f"# param: omega = {ns.omega}", f"# param: cutoff = {ns.cutoff}"]
    failed = False
    for name, value, tol in checks:
        ok = value <= tol
        failed = failed or not ok
        lines.append(f"{'PASS' if ok else 'FAIL'} {name} value={value:.3e} tol={tol:.1e}")
    text = "\n".join(lines) + "\n"
    if ns.out:
        with open(ns.out, "w", newline="\n") as fh:
            fh.write(text)
    sys.stdout.write(text)
    if failed:
        raise PhysicsViolation("kerr-verify checks failed")
    return 0


# ---------------------------------------------------------------------------
# absorber-build
# ---------------------------------------------------------------------------

def cmd_absorber_build(ns) -> int:
    h_a = read_operator(ns.hamiltonian)
    c_a = read_operator(ns.jump)
    if h_a.dims != c_a.dims:
        raise CliError("Hamiltonian and jump operator dims differ")
    v = read_operator(ns.v_file).matrix if ns.v_file else None
    result = build_absorber(h_a, c_a, ns.gamma, v=v)
    report = check_dark_state(h_a, c_a, result.h_b, result.c_b, ns.gamma,
                              result.psi0, tol=ns.tol)
    spectrum = " ".join(_fmt(p) for p in result.spectrum[:8])
    sys.stdout.write("\n".join([
        f"# qcascade absorber-build v{__version__}",
        f"retained_rank {result.spectrum.size}",
        f"spectrum_head {spectrum}",
        f"discarded_weight {_fmt(result.discarded_weight)}",
        f"residual_dark {_fmt(report.residual_i)}",
        f"residual_stationarity {_fmt(report.residual_ii)}",
        f"correlation_C {_fmt(report.correlation)}",
        f"is_dark {report.is_dark}",
    ]) + "\n")
    write_operator(ns.out_hamiltonian, result.h_b, comment="absorber Hamiltonian H_B")
    write_operator(ns.out_jump, result.c_b, comment="absorber jump operator c_B")
    if not report.is_dark:
        raise PhysicsViolation(
            f"constructed absorber fails the dark-state test: residuals "
            f"{report.residual_i:.3e}, {report.residual_ii:.3e} > {ns.tol:.1e}")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _load_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{ln}: expected 'key = value'")
            key, value = (tok.strip() for tok in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _build_parser() -> _Parser:
    parser = _Parser(prog="qcascade",
                     description="Cascaded quantum network sweeps and checks "
                                 "(all rates in units of gamma)")
    parser.add_argument("--version", action="version",
                        version=f"qcascade {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--config", default=None,
                       help="file of 'key = value' lines overriding defaults")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for sweep points")
        p.add_argument("--seed", type=int, default=0,
                       help="recorded in the CSV header; reserved for "
                            "stochastic subcommands")

    p = sub.add_parser("spin-pair", help="two-node steady-state sweep (Fig. 4)")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0,
                   help="asymmetric detuning: profile (delta+eps, -delta+eps)")
    p.add_argument("--kappa0", type=float, default=0.0)
    p.add_argument("--t2", type=float, default=np.inf,
                   help="dephasing time; rate 1/(2 T2)")
    p.add_argument("--eta", type=float, default=0.0, help="waveguide loss fraction")
    p.add_argument("--epsilon", type=float, default=0.0,
                   help="symmetric detuning offset delta_1 = delta_2 = eps")
    p.add_argument("--sweep", default="omega",
                   help="swept variable: omega|delta|kappa0|dephasing|eta|epsilon")
    p.add_argument("--min", type=float, default=0.05)
    p.add_argument("--max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=60)
    common(p)
    p.set_defaults(func=cmd_spin_pair)

    p = sub.add_parser("spin-sweep",
                       help="purity/intensity along a profile path (Fig. 3)")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--kappa0", type=float, default=0.0)
    p.add_argument("--waypoints", default=FIG3_WAYPOINTS,
                   help="profiles 'd1,..,dN;d1,..,dN;...' interpolated linearly")
    p.add_argument("--points-per-segment", type=int, default=50)
    common(p)
    p.set_defaults(func=cmd_spin_sweep)

    p = sub.add_parser("spin-entropy",
                       help="block entropy of the analytic dark state (Fig. 2b)")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--omega", type=float, default=2.0)
    p.add_argument("--profile", default=None,
                   help="detuning profile 'd1,..,dN' (default alternating gamma/3)")
    common(p)
    p.set_defaults(func=cmd_spin_entropy)

    p = sub.add_parser("kerr-map",
                       help="photon number / linear entropy map (Fig. 5)")
    p.add_argument("--kerr", type=float, default=0.5)
    p.add_argument("--grid", default="101x101", help="'NDELTAxNOMEGA'")
    p.add_argument("--delta-range", default="-6:2")
    p.add_argument("--omega-range", default="0:2")
    common(p)
    p.set_defaults(func=cmd_kerr_map)

    p = sub.add_parser("kerr-verify", help="dark-state verification battery")
    p.add_argument("--kerr", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--cutoff", type=int, default=30)
    common(p)
    p.set_defaults(func=cmd_kerr_verify)

    p = sub.add_parser("absorber-build",
                       help="construct the coherent absorber for (H_A, c_A)")
    p.add_argument("--hamiltonian", required=True, help="operator file for H_A")
    p.add_argument("--jump", required=True, help="operator file for c_A")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--v-file", default=None,
                   help="optional operator file with the unitary V")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="dark-state residual tolerance for the report")
    p.add_argument("--out-hamiltonian", required=True)
    p.add_argument("--out-jump", required=True)
    common(p)
    p.set_defaults(func=cmd_absorber_build)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _build_parser()
    try:
        # apply config-file defaults, then reparse so flags win
        ns = parser.parse_args(argv)
        if getattr(ns, "config", None):
            overrides = _load_config(ns.config)
            sub_actions = [a for a in parser._subparsers._group_actions][0]
            subparser = sub_actions.choices[ns.command]
            valid = {a.dest for a in subparser._actions}
            unknown = set(overrides) - valid
            if unknown:
                raise CliError(f"unknown config keys: {sorted(unknown)}")
            typed = {}
            for action in subparser._actions:
                if action.dest in overrides:
                    raw = overrides[action.dest]
                    typed[action.dest] = action.type(raw) if action.type else raw
            subparser.set_defaults(**typed)
            ns = parser.parse_args(argv)
        return ns.func(ns)
    except (PhysicsViolation, DegenerateSpectrumError, SymmetryConditionError,
            PoleError, CutoffError) as exc:
        print(f"physics contract violation: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
