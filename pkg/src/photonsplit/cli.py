"""Command-line front end.

Subcommands: sweep (efficiency surface CSV), peak (bandwidth peak JSON),
shape-opt (quadratic-form JSON plus sampled optimal-profile CSV), validate
(closed-form and invariant checks), oracle (closed-form efficiency at given
parameters). Every artifact-writing run also writes <out>.manifest.json
echoing the resolved configuration, so any artifact can be regenerated
from its manifest alone. Output is deterministic: rerunning a config
byte-identically reproduces the files.

Exit codes: 0 success, 1 validation/computation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .efficiency import (bunch_check, input_moments,
                         oracle_stationary_exponential,
                         oracle_unentangled_exponential, splitting_efficiency,
                         stationary_limit_moments)
from .interferometer import (ConsistencyError, MziSetting, mzi_matrix,
                             split_density, split_weights)
from .optimizer import (alternate_shape_and_setting, build_r_matrix,
                        convergence_from_problem, find_peak, optimal_shape,
                        sweep_surface)
from .pulses import canonical_family, hermite_functions, make_input
from .scattering import AtomAmplitudes, atom_amplitudes, get_kernel

_FORMATS = ("csv", "json", "text")


# ---------------------------------------------------------------------------
# Configuration plumbing.

def _coerce(text):
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _load_config_file(path):
    """Flat key=value lines; '#' starts a comment; keys match flag names."""
    config = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            config[key.strip().replace("-", "_")] = _coerce(value)
    return config


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file; "
                                         "flags override its entries")
    common.add_argument("--out", help="artifact output path")
    common.add_argument("--format", choices=_FORMATS)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float)

    parser = argparse.ArgumentParser(
        prog="photonsplit",
        description="Two-photon splitting by an emitter plus interferometer")
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    p = sub.add_parser("sweep", parents=[common],
                       help="efficiency over a bandwidth x theta grid")
    p.add_argument("--family")
    p.add_argument("--band-min", type=float, default=0.25)
    p.add_argument("--band-max", type=float, default=5.0)
    p.add_argument("--band-steps", type=int, default=18)
    p.add_argument("--theta-steps", type=int, default=32)
    p.add_argument("--phi-steps", type=int, default=8)
    p.add_argument("--L", type=float)
    parsers["sweep"] = p

    p = sub.add_parser("peak", parents=[common],
                       help="bandwidth peak with optimal angles")
    p.add_argument("--family")
    p.add_argument("--band-min", type=float, default=0.25)
    p.add_argument("--band-max", type=float, default=5.0)
    p.add_argument("--L", type=float)
    p.add_argument("--theta", type=float,
                   help="hold the interferometer fixed at this theta")
    p.add_argument("--phi", type=float)
    parsers["peak"] = p

    p = sub.add_parser("shape-opt", parents=[common],
                       help="optimal entangled shape over the mode basis")
    p.add_argument("--basis-n", type=int, default=78,
                   help="highest (even) Hermite order retained")
    p.add_argument("--sigma", type=float)
    p.add_argument("--L", type=float, default=20.0)
    p.add_argument("--theta", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--alternate", action="store_true",
                   help="re-optimize the interferometer against the shape")
    parsers["shape-opt"] = p

    p = sub.add_parser("validate", parents=[common],
                       help="closed-form and invariant checks")
    p.add_argument("--quick", action="store_true")
    parsers["validate"] = p

    p = sub.add_parser("oracle", parents=[common],
                       help="closed-form efficiency at given parameters")
    p.add_argument("--family")
    p.add_argument("--kappa", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--phi", type=float, default=0.0)
    parsers["oracle"] = p

    return parser, parsers


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out, subcommand, config, artifacts, status="complete"):
    clean = {k: v for k, v in sorted(config.items()) if v is not None}
    _write_json(out + ".manifest.json",
                {"subcommand": subcommand, "config": clean,
                 "artifacts": artifacts, "status": status})


# ---------------------------------------------------------------------------
# Subcommands.

def _require_family(args):
    """Family may come from a flag or the config file; reject bad ones early."""
    if not args.family:
        raise ValueError("--family is required (flag or config entry)")
    return canonical_family(args.family)


def _cmd_sweep(args):
    family = _require_family(args)
    out = args.out or "sweep.csv"
    fmt = args.format or "csv"
    bands = np.linspace(args.band_min, args.band_max, args.band_steps)
    phis = tuple(k * 2.0 * math.pi / args.phi_steps
                 for k in range(args.phi_steps))
    thetas = np.linspace(0.0, math.pi, args.theta_steps, endpoint=False)
    surface = sweep_surface(family, bands, thetas, phis, L=args.L)
    if fmt == "csv":
        surface.to_csv(out)
    else:
        _write_json(out, {
            "family": surface.family, "L": surface.window,
            "columns": list(surface.COLUMNS),
            "rows": [[float(x) for x in row]
                     for row in zip(surface.bandwidth, surface.theta,
                                    surface.phi, surface.p_s, surface.err)]})
    status = "partial" if np.isnan(surface.p_s).any() else "complete"
    _write_manifest(out, "sweep",
                    dict(family=args.family, band_min=args.band_min,
                         band_max=args.band_max, band_steps=args.band_steps,
                         theta_steps=args.theta_steps,
                         phi_steps=args.phi_steps, L=args.L, format=fmt,
                         seed=args.seed, tol=args.tol),
                    [out], status)
    return 0


def _cmd_peak(args):
    family = _require_family(args)
    out = args.out or "peak.json"
    setting = None
    if args.theta is not None:
        setting = MziSetting(args.theta, args.phi or 0.0)
    band_tol = args.tol or 1e-3
    peak = find_peak(family, args.band_min, args.band_max, L=args.L,
                     setting=setting, band_tol=band_tol)
    inp = make_input(family, peak.bandwidth, L=args.L)
    result = splitting_efficiency(inp, MziSetting(peak.theta, peak.phi))
    record = {"bandwidth": peak.bandwidth}
    record.update(result.to_json_dict())
    _write_json(out, record)
    print(f"P_S = {record['P_S']!r} at bandwidth {peak.bandwidth!r}, "
          f"theta {peak.theta!r}, phi {peak.phi!r}")
    _write_manifest(out, "peak",
                    dict(family=args.family, band_min=args.band_min,
                         band_max=args.band_max, L=args.L, theta=args.theta,
                         phi=args.phi, format="json", seed=args.seed,
                         tol=args.tol),
                    [out])
    return 0


def _cmd_shape_opt(args):
    out = args.out or "shape.json"
    setting = None
    if args.theta is not None or args.phi is not None:
        setting = MziSetting(args.theta or 0.0, args.phi or 0.0)
    if args.alternate:
        alt = alternate_shape_and_setting(args.basis_n, args.sigma, setting,
                                          args.L)
        problem = alt.problem
    else:
        problem = optimal_shape(build_r_matrix(args.basis_n, args.sigma,
                                               setting, args.L))
    payload = problem.to_json_dict()
    payload["convergence"] = [[n, lam]
                              for n, lam in convergence_from_problem(problem)]
    if args.alternate:
        payload["alternation"] = {"rounds": alt.rounds,
                                  "history": [float(h) for h in alt.history]}
    _write_json(out, payload)

    base, _ = os.path.splitext(out)
    profile_path = base + "-profile.csv"
    alpha = np.asarray(payload["alpha"])
    sigma = problem.sigma
    s = np.linspace(0.0, sigma * math.sqrt(2.0 * args.basis_n + 1.0)
                    + 4.0 * sigma, 512)
    h = hermite_functions(s / sigma, 2 * (alpha.size - 1))
    values = math.sqrt(2.0 / sigma) * (h[:, ::2] @ alpha)
    with open(profile_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s", "profile"])
        for si, vi in zip(s, values):
            writer.writerow([repr(float(si)), repr(float(vi))])

    print(f"P_S = {payload['eigenvalue']!r} with {problem.nmodes} modes "
          f"at theta {problem.setting.theta!r}, phi {problem.setting.phi!r}")
    _write_manifest(out, "shape-opt",
                    dict(basis_n=args.basis_n, sigma=problem.sigma, L=args.L,
                         theta=problem.setting.theta,
                         phi=problem.setting.phi, alternate=args.alternate,
                         format="json", seed=args.seed, tol=args.tol),
                    [out, profile_path])
    return 0


def _cmd_oracle(args):
    family = _require_family(args)
    if family == "unentangled-exponential":
        if args.kappa is None:
            raise ValueError("oracle for this family needs --kappa")
        value = oracle_unentangled_exponential(args.kappa, args.theta,
                                               args.phi)
        params = {"kappa": args.kappa}
    elif family == "entangled-exponential":
        if args.delta is None:
            raise ValueError("oracle for this family needs --delta")
        value = oracle_stationary_exponential(args.delta, args.theta,
                                              args.phi)
        params = {"delta": args.delta}
    else:
        raise ValueError(f"no closed form for family {args.family!r}")
    print(repr(float(value)))
    if args.out:
        payload = {"family": family, "theta": args.theta, "phi": args.phi,
                   "P_S": float(value)}
        payload.update(params)
        _write_json(args.out, payload)
        _write_manifest(args.out, "oracle",
                        dict(family=args.family, kappa=args.kappa,
                             delta=args.delta, theta=args.theta,
                             phi=args.phi, format="json"),
                        [args.out])
    return 0


# ---------------------------------------------------------------------------
# Validation suite.

def _check_closed_form_unentangled(quick):
    kappas = (0.5, 2.0, 3.5) if quick else np.linspace(0.25, 5.0, 6)
    thetas = np.linspace(0.0, math.pi, 4, endpoint=False)
    worst = 0.0
    for kappa in kappas:
        moments = input_moments(make_input("unentangled-exp", float(kappa)))
        for theta in thetas:
            for phi in (0.0, 0.5 * math.pi, math.pi):
                setting = MziSetting(float(theta), phi)
                num = float(np.sum(split_weights(setting) * moments.matrix))
                ref = oracle_unentangled_exponential(float(kappa),
                                                     float(theta), phi)
                worst = max(worst, abs(num - ref))
    return worst, 1e-4


def _check_stationary_limit(quick):
    deltas = (1.0, 2.5) if quick else (0.5, 1.0, 2.0, 3.5)
    thetas = np.linspace(0.0, math.pi, 4, endpoint=False)
    worst = 0.0
    for delta in deltas:
        moments = stationary_limit_moments(
            make_input("entangled-exp", delta, L=20.0))
        for theta in thetas:
            for phi in (0.0, 0.5 * math.pi, math.pi):
                setting = MziSetting(float(theta), phi)
                num = float(np.sum(split_weights(setting) * moments.matrix))
                ref = oracle_stationary_exponential(delta, float(theta), phi)
                worst = max(worst, abs(num - ref))
    return worst, 5e-3


def _check_conservation(quick, rng):
    reps = 1 if quick else 3
    worst = 0.0
    for _ in range(reps):
        inputs = [
            make_input("unentangled-exp", rng.uniform(0.4, 3.5)),
            make_input("unentangled-gauss", rng.uniform(0.4, 3.5)),
            make_input("entangled-exp", rng.uniform(0.4, 3.5), L=15.0),
            make_input("entangled-gauss", rng.uniform(0.4, 3.5), L=15.0),
            make_input("stationary-mode", rng.uniform(0.7, 2.5), L=15.0,
                       n=int(rng.integers(0, 5))),
        ]
        for inp in inputs:
            check = bunch_check(inp, MziSetting(rng.uniform(0.0, math.pi),
                                                rng.uniform(0.0, 2 * math.pi)))
            worst = max(worst, abs(check.total - 1.0))
    return worst, 2e-4


def _check_unitarity(quick, rng):
    n = 200 if quick else 1000
    worst = 0.0
    eye = np.eye(2)
    for _ in range(n):
        u = mzi_matrix(MziSetting(rng.uniform(-10, 10), rng.uniform(-10, 10)))
        worst = max(worst, float(np.max(np.abs(u.conj().T @ u - eye))))
    return worst, 1e-10


def _check_blockade(quick):
    worst = 0.0
    cases = [
        make_input("unentangled-exp", 1.3),
        make_input("unentangled-gauss", 0.9),
        make_input("entangled-exp", 2.2, L=12.0),
        make_input("entangled-gauss", 1.5, L=12.0),
    ]
    for inp in cases:
        kernel = get_kernel(inp)
        t1 = np.array([0.4, 1.1, 3.7])
        bb = kernel.fields(t1, np.zeros(3))[0]
        worst = max(worst, float(np.max(np.abs(bb))))
    direct = atom_amplitudes(cases[0], 0.8, 0.8)
    worst = max(worst, abs(direct.psi_bb))
    return worst, 1e-10


def _check_expanded_density(quick, rng):
    n = 100 if quick else 300
    for _ in range(n):
        atom = AtomAmplitudes(*rng.uniform(-1.0, 1.0, size=4), 0.0, 1.0)
        setting = MziSetting(rng.uniform(0, 2 * math.pi),
                             rng.uniform(0, 2 * math.pi))
        try:
            split_density(atom, setting, check=True)
        except ConsistencyError:
            return math.inf, 1e-9
    return 0.0, 1e-9


def _check_mirror_symmetry(quick):
    moments = input_moments(make_input("unentangled-exp", 1.7))

    def best(theta):
        def value(t, p):
            return float(np.sum(split_weights(MziSetting(t, p))
                                * moments.matrix))
        from .optimizer import _best_phi
        return _best_phi(value, theta)[1]

    worst = 0.0
    for theta in (0.31, 0.8, 1.3):
        worst = max(worst, abs(best(theta) - best(math.pi - theta)))
        worst = max(worst, abs(best(theta) - best(theta + math.pi)))
    return worst, 2e-3


def run_validation(quick=False, seed=0):
    """Run the check suite; returns a list of (name, passed, detail)."""
    rng = np.random.default_rng(seed)
    suite = [
        ("closed-form-unentangled", _check_closed_form_unentangled, False),
        ("stationary-limit", _check_stationary_limit, False),
        ("conservation", _check_conservation, True),
        ("unitarity", _check_unitarity, True),
        ("blockade", _check_blockade, False),
        ("expanded-density", _check_expanded_density, True),
        ("mirror-symmetry", _check_mirror_symmetry, False),
    ]
    results = []
    for name, check, needs_rng in suite:
        try:
            worst, tol = check(quick, rng) if needs_rng else check(quick)
            results.append((name, worst <= tol,
                            f"max deviation {worst:.3e} (tol {tol:.0e})"))
        except Exception as exc:
            results.append((name, False, f"raised {exc!r}"))
    return results


def _cmd_validate(args):
    results = run_validation(quick=args.quick, seed=args.seed)
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
             for name, ok, detail in results]
    failed = sum(1 for _, ok, _ in results if not ok)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    report = "\n".join(lines)
    print(report)
    if args.out:
        fmt = args.format or "text"
        if fmt == "json":
            _write_json(args.out, {
                "checks": [{"name": n, "passed": ok, "detail": d}
                           for n, ok, d in results],
                "passed": failed == 0})
        else:
            with open(args.out, "w") as fh:
                fh.write(report + "\n")
        _write_manifest(args.out, "validate",
                        dict(quick=args.quick, seed=args.seed, format=fmt),
                        [args.out])
    return 1 if failed else 0


# ---------------------------------------------------------------------------

def run(argv=None):
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    parser, parsers = _build_parser()
    if known.config:
        try:
            config = _load_config_file(known.config)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for sub in parsers.values():
            sub.set_defaults(**config)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"sweep": _cmd_sweep, "peak": _cmd_peak,
                "shape-opt": _cmd_shape_opt, "validate": _cmd_validate,
                "oracle": _cmd_oracle}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()
