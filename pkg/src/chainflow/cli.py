"""Command-line driver: ``chainflow simulate | experiment-density | verify | converge | fields``.

Configuration files are flat ``key = value`` text with ``#`` comments.
Profile modes use ``mode m = c_m`` / ``vmode m = d_m`` lines.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import integrator, spectral, verify
from .continuum import ContinuumMap
from .model import (PRNG_ID, ChainParams, InvariantError, build_initial_state, equilibrium_profile,
                    parse_profile_entries, random_fourier_profile, single_mode_profile)

SCALAR_KEYS = {
    "profile", "epsilon", "seed", "theta", "N", "omega_prime", "v", "r", "T", "samples",
    "y_samples", "engine", "dt", "strict", "source", "ladder", "rate_ladder", "h",
    "checks", "negative_control", "dist_times", "field_time", "prng",
}
ALL_CHECKS = ("gamma", "convergence", "lagrangian_map", "distribution", "pde", "force_energy",
              "identities", "reduction", "oracle", "energy")


class ConfigError(ValueError):
    pass


def parse_config(text):
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = " ".join(key.split()), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        head = key.split()[0]
        if key not in SCALAR_KEYS and not (head in ("mode", "vmode") and len(key.split()) == 2):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        entries[key] = value
    return entries


class Config:
    """Typed view of parsed entries with per-command defaults."""

    def __init__(self, entries, defaults=None):
        self.entries = {**(defaults or {}), **entries}

    def has(self, key):
        return key in self.entries

    def require(self, *keys):
        for key in keys:
            if key not in self.entries:
                raise ConfigError(f"missing required key {key!r}")

    def get(self, key, cast=str, default=None):
        if key not in self.entries:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return default
        raw = self.entries[key]
        try:
            if cast is bool:
                if str(raw).lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(raw)
                return str(raw).lower() in ("true", "1", "yes")
            return cast(raw)
        except ValueError:
            raise ConfigError(f"key {key!r}: cannot read {raw!r} as {cast.__name__}") from None

    def get_list(self, key, cast, default):
        if key not in self.entries:
            return list(default)
        return [cast(s) for s in str(self.entries[key]).split(",") if s.strip()]

    def profile(self):
        kind = self.get("profile", str, "auto")
        explicit = parse_profile_entries(self.entries)
        if kind == "auto":
            kind = "sine" if explicit is not None else "equilibrium"
        if kind == "equilibrium":
            return equilibrium_profile()
        if kind == "single-mode":
            return single_mode_profile(self.get("epsilon", float, 0.01))
        if kind == "random-fourier":
            return random_fourier_profile(self.get("seed", int, 42), self.get("theta", float, 0.5))
        if kind == "sine":
            if explicit is None:
                raise ConfigError("profile = sine needs at least one 'mode m = c' line")
            return explicit
        raise ConfigError(f"key 'profile': unknown profile {kind!r}")

    def params(self, profile):
        return ChainParams.from_profile(
            profile, self.get("N", int), self.get("omega_prime", float),
            v=self.get("v", float, 0.0), r=self.get("r", float, 1.0 / 3.0),
            strict=self.get("strict", bool, True))


def load_config(args, defaults=None):
    entries = {}
    if args.config:
        with open(args.config) as fh:
            entries = parse_config(fh.read())
    for flag, key in (("N", "N"), ("T", "T"), ("seed", "seed"), ("engine", "engine")):
        value = getattr(args, flag, None)
        if value is not None:
            entries[key] = str(value)
    return Config(entries, defaults)


# -- CSV ----------------------------------------------------------------------------------

def fmt(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.17g}"


def write_csv(stream, meta, header, rows):
    """Metadata as ``# key=value`` lines, then an RFC-4180 table."""
    for key, value in meta.items():
        stream.write(f"# {key}={value}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def _meta(cfg, profile, params=None):
    meta = {"profile": profile.kind}
    if params is not None:
        meta.update(N=params.N, omega_prime=fmt(params.omega_prime), r=fmt(params.r),
                    gamma=fmt(params.gamma), v=fmt(params.v))
    seed = getattr(profile, "seed", None)
    if seed is None and cfg.has("seed"):
        seed = cfg.get("seed", int)
    meta.update(seed="none" if seed is None else seed, prng=PRNG_ID)
    if getattr(profile, "theta", None) is not None:
        meta["theta"] = fmt(profile.theta)
    if hasattr(profile, "epsilon"):
        meta["epsilon"] = fmt(profile.epsilon)
    return meta


# -- commands ------------------------------------------------------------------------------

def cmd_simulate(cfg: Config, out):
    cfg.require("N", "omega_prime")
    profile = cfg.profile()
    params = cfg.params(profile)
    T = cfg.get("T", float, 10.0)
    samples = cfg.get("samples", int, 201)
    engine = cfg.get("engine", str, "spectral")
    times = np.linspace(0.0, T, samples)
    state0 = build_initial_state(params, profile)
    if engine == "spectral":
        coeffs = spectral.project_initial(state0, params)
        states = [spectral.positions_at(coeffs, t) for t in times]
    elif engine == "verlet":
        dt = cfg.get("dt", float, 1e-4 / params.omega_prime)
        interval = T / (samples - 1) if samples > 1 else T
        stride = max(1, int(round(interval / dt))) if T > 0 else 1
        nsteps = stride * max(samples - 1, 1)
        traj = integrator.verlet_integrate(state0, integrator.QuadraticForce(params), T,
                                           T / nsteps if T > 0 else dt, save_every=stride)
        states = traj.states()[:samples]
    else:
        raise ConfigError(f"key 'engine': expected spectral or verlet, got {engine!r}")
    meta = {**_meta(cfg, profile, params), "engine": engine, "T": fmt(T), "samples": samples}
    # rows carry the requested sample times; Verlet step times match them to an ulp
    rows = ((t, k + 1, s.x[k], s.vel[k]) for t, s in zip(times, states) for k in range(params.N))
    write_csv(out, meta, ["t", "k", "x_k", "v_k"], rows)
    return 0


def density_surface(cfg: Config):
    profile = cfg.profile()
    params = cfg.params(profile)
    T = cfg.get("T", float, 10.0)
    times = np.linspace(0.0, T, cfg.get("samples", int, 201))
    y_rel = np.linspace(0.0, 1.0, cfg.get("y_samples", int, 201))
    source = cfg.get("source", str, "particles")
    surface = np.empty((times.size, y_rel.size))
    if source == "particles":
        coeffs = spectral.solve(params, profile)
        N = params.N
        for i, t in enumerate(times):
            x = spectral.positions_at(coeffs, t).x
            gaps = np.diff(x)
            y = x[0] + y_rel * (x[-1] - x[0])
            k = np.clip(np.searchsorted(x, y, side="right"), 1, N - 1)
            surface[i] = 1.0 / (N * gaps[k - 1]) - 1.0
    elif source == "continuum":
        cmap = ContinuumMap.from_profile(profile, params.omega_prime, params.v)
        for i, t in enumerate(times):
            y0, yl = cmap.Y0(t), cmap.YL(t)
            surface[i] = cmap.fields(t, y0 + y_rel * (yl - y0)).rho - 1.0
    else:
        raise ConfigError(f"key 'source': expected particles or continuum, got {source!r}")
    return profile, params, times, y_rel, surface


def cmd_experiment_density(cfg: Config, out):
    profile, params, times, y_rel, surface = density_surface(cfg)
    meta = {**_meta(cfg, profile, params), "T": fmt(times[-1]),
            "source": cfg.get("source", str, "particles")}
    rows = ((t, s, surface[i, j]) for i, t in enumerate(times) for j, s in enumerate(y_rel))
    write_csv(out, meta, ["t", "y_rel", "rho_minus_1"], rows)
    return 0


def cmd_fields(cfg: Config, out):
    cfg.require("omega_prime")
    profile = cfg.profile()
    cmap = ContinuumMap.from_profile(profile, cfg.get("omega_prime", float), cfg.get("v", float, 0.0))
    T = cfg.get("T", float, 10.0)
    times = np.linspace(0.0, T, cfg.get("samples", int, 201))
    y_rel = np.linspace(0.0, 1.0, cfg.get("y_samples", int, 201))
    rows = []
    for t in times:
        y0, yl = cmap.Y0(t), cmap.YL(t)
        y = y0 + y_rel * (yl - y0)
        f = cmap.fields(t, y)
        rows += [(t, y_rel[j], y[j], f.rho[j], f.u[j], f.p[j], f.R[j], f.U[j], f.T[j], f.F[j])
                 for j in range(y.size)]
    meta = {**_meta(cfg, profile), "omega_prime": fmt(cmap.omega_prime), "T": fmt(T)}
    write_csv(out, meta, ["t", "y_rel", "y", "rho", "u", "p", "R", "U", "T", "F"], rows)
    return 0


def cmd_converge(cfg: Config, out):
    cfg.require("omega_prime")
    profile = cfg.profile()
    ladder = cfg.get_list("ladder", int, (64, 128, 256, 512))
    report = verify.convergence_error(profile, cfg.get("omega_prime", float), ladder,
                                      cfg.get("T", float, 2.0), cfg.get("samples", int, 201))
    meta = {**_meta(cfg, profile), "passed": str(report.passed).lower()}
    rows = [(r["N"], r["E"], r["normalized"], r.get("ratio", float("nan"))) for r in report.rows]
    write_csv(out, meta, ["N", "E", "normalized", "ratio"], rows)
    return 0 if report.passed else 1


def _monotone_decreasing(values, floor=1e-9):
    # pairs already at roundoff level count as non-increasing
    return all(b < a or (a <= floor and b <= floor) for a, b in zip(values[:-1], values[1:]))


def run_verify_suite(cfg: Config):
    """All requested checks as a list of reports."""
    profile = cfg.profile()
    w = cfg.get("omega_prime", float, 1.0)
    v = cfg.get("v", float, 0.0)
    N = cfg.get("N", int, 200)
    T = cfg.get("T", float, 10.0)
    samples = cfg.get("samples", int, 201)
    ladder = cfg.get_list("ladder", int, (64, 128, 256, 512))
    rate_ladder = cfg.get_list("rate_ladder", int, (100, 200, 400))
    h = cfg.get("h", float, 1e-3)
    checks = cfg.get_list("checks", str, ALL_CHECKS)
    reports = []
    for name in checks:
        name = name.strip()
        if name == "gamma":
            params = ChainParams.from_profile(profile, N, w, v=v, strict=cfg.get("strict", bool, False))
            reports.append(verify.check_gamma_bounds(spectral.solve(params, profile), params, T, samples))
        elif name == "convergence":
            reports.append(verify.convergence_error(profile, w, ladder, min(T, 2.0), samples))
        elif name == "lagrangian_map":
            subs = [verify.particle_vs_continuum(profile, w, n, T, v, samples) for n in rate_ladder]
            ok_z, rz = verify.halving_check(rate_ladder, [s.metrics["sup_z_error"] for s in subs])
            ok_x, rx = verify.halving_check(rate_ladder, [s.metrics["sup_x_error"] for s in subs])
            reports.append(verify.Report(
                "lagrangian_map", ok_z and ok_x and all(s.passed for s in subs),
                {"ratios_z": " ".join(f"{r:.6g}" for r in rz), "ratios_x": " ".join(f"{r:.6g}" for r in rx)},
                [s.metrics for s in subs]))
        elif name == "distribution":
            subs = [verify.distribution_compare(profile, w, n, t, v)
                    for n in (rate_ladder[0], rate_ladder[-1])
                    for t in cfg.get_list("dist_times", float, (0.0, 1.0, 5.0))]
            reports.append(verify.Report("distribution", all(s.passed for s in subs), {},
                                         [s.metrics for s in subs]))
        elif name == "pde":
            cmap = ContinuumMap.from_profile(profile, w, v)
            reports.append(verify.pde_refinement(cmap, np.linspace(0.1, min(T, 2.0), 11),
                                                 np.linspace(0.05, 0.95, 21), h))
        elif name == "force_energy":
            t_f = cfg.get("field_time", float, 0.3)
            subs = [verify.force_energy_compare(profile, w, n, t_f, v) for n in rate_ladder]
            ok = all(s.passed for s in subs)
            for key in ("sup_R", "sup_U", "sup_T"):
                ok &= _monotone_decreasing([s.metrics[key] for s in subs])
            reports.append(verify.Report("force_energy", bool(ok), {}, [s.metrics for s in subs]))
        elif name == "identities":
            cmap = ContinuumMap.from_profile(profile, w, v)
            reports.append(verify.field_identities(cmap, np.linspace(0.0, T, 11)))
        elif name == "reduction":
            try:
                reports.append(verify.reduction_run(profile, w, min(N, 64), min(T, 5.0)))
            except InvariantError as exc:
                reports.append(verify.Report("reduction_run", False, {"error": str(exc)}))
        elif name == "oracle":
            reports.append(verify.oracle_equivalence(profile, w, 32, 1.0, 1e-4 / w, v))
        elif name == "energy":
            reports.append(verify.energy_drift_spectral(profile, w, 128, 100.0, v))
            reports.append(verify.energy_drift_verlet(profile, w, 128, min(T, 10.0), v=v))
        else:
            raise ConfigError(f"key 'checks': unknown check {name!r}")
    if cfg.get("negative_control", bool, False):
        reports.append(verify.negative_control(profile, w, N, T, samples))
    return reports


def cmd_verify(cfg: Config, out):
    reports = run_verify_suite(cfg)
    for rep in reports:
        out.write(rep.to_text())
        out.write("\n")
    failed = [r.name for r in reports if not r.passed]
    out.write(f"summary = {len(reports) - len(failed)}/{len(reports)} passed\n")
    if failed:
        out.write(f"failed = {','.join(failed)}\n")
    return 1 if failed else 0


COMMANDS = {
    "simulate": (cmd_simulate, {}),
    "experiment-density": (cmd_experiment_density, {
        "profile": "random-fourier", "N": "200", "omega_prime": "1", "seed": "42", "theta": "0.5",
        "T": "10", "strict": "false"}),
    "verify": (cmd_verify, {}),
    "converge": (cmd_converge, {}),
    "fields": (cmd_fields, {}),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="chainflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--N", type=int)
        p.add_argument("--T", type=float)
        p.add_argument("--engine", choices=("spectral", "verlet"))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    fn, defaults = COMMANDS[args.command]
    try:
        cfg = load_config(args, defaults)
        buf = io.StringIO()
        status = fn(cfg, buf)
    except (ConfigError, InvariantError) as exc:
        print(f"chainflow {args.command}: {exc}", file=sys.stderr)
        return 2
    except integrator.CollisionError as exc:
        print(f"chainflow {args.command}: {exc}", file=sys.stderr)
        return 3
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return status


if __name__ == "__main__":
    sys.exit(main())
