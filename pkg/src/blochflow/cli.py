"""Command-line surface: config handling, pipelines, verification, export.

Exit codes: 0 success, 2 validation/config error, 3 numeric-gate or check
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time as _time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericGateError, ResourceLimitError, ValidationError
from .gqs import TWO_PI, GeometricQuantumState, extract_gqs
from .hamflow import (
    EnergyFunction,
    _energy_values,
    advect_gqs,
    check_rigidity,
    liouville_check,
)
from .kinetics import (
    KineticOperators,
    PhiEnsemble,
    build_kinetic_operators,
    decompose_hamiltonian,
    kinetic_evolve,
)
from .runio import (
    CLUSTERS_HEADER,
    ENTROPY_HEADER,
    read_cells_csv,
    read_particles_csv,
    write_cells_csv,
    write_cells_vector_csv,
    write_manifest,
    write_particles_csv,
    write_series_csv,
)
from .spinchain import (
    HamiltonianSpec,
    JointState,
    build_hamiltonian,
    evolve,
    make_propagator,
    product_state,
)
from .transport import (
    CellGrid,
    CoarseFields,
    accumulate_fields,
    check_continuity,
    cluster_count,
    entropy_series,
    fit_diffusion,
)

EMIT_CHOICES = ("particles", "cells", "entropy", "clusters", "fit")
KINETIC_MAX_ENV = 4
RIGIDITY_TOL = 1e-6
ADVECTION_ORACLE_TOL = 1e-8
ENERGY_DRIFT_TOL = 1e-8
KINETIC_ORACLE_TOL = 1e-7
HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters; defaults follow the standard open run."""

    n_env: int = 9
    j_z: float = 1.0
    b_x: float = 1.0
    b_y: float = 0.0
    b_z: float = 0.5
    coupling_range: str = "nearest"
    system_site: int = 0
    dt: float = 0.005
    steps: int = 500
    initial: str = "all_up"
    transient_cut: int = 100
    n_p: int = 20
    n_phi: int = 20
    output_dir: str = "out"
    emit: tuple = ("particles",)
    linkage_eps: float = 0.05
    weight_cut: float = 1e-6
    system_ket: tuple = (0j, 1 + 0j)
    env_kets: tuple = ()

    def hamiltonian_spec(self) -> HamiltonianSpec:
        return HamiltonianSpec(n_env=self.n_env, j_z=self.j_z,
                               field=(self.b_x, self.b_y, self.b_z),
                               coupling_range=self.coupling_range,
                               system_site=self.system_site)

    def grid(self) -> CellGrid:
        return CellGrid(self.n_p, self.n_phi)

    def initial_state(self) -> JointState:
        if self.initial == "all_up":
            up = [0.0, 1.0]
            return product_state(up, [up] * self.n_env)
        if len(self.env_kets) != self.n_env:
            raise ValidationError(
                f"custom initial state needs {self.n_env} environment kets, got {len(self.env_kets)}")
        return product_state(list(self.system_ket), [list(k) for k in self.env_kets])

    def as_dict(self) -> dict:
        return {
            "hamiltonian": {
                "n_env": self.n_env, "j_z": self.j_z,
                "b_x": self.b_x, "b_y": self.b_y, "b_z": self.b_z,
                "coupling_range": self.coupling_range, "system_site": self.system_site,
            },
            "run": {"dt": self.dt, "steps": self.steps, "initial": self.initial,
                    "transient_cut": self.transient_cut},
            "grid": {"n_p": self.n_p, "n_phi": self.n_phi},
            "clusters": {"linkage_eps": self.linkage_eps, "weight_cut": self.weight_cut},
            "output": {"dir": self.output_dir, "emit": sorted(self.emit)},
        }


_CONFIG_SCHEMA = {
    "hamiltonian": {"n_env": int, "j_z": float, "b_x": float, "b_y": float,
                    "b_z": float, "coupling_range": str, "system_site": int},
    "run": {"dt": float, "steps": int, "initial": str, "transient_cut": int},
    "grid": {"n_p": int, "n_phi": int},
    "clusters": {"linkage_eps": float, "weight_cut": float},
    "output": {"dir": str, "emit": str},
    "initial": {"system_ket": str, "env_kets": str},
}

_KEY_TO_FIELD = {
    ("hamiltonian", "n_env"): "n_env",
    ("hamiltonian", "j_z"): "j_z",
    ("hamiltonian", "b_x"): "b_x",
    ("hamiltonian", "b_y"): "b_y",
    ("hamiltonian", "b_z"): "b_z",
    ("hamiltonian", "coupling_range"): "coupling_range",
    ("hamiltonian", "system_site"): "system_site",
    ("run", "dt"): "dt",
    ("run", "steps"): "steps",
    ("run", "initial"): "initial",
    ("run", "transient_cut"): "transient_cut",
    ("grid", "n_p"): "n_p",
    ("grid", "n_phi"): "n_phi",
    ("clusters", "linkage_eps"): "linkage_eps",
    ("clusters", "weight_cut"): "weight_cut",
    ("output", "dir"): "output_dir",
}


def _parse_ket_string(text: str, label: str) -> tuple:
    parts = text.split()
    if len(parts) != 2:
        raise ValidationError(f"{label} must hold two complex amplitudes, got {text!r}")
    try:
        return tuple(complex(p) for p in parts)
    except ValueError:
        raise ValidationError(f"{label} has a malformed complex number in {text!r}") from None


def _parse_emit(text: str) -> tuple:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    for item in items:
        if item not in EMIT_CHOICES:
            raise ValidationError(
                f"unknown emit target {item!r}; choose from {', '.join(EMIT_CHOICES)}")
    return items


def load_config(path) -> dict:
    """Read an INI-style config into {field: value}; unknown keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        parser.read_file(f)
    out: dict = {}
    for section in parser.sections():
        if section not in _CONFIG_SCHEMA:
            raise ValidationError(f"{path}: unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _CONFIG_SCHEMA[section]:
                raise ValidationError(f"{path}: unknown key '{key}' in section [{section}]")
            if section == "output" and key == "emit":
                out["emit"] = _parse_emit(raw)
            elif section == "initial" and key == "system_ket":
                out["system_ket"] = _parse_ket_string(raw, "system_ket")
            elif section == "initial" and key == "env_kets":
                kets = [s for s in (part.strip() for part in raw.split(";")) if s]
                out["env_kets"] = tuple(_parse_ket_string(k, "env_kets entry") for k in kets)
            else:
                caster = _CONFIG_SCHEMA[section][key]
                try:
                    out[_KEY_TO_FIELD[(section, key)]] = caster(raw)
                except ValueError:
                    raise ValidationError(
                        f"{path}: key '{key}' in [{section}] is not a valid {caster.__name__}: {raw!r}"
                    ) from None
    return out


def resolve_config(args) -> RunConfig:
    """Config file first, then command-line flags override field by field."""
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    for attr in ("n_env", "j_z", "b_x", "b_y", "b_z", "coupling_range", "system_site",
                 "dt", "steps", "initial", "transient_cut", "n_p", "n_phi",
                 "output_dir", "linkage_eps", "weight_cut"):
        flag = getattr(args, attr, None)
        if flag is not None:
            values[attr] = flag
    if getattr(args, "emit", None) is not None:
        values["emit"] = _parse_emit(args.emit)
    cfg = RunConfig(**values)
    if cfg.initial not in ("all_up", "custom"):
        raise ValidationError(f"initial must be all_up or custom, got {cfg.initial!r}")
    if cfg.dt <= 0 or not np.isfinite(cfg.dt):
        raise ValidationError(f"dt must be positive, got {cfg.dt!r}")
    if cfg.steps < 1:
        raise ValidationError(f"steps must be at least 1, got {cfg.steps}")
    return cfg


# ------------------------------------------------------------------ commands


def _field_times(snapshots) -> np.ndarray:
    return np.array([s.time for s in snapshots])


def _write_field_products(out_dir: Path, cfg: RunConfig, snapshots, written: list) -> None:
    need_fields = any(k in cfg.emit for k in ("cells", "entropy", "fit"))
    fields = None
    if need_fields:
        fields = accumulate_fields(snapshots, cfg.grid(), cfg.dt)
        times = _field_times(snapshots)
    if fields is not None and "cells" in cfg.emit:
        write_cells_csv(out_dir / "cells_mu.csv", times, fields.mu)
        write_cells_csv(out_dir / "cells_flux.csv", times[:-1], fields.flux)
        write_cells_csv(out_dir / "cells_sigma.csv", times[:-1], fields.sigma)
        write_cells_vector_csv(out_dir / "cells_fluxvec.csv", times[:-1], fields.flux_vector)
        written += [out_dir / "cells_mu.csv", out_dir / "cells_flux.csv",
                    out_dir / "cells_sigma.csv", out_dir / "cells_fluxvec.csv"]
    if fields is not None and "entropy" in cfg.emit:
        series = entropy_series(fields)
        write_series_csv(out_dir / "entropy.csv", ENTROPY_HEADER,
                         [(times[t], series[t]) for t in range(len(series))])
        written.append(out_dir / "entropy.csv")
    if "clusters" in cfg.emit:
        rows = [(s.time, cluster_count(s, cfg.linkage_eps, cfg.weight_cut)) for s in snapshots]
        write_series_csv(out_dir / "clusters.csv", CLUSTERS_HEADER, rows)
        written.append(out_dir / "clusters.csv")
    if fields is not None and "fit" in cfg.emit:
        fit = fit_diffusion(fields, cfg.transient_cut)
        body = {"gamma_p": fit.gamma_p, "gamma_phi": fit.gamma_phi,
                "gamma_loss": fit.gamma_loss, "residual": fit.residual}
        with open(out_dir / "fit.json", "w", encoding="utf-8", newline="\n") as f:
            json.dump(body, f, indent=2, sort_keys=True)
            f.write("\n")
        written.append(out_dir / "fit.json")


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    spec = cfg.hamiltonian_spec()
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    prop = make_propagator(build_hamiltonian(spec), cfg.dt)
    states = evolve(cfg.initial_state(), prop, cfg.steps)
    snapshots = [extract_gqs(s) for s in states]

    written: list = []
    write_particles_csv(out_dir / "particles.csv", snapshots)
    written.append(out_dir / "particles.csv")
    _write_field_products(out_dir, cfg, snapshots, written)

    manifest = out_dir / "run_manifest.json"
    config_dict = cfg.as_dict()
    config_dict["command"] = "simulate"
    write_manifest(manifest, config_dict, written)
    n_rows = (cfg.steps + 1) * snapshots[0].n_particles
    print(f"simulate: wrote {len(written)} files to {out_dir} "
          f"({n_rows} particle rows, {snapshots[0].n_particles} particles)")
    return 0


def cmd_coarsegrain(args) -> int:
    snapshots = read_particles_csv(args.particles)
    if len(snapshots) < 2:
        raise ValidationError("need at least two snapshots to coarse-grain")
    times = _field_times(snapshots)
    dt = float(times[1] - times[0])
    if dt <= 0:
        raise ValidationError(f"snapshot times must increase, got spacing {dt!r}")
    grid = CellGrid(args.n_p, args.n_phi)
    fields = accumulate_fields(snapshots, grid, dt)

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    write_cells_csv(out_dir / "cells_mu.csv", times, fields.mu)
    write_cells_csv(out_dir / "cells_flux.csv", times[:-1], fields.flux)
    write_cells_csv(out_dir / "cells_sigma.csv", times[:-1], fields.sigma)
    write_cells_vector_csv(out_dir / "cells_fluxvec.csv", times[:-1], fields.flux_vector)
    series = entropy_series(fields)
    write_series_csv(out_dir / "entropy.csv", ENTROPY_HEADER,
                     [(times[t], series[t]) for t in range(len(series))])
    written += [out_dir / "cells_mu.csv", out_dir / "cells_flux.csv",
                out_dir / "cells_sigma.csv", out_dir / "cells_fluxvec.csv",
                out_dir / "entropy.csv"]
    report = check_continuity(fields)
    config_dict = {"command": "coarsegrain", "particles": str(args.particles),
                   "grid": {"n_p": args.n_p, "n_phi": args.n_phi}, "dt": dt}
    write_manifest(out_dir / "run_manifest.json", config_dict, written)

    print(f"continuity: max residual {report.max_residual:.3e}, "
          f"mass error {report.max_mu_sum_error:.3e}, "
          f"sigma sum {report.max_sigma_sum:.3e}, flux sum {report.max_flux_sum:.3e}")
    print(f"continuity: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 3


def cmd_isolated(args) -> int:
    h = np.array([[args.h00, args.h01_re + 1j * args.h01_im],
                  [args.h01_re - 1j * args.h01_im, args.h11]])
    ef = EnergyFunction(h)
    rng = np.random.default_rng(args.seed)
    n = args.cloud_n
    if n < 2:
        raise ValidationError("cloud needs at least 2 particles")
    if not 0.0 <= args.p_min < args.p_max <= 1.0:
        raise ValidationError("cloud needs 0 <= p-min < p-max <= 1")
    points = np.column_stack([rng.uniform(args.p_min, args.p_max, n),
                              rng.uniform(0.0, TWO_PI, n)])
    chis = np.column_stack([np.sqrt(1.0 - points[:, 0]).astype(complex),
                            np.sqrt(points[:, 0]) * np.exp(1j * points[:, 1])])
    cloud = GeometricQuantumState(weights=np.full(n, 1.0 / n), chis=chis, points=points,
                                  coordinate_defined=np.ones(n, dtype=bool), time=0.0)

    snapshots = advect_gqs(ef, cloud, args.dt, args.steps)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_particles_csv(out_dir / "particles.csv", snapshots)
    fields = accumulate_fields(snapshots, CellGrid(args.n_p, args.n_phi), args.dt)
    times = _field_times(snapshots)
    write_cells_csv(out_dir / "cells_mu.csv", times, fields.mu)
    write_cells_csv(out_dir / "cells_flux.csv", times[:-1], fields.flux)
    write_cells_csv(out_dir / "cells_sigma.csv", times[:-1], fields.sigma)
    written = [out_dir / "particles.csv", out_dir / "cells_mu.csv",
               out_dir / "cells_flux.csv", out_dir / "cells_sigma.csv"]
    write_manifest(out_dir / "run_manifest.json",
                   {"command": "isolated", "h": [[args.h00, args.h01_re, args.h01_im], [args.h11]],
                    "cloud_n": n, "seed": args.seed, "dt": args.dt, "steps": args.steps},
                   written)

    failures = []
    total_t = args.steps * args.dt

    from .gqs import BlochPoint
    bloch_points = [BlochPoint(float(points[a, 0]), float(points[a, 1])) for a in range(n)]
    drift = check_rigidity(ef, bloch_points, args.dt, args.steps)
    ok = drift < RIGIDITY_TOL
    print(f"rigidity: max pairwise drift {drift:.3e} {'PASS' if ok else 'FAIL'}")
    if not ok:
        failures.append("rigidity")

    energies = np.stack([_energy_values(ef.h, s.points[:, 0], s.points[:, 1])
                         for s in snapshots])
    energy_drift = float(np.max(np.abs(energies - energies[0]))) / total_t
    ok = energy_drift < ENERGY_DRIFT_TOL
    print(f"energy drift: {energy_drift:.3e} per unit time {'PASS' if ok else 'FAIL'}")
    if not ok:
        failures.append("energy drift (reduce dt)")

    if ef.is_diagonal:
        expected_phi = (points[:, 1] - ef.omega * total_t) % TWO_PI
        got_phi = snapshots[-1].points[:, 1]
        diff = np.abs(got_phi - expected_phi)
        diff = np.minimum(diff, TWO_PI - diff)
        adv_err = float(np.max(diff))
        p_err = float(np.max(np.abs(snapshots[-1].points[:, 0] - points[:, 0])))
        ok = adv_err < ADVECTION_ORACLE_TOL and p_err < ADVECTION_ORACLE_TOL
        print(f"advection oracle: phase error {adv_err:.3e}, mass error {p_err:.3e} "
              f"{'PASS' if ok else 'FAIL'}")
        if not ok:
            failures.append("advection oracle")

    report = liouville_check(ef, cloud, args.dt, min(args.steps, 200))
    print(f"volume preservation: area drift {report.max_area_drift:.3e} "
          f"{'PASS' if report.passed else 'FAIL'}")
    if not report.passed:
        failures.append("volume preservation")

    if failures:
        print(f"isolated: FAIL ({', '.join(failures)})")
        return 3
    print("isolated: PASS")
    return 0


def _corrupted(ops: KineticOperators, zero_v: bool, corrupt_v: bool) -> KineticOperators:
    if not (zero_v or corrupt_v):
        return ops
    v = np.array(ops.v)
    if zero_v:
        v[:] = 0.0
    if corrupt_v:
        v[:, :, 0, 1] += 1e-3
    return KineticOperators(h_alpha=ops.h_alpha, v=v)


def cmd_kinetic_verify(args) -> int:
    if args.n_env > KINETIC_MAX_ENV:
        raise ResourceLimitError(
            f"kinetic verification is limited to n_env <= {KINETIC_MAX_ENV}, got {args.n_env}")
    spec = HamiltonianSpec(n_env=args.n_env, j_z=args.j_z,
                           field=(args.b_x, args.b_y, args.b_z))
    h_s, h_e, inter = decompose_hamiltonian(spec)
    ops = _corrupted(build_kinetic_operators(h_s, h_e, inter),
                     args.debug_zero_v, args.debug_corrupt_v)

    h_res = max(float(np.max(np.abs(ops.h_alpha[a] - ops.h_alpha[a].conjugate().T)))
                for a in range(ops.d_e))
    v_res = float(np.max(np.abs(np.transpose(ops.v.conjugate(), (1, 0, 3, 2)) - ops.v)))
    herm_ok = h_res < HERMITICITY_TOL and v_res < HERMITICITY_TOL
    print(f"hermiticity: H residual {h_res:.3e}, V residual {v_res:.3e} "
          f"{'PASS' if herm_ok else 'FAIL'}")
    if not herm_ok:
        print("kinetic-verify: FAIL (hermiticity)")
        return 3

    up = [0.0, 1.0]
    state = product_state(up, [up] * args.n_env)
    started = _time.perf_counter()
    ens = kinetic_evolve(ops, PhiEnsemble(phis=state.amplitudes.T.copy(), time=0.0),
                         args.dt, args.steps)
    prop = make_propagator(build_hamiltonian(spec), args.dt)
    states = evolve(state, prop, args.steps)
    elapsed = _time.perf_counter() - started

    deviation = max(float(np.max(np.linalg.norm(e.phis - s.amplitudes.T, axis=1)))
                    for e, s in zip(ens, states))
    ok = deviation < KINETIC_ORACLE_TOL
    print(f"kinetic oracle: max amplitude deviation {deviation:.3e} over {args.steps} steps "
          f"({elapsed:.2f}s) {'PASS' if ok else 'FAIL'}")
    print(f"kinetic-verify: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 3


def cmd_fit_diffusion(args) -> int:
    times, mu = read_cells_csv(args.cells)
    if len(times) < 2:
        raise ValidationError("need at least two snapshots to fit")
    dt = float(times[1] - times[0])
    if dt <= 0:
        raise ValidationError(f"snapshot times must increase, got spacing {dt!r}")
    n_p, n_phi = mu.shape[1], mu.shape[2]
    steps = mu.shape[0] - 1
    fields = CoarseFields(grid=CellGrid(n_p, n_phi), dt=dt, mu=mu,
                          flux=np.zeros((steps, n_p, n_phi)),
                          sigma=np.zeros((steps, n_p, n_phi)),
                          flux_vector=np.zeros((steps, n_p, n_phi, 2)))
    fit = fit_diffusion(fields, args.t_start)
    body = {"gamma_p": fit.gamma_p, "gamma_phi": fit.gamma_phi,
            "gamma_loss": fit.gamma_loss, "residual": fit.residual}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        json.dump(body, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"fit: gamma_p {fit.gamma_p:.6g}, gamma_phi {fit.gamma_phi:.6g}, "
          f"gamma_loss {fit.gamma_loss:.6g}, residual {fit.residual:.3e}")
    return 0


def _verify_line(name: str, value: float, tol: float, failures: list) -> None:
    ok = value < tol
    print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (tolerance {tol:g})")
    if not ok:
        failures.append(name)


def cmd_verify_suite(args) -> int:
    failures: list = []

    spec = HamiltonianSpec(n_env=3, j_z=1.0, field=(1.0, 0.0, 0.5))
    h_s, h_e, inter = decompose_hamiltonian(spec)
    ops = build_kinetic_operators(h_s, h_e, inter)
    up = [0.0, 1.0]
    state = product_state(up, [up] * 3)
    ens = kinetic_evolve(ops, PhiEnsemble(phis=state.amplitudes.T.copy(), time=0.0), 0.005, 100)
    states = evolve(state, make_propagator(build_hamiltonian(spec), 0.005), 100)
    deviation = max(float(np.max(np.linalg.norm(e.phis - s.amplitudes.T, axis=1)))
                    for e, s in zip(ens, states))
    _verify_line("kinetic oracle", deviation, KINETIC_ORACLE_TOL, failures)

    v_res = float(np.max(np.abs(np.transpose(ops.v.conjugate(), (1, 0, 3, 2)) - ops.v)))
    _verify_line("coupling hermiticity", v_res, HERMITICITY_TOL, failures)

    snapshots = [extract_gqs(s) for s in states]
    fields = accumulate_fields(snapshots, CellGrid(20, 20), 0.005)
    report = check_continuity(fields)
    _verify_line("continuity residual", report.max_residual, 1e-12, failures)

    from .gqs import BlochPoint
    ef = EnergyFunction(np.array([[0.5, 1.0], [1.0, -0.5]], dtype=complex))
    rng = np.random.default_rng(59)
    pts = [BlochPoint(rng.uniform(0.2, 0.8), rng.uniform(0, TWO_PI)) for _ in range(10)]
    drift = check_rigidity(ef, pts, 1e-3, 1000)
    _verify_line("rigidity drift", drift, RIGIDITY_TOL, failures)

    diag = EnergyFunction(np.diag([0.0, 1.5]).astype(complex))
    n = 40
    points = np.column_stack([rng.uniform(0.1, 0.9, n), rng.uniform(0, TWO_PI, n)])
    chis = np.column_stack([np.sqrt(1.0 - points[:, 0]).astype(complex),
                            np.sqrt(points[:, 0]) * np.exp(1j * points[:, 1])])
    cloud = GeometricQuantumState(weights=np.full(n, 1.0 / n), chis=chis, points=points,
                                  coordinate_defined=np.ones(n, dtype=bool), time=0.0)
    advected = advect_gqs(diag, cloud, 1e-3, 500)
    expected_phi = (points[:, 1] - diag.omega * 0.5) % TWO_PI
    diff = np.abs(advected[-1].points[:, 1] - expected_phi)
    adv_err = float(np.max(np.minimum(diff, TWO_PI - diff)))
    _verify_line("advection oracle", adv_err, ADVECTION_ORACLE_TOL, failures)

    lio = liouville_check(EnergyFunction(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)),
                          _interior_cloud(), 1e-3, 500)
    _verify_line("volume drift", lio.max_area_drift, 0.01, failures)

    rng2 = np.random.default_rng(8)
    mu0 = rng2.uniform(0.5, 1.5, (20, 20))
    mu0 /= mu0.sum()
    mu = _forward_model(mu0, 0.3, 0.7, 0.01, 40)
    steps = mu.shape[0] - 1
    planted = CoarseFields(grid=CellGrid(20, 20), dt=0.01, mu=mu,
                           flux=np.zeros((steps, 20, 20)), sigma=np.zeros((steps, 20, 20)),
                           flux_vector=np.zeros((steps, 20, 20, 2)))
    fit = fit_diffusion(planted, 0)
    rel = max(abs(fit.gamma_p - 0.3) / 0.3, abs(fit.gamma_phi - 0.7) / 0.7)
    _verify_line("diffusion recovery", rel, 1e-6, failures)

    print(f"verify: {'PASS' if not failures else 'FAIL (' + ', '.join(failures) + ')'}")
    return 0 if not failures else 3


def _interior_cloud() -> GeometricQuantumState:
    points = np.array([[0.3, 0.5], [0.5, 5.5], [0.65, 2.9]])
    chis = np.column_stack([np.sqrt(1.0 - points[:, 0]).astype(complex),
                            np.sqrt(points[:, 0]) * np.exp(1j * points[:, 1])])
    return GeometricQuantumState(weights=np.full(3, 1.0 / 3.0), chis=chis, points=points,
                                 coordinate_defined=np.ones(3, dtype=bool), time=0.0)


def _forward_model(mu0, gamma_p, gamma_phi, dt, steps):
    out = np.empty((steps + 1,) + mu0.shape)
    out[0] = mu0
    mu = mu0.copy()
    for n in range(steps):
        padded = np.pad(mu, ((1, 1), (0, 0)), mode="edge")
        lap_p = padded[:-2, :] + padded[2:, :] - 2.0 * mu
        lap_f = np.roll(mu, 1, axis=1) + np.roll(mu, -1, axis=1) - 2.0 * mu
        mu = mu + dt * (gamma_p * lap_p + gamma_phi * lap_f)
        out[n + 1] = mu
    return out


# --------------------------------------------------------------- arg parsing


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file; flags override its values")
    p.add_argument("--n-env", dest="n_env", type=int)
    p.add_argument("--j-z", dest="j_z", type=float)
    p.add_argument("--b-x", dest="b_x", type=float)
    p.add_argument("--b-y", dest="b_y", type=float)
    p.add_argument("--b-z", dest="b_z", type=float)
    p.add_argument("--coupling-range", dest="coupling_range",
                   choices=["nearest", "next_nearest"])
    p.add_argument("--system-site", dest="system_site", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--initial", choices=["all_up", "custom"])
    p.add_argument("--transient-cut", dest="transient_cut", type=int)
    p.add_argument("--n-p", dest="n_p", type=int)
    p.add_argument("--n-phi", dest="n_phi", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--emit", help="comma list from: " + ",".join(EMIT_CHOICES))
    p.add_argument("--linkage-eps", dest="linkage_eps", type=float)
    p.add_argument("--weight-cut", dest="weight_cut", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blochflow",
        description="Qubit-environment information transport on the Bloch square")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="evolve the chain and export the particle swarm")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coarsegrain", help="cell fields and continuity check from a particles file")
    p.add_argument("particles", help="path to particles.csv")
    p.add_argument("--n-p", dest="n_p", type=int, default=20)
    p.add_argument("--n-phi", dest="n_phi", type=int, default=20)
    p.add_argument("--output-dir", dest="output_dir", default="out")
    p.set_defaults(func=cmd_coarsegrain)

    p = sub.add_parser("isolated", help="advect a chart cloud under a fixed 2x2 generator")
    p.add_argument("--h00", type=float, default=0.0)
    p.add_argument("--h11", type=float, default=1.0)
    p.add_argument("--h01-re", dest="h01_re", type=float, default=0.0)
    p.add_argument("--h01-im", dest="h01_im", type=float, default=0.0)
    p.add_argument("--cloud-n", dest="cloud_n", type=int, default=100)
    p.add_argument("--p-min", dest="p_min", type=float, default=0.2)
    p.add_argument("--p-max", dest="p_max", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--n-p", dest="n_p", type=int, default=20)
    p.add_argument("--n-phi", dest="n_phi", type=int, default=20)
    p.add_argument("--output-dir", dest="output_dir", default="out")
    p.set_defaults(func=cmd_isolated)

    p = sub.add_parser("kinetic-verify", help="check per-particle dynamics against global evolution")
    p.add_argument("--n-env", dest="n_env", type=int, default=3)
    p.add_argument("--j-z", dest="j_z", type=float, default=1.0)
    p.add_argument("--b-x", dest="b_x", type=float, default=1.0)
    p.add_argument("--b-y", dest="b_y", type=float, default=0.0)
    p.add_argument("--b-z", dest="b_z", type=float, default=0.5)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--debug-zero-v", dest="debug_zero_v", action="store_true",
                   help="zero the coupling blocks before integrating")
    p.add_argument("--debug-corrupt-v", dest="debug_corrupt_v", action="store_true",
                   help="break coupling hermiticity to exercise the gate")
    p.set_defaults(func=cmd_kinetic_verify)

    p = sub.add_parser("fit-diffusion", help="fit the exchange model to a cells_mu file")
    p.add_argument("cells", help="path to cells_mu.csv")
    p.add_argument("--t-start", dest="t_start", type=int, default=100)
    p.add_argument("--out", default="fit.json")
    p.set_defaults(func=cmd_fit_diffusion)

    p = sub.add_parser("verify", help="run the whole invariant suite")
    p.set_defaults(func=cmd_verify_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericGateError as err:
        print(f"numeric gate: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
