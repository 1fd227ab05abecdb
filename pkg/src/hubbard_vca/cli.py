"""Command-line entry point: ``hubbard-vca <subcommand> --config run.json``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from dataclasses import replace
from importlib import metadata
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from .config import RunConfig, load_config
from .ed import ResourceGuardError, diagonalize, lehmann_record
from .emulator import Evolution, GibbsPrepConfig, prepare_gibbs_riera
from .greens import TimeGrid, nambu_time_series, retarded_transform
from .model import ClusterModel, ConfigurationError, VariationalParams, build_cluster_hamiltonian
from .observables import bisect_filling, cpt_green, scalar_observables, spectra_and_distributions
from .operators import DomainError, PauliOperator
from .vca import LehmannBackend, TimeDomainBackend, find_saddle, potthoff_scan

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_RESOURCE = 0, 2, 3, 4


# --------------------------------------------------------------------------- helpers

def build_model(cfg: RunConfig) -> ClusterModel:
    return ClusterModel(**cfg.model.model_dump())


def build_params(cfg: RunConfig) -> VariationalParams:
    v = cfg.variational
    return VariationalParams(v.mu_prime, v.delta_prime, v.delta_d_prime, v.M_prime)


def time_grid(cfg: RunConfig) -> TimeGrid:
    return TimeGrid(cfg.grid.dtau, cfg.grid.n_max, cfg.grid.eta)


def build_backend(cfg: RunConfig):
    grid = time_grid(cfg)
    if cfg.backend.kind == "ed":
        return LehmannBackend(grid.frequency_grid())
    emu = cfg.backend.emulator
    prep = None
    if emu.gibbs == "riera":
        r = emu.riera
        prep = GibbsPrepConfig(m=r.m, r=r.r, q=r.q, lam=r.lam, target_beta=1.0 / cfg.model.T)
    return TimeDomainBackend(grid, "emulator", Evolution(emu.evolution, emu.n_T), emu.shots, cfg.seed, prep)


def _fmt(x: float) -> str:
    return repr(float(x))


class Writer:
    """Collects artifacts and their hashes for the manifest."""

    def __init__(self, out: Path):
        self.out = out
        self.out.mkdir(parents=True, exist_ok=True)
        self.hashes: dict[str, str] = {}

    def _record(self, name: str):
        self.hashes[name] = hashlib.sha256((self.out / name).read_bytes()).hexdigest()

    def csv(self, name: str, header: list[str], rows):
        with open(self.out / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
        self._record(name)

    def json(self, name: str, data: dict):
        with open(self.out / name, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._record(name)

    def manifest(self, cfg: RunConfig, command: str, seed: int, wall: float):
        versions = {"python": platform.python_version()}
        for pkg in ("numpy", "scipy", "pydantic", "artifact"):
            try:
                versions[pkg] = metadata.version(pkg)
            except metadata.PackageNotFoundError:
                versions[pkg] = "unknown"
        data = {"command": command, "config": cfg.model_dump(mode="json"), "seed": seed,
                "versions": versions, "wall_time_s": wall, "artifacts": self.hashes,
                "units": "energies in units of t, temperatures in t/k_B"}
        with open(self.out / f"manifest_{command}.json", "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _nambu_columns(L2: int) -> list[str]:
    cols = []
    for a in range(L2):
        for b in range(L2):
            cols += [f"re_G{a}{b}", f"im_G{a}{b}"]
    return cols


def _green_rows(green):
    n = green.matrices.shape[1]
    for w, mat in zip(green.omega, green.matrices):
        row = [float(w)]
        for a in range(n):
            for b in range(n):
                row += [float(mat[a, b].real), float(mat[a, b].imag)]
        yield row


# --------------------------------------------------------------------------- stages

def cmd_solve_cluster(cfg: RunConfig, w: Writer, args) -> int:
    model = build_model(cfg)
    sol = diagonalize(build_cluster_hamiltonian(model, build_params(cfg)), model.beta)
    w.csv("spectrum.csv", ["index", "energy_t", "boltzmann_weight"],
          ([i, float(e), float(p)] for i, (e, p) in enumerate(zip(sol.energies, sol.weights))))
    w.json("cluster.json", {"log_Z": sol.log_Z, "omega_prime": sol.grand_potential,
                            "ground_energy": float(sol.energies[0])})
    return EXIT_OK


def cmd_measure_gf(cfg: RunConfig, w: Writer, args) -> int:
    model = build_model(cfg)
    v = build_params(cfg)
    grid = time_grid(cfg)
    backend = build_backend(cfg)
    if isinstance(backend, TimeDomainBackend):
        record = backend.traces(model, v)
    else:
        record = lehmann_record(diagonalize(build_cluster_hamiltonian(model, v), model.beta), model.L_c, grid.tau)
    green = retarded_transform(nambu_time_series(record), grid)
    names = [f"{kind}{p}" for p in range(2 * model.L_c) for kind in ("X", "Y")]

    def trace_rows():
        for a, na in enumerate(names):
            for b, nb in enumerate(names):
                c = record.values[a, b]
                p0 = 0.5 * (1 + 0.5 * c)
                for tau, pp, cc in zip(record.tau, p0, c):
                    yield [na, nb, float(tau), float(pp), float(1 - pp), float(cc)]

    w.csv("traces.csv", ["sigma_mu", "sigma_nu", "tau_inv_t", "p0", "p1", "C"], trace_rows())
    w.csv("green.csv", ["omega_t"] + _nambu_columns(2 * model.L_c), _green_rows(green))
    w.json("grid.json", {"dtau": grid.dtau, "n_max": grid.n_max, "eta": grid.eta,
                         "omega_max": grid.omega_max, "d_omega": grid.d_omega,
                         "n_omega": len(grid.omega)})
    return EXIT_OK


def cmd_potthoff_scan(cfg: RunConfig, w: Writer, args) -> int:
    model = build_model(cfg)
    mus, deltas = cfg.scan.mu_prime.values(), cfg.scan.delta_prime.values()
    table = potthoff_scan(model, build_backend(cfg), mus, deltas, build_params(cfg))
    w.csv("scan.csv", ["mu_prime", "delta_prime", "omega_per_site"],
          ([float(m), float(d), float(table[i, j])] for i, m in enumerate(mus) for j, d in enumerate(deltas)))
    return EXIT_OK


def cmd_saddle(cfg: RunConfig, w: Writer, args) -> int:
    model = build_model(cfg)
    s = cfg.solver
    res = find_saddle(model, build_params(cfg), build_backend(cfg), h=s.h, eps_omega=s.eps_omega,
                      max_iter=s.max_iter, names=tuple(cfg.variational.active),
                      bounds=cfg.variational.bounds, max_step=s.max_step)
    p = res.params_star
    w.json("saddle.json", {"mu_prime": p.mu_prime, "delta_prime": p.delta_prime,
                           "delta_d_prime": p.delta_d_prime, "M_prime": p.M_prime,
                           "omega_per_site": res.omega_value, "gradient_norm": res.gradient_norm,
                           "iterations": res.iterations, "converged": res.converged,
                           "fallback_steps": res.diagnostics.get("fallback_steps", 0),
                           "evaluations": res.diagnostics.get("evaluations", 0)})
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_observables(cfg: RunConfig, w: Writer, args) -> int:
    model = build_model(cfg)
    v = build_params(cfg)
    if args.params:
        data = json.loads(Path(args.params).read_text(encoding="utf-8"))
        v = VariationalParams(*(float(data[k]) for k in VariationalParams.FIELDS))
    backend = build_backend(cfg)
    extra = {}
    if cfg.observables.target_filling is not None:
        mu, n = bisect_filling(model, backend, cfg.observables.target_filling, v,
                               cfg.observables.mu_bracket)
        model = replace(model, mu=mu)
        v = v.replace(mu_prime=mu)
        extra = {"mu_at_target": mu, "n_at_target": n}
    lat = cpt_green(backend.solve(model, v).green, model, v)
    sp = spectra_and_distributions(lat)
    scalars = scalar_observables(lat, sp)
    kcols = [f"k{d}" for d in range(model.dimension)]
    w.csv("spectral.csv", kcols + ["omega_t", "A", "F"],
          (list(map(float, k)) + [float(om), float(sp.A[i, j]), float(sp.F[i, j])]
           for i, k in enumerate(lat.k) for j, om in enumerate(lat.omega)))
    w.csv("distributions.csv", kcols + ["N_k", "F_k"],
          (list(map(float, k)) + [float(sp.N_k[i]), float(sp.F_k[i])] for i, k in enumerate(lat.k)))
    w.csv("dos.csv", ["omega_t", "N_omega"], ([float(a), float(b)] for a, b in zip(lat.omega, sp.dos)))
    w.json("scalars.json", {**scalars, **extra, "flagged_frequencies": list(lat.flagged),
                            "params": {k: getattr(v, k) for k in VariationalParams.FIELDS}})
    return EXIT_OK


def cmd_gibbs_study(cfg: RunConfig, w: Writer, args) -> int:
    block = cfg.gibbs_study
    if block.system == "number_operator":
        H = PauliOperator.from_symbols("n")
    else:
        H = build_cluster_hamiltonian(build_model(cfg), build_params(cfg))
    r = cfg.backend.emulator.riera
    rows = []
    for m in block.m_values:
        res = prepare_gibbs_riera(H, GibbsPrepConfig(m=m, r=r.r, q=r.q, lam=r.lam,
                                                     target_beta=block.target_beta), cfg.seed)
        rows.append([m, res.s_star, res.beta_implied, res.delta_beta, res.beta_fit, res.trace_distance,
                     res.distance_bound, res.runs_used, res.runs_bound, res.outcome_probability])
    w.csv("gibbs.csv", ["m", "s_star", "beta_implied", "delta_beta", "beta_fit", "trace_distance",
                        "distance_bound", "runs_used", "runs_bound", "outcome_probability"], rows)
    return EXIT_OK


COMMANDS = {"solve-cluster": cmd_solve_cluster, "measure-gf": cmd_measure_gf,
            "potthoff-scan": cmd_potthoff_scan, "saddle": cmd_saddle,
            "observables": cmd_observables, "gibbs-study": cmd_gibbs_study}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hubbard-vca", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="RNG seed (overrides seed)")
    p.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    p.add_argument("--backend", choices=["ed", "emulator"], help="override backend.kind")
    p.add_argument("--params", help="observables: read variational fields from a saddle.json")
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    data = cfg.model_dump()
    if args.out:
        data["output_dir"] = args.out
    if args.seed is not None:
        data["seed"] = args.seed
    if args.backend:
        data["backend"]["kind"] = args.backend
    return RunConfig.model_validate(data)


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except ValidationError as exc:
        for err in exc.errors():
            loc = ".".join(str(x) for x in err["loc"]) or "<root>"
            print(f"config error: {loc}: {err['msg']}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    writer = Writer(Path(cfg.output_dir))
    start = time.perf_counter()
    try:
        if args.threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                code = COMMANDS[args.command](cfg, writer, args)
        else:
            code = COMMANDS[args.command](cfg, writer, args)
    except (ConfigurationError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    writer.manifest(cfg, args.command, cfg.seed, time.perf_counter() - start)
    if code == EXIT_NONCONVERGED:
        print("saddle search did not converge; artifacts written", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
