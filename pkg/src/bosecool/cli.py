"""Scenario runner.

Configs are flat ``key = value`` documents with ``#`` comments. A config may
start from a preset (``preset = fig2b``) and override any key.

    bosecool list-presets
    bosecool simulate fig2a --seed 3 --out runs/fig2a
    bosecool simulate my.cfg --ensemble 4
    bosecool dump-rates fig5a --out tables/
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass, fields, replace
from importlib import metadata
from pathlib import Path

import numpy as np

from . import analysis, kinetics
from .oscillator import fc_matrix, write_delta_c_table, write_fc_table
from .rates1d import Collision1DParams, CoolingParams, TrapModel, build_rate_tables
from .rates3d import DELTA_DEFAULT, ShellModel, shell_cooling_table

MODES = ("one_d", "three_d_ergodic")
PATTERNS = ("isotropic", "dipole")
CYCLES = ("fig2_1d", "fig5a_3d", "fig5b_3d", "none")
KINDS = ("simulate", "rate_table")


class ConfigError(ValueError):
    def __init__(self, key, line, msg):
        where = f"line {line}" if line else "config"
        super().__init__(f"{where}: {key}: {msg}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str = "one_d"
    kind: str = "simulate"
    eta: float = 3.0
    gamma: float = 0.04
    Omega: float = 0.03
    N: int = 133
    nmax: int = 39
    r: float = 0.0
    Delta: float = DELTA_DEFAULT
    cycle: str = "fig2_1d"
    pulses: str = ""
    n_cycles: int = 15000
    warmup_cycles: int = 5000
    window_end: int = -1
    target: int = 1
    mean_n: float = 6.0
    seed: int = 0
    collisions: bool = True
    equilibrate: bool = False
    equilibration_window: int = 100_000
    equilibration_tol: float = 0.01
    stationary_batches: int = 40
    event_log: bool = False
    dipole_pattern: str = "isotropic"
    angular_nodes: int = 48
    guard: int = 10

    @property
    def window(self):
        end = self.n_cycles if self.window_end < 0 else self.window_end
        return self.warmup_cycles, end

    def to_text(self):
        """Canonical flat echo; parsing it gives back the same config."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}

_BASE_1D = dict(mode="one_d", eta=3.0, gamma=0.04, Omega=0.03, N=133, nmax=39,
                cycle="fig2_1d", n_cycles=15000, warmup_cycles=5000, target=1, mean_n=6.0)
_BASE_3D = dict(mode="three_d_ergodic", eta=2.0, gamma=0.04, Omega=0.03, N=133, nmax=14,
                Delta=DELTA_DEFAULT, mean_n=6.0, target=0, equilibrate=True,
                warmup_cycles=0, guard=10)

PRESETS = {
    "fig1": (dict(_BASE_1D, kind="rate_table", cycle="none", n_cycles=1, warmup_cycles=0),
             "Fig. 1", "one-atom emptying factors |<n+s|e^ikx|n>|^2, s = 8 and -3, eta = 3"),
    "fig2a": (dict(_BASE_1D, r=0.0), "Fig. 2(a)", "1D excited-state cooling into n = 1, ideal gas"),
    "fig2b": (dict(_BASE_1D, r=0.4), "Fig. 2(b)", "1D cooling, r = 0.4: peaks at n = 1 and n = 7"),
    "fig2c": (dict(_BASE_1D, r=0.8), "Fig. 2(c)", "1D cooling, r = 0.8"),
    "fig2d": (dict(_BASE_1D, r=1.2), "Fig. 2(d)", "1D cooling, r = 1.2"),
    "fig2e": (dict(_BASE_1D, r=5.0), "Fig. 2(e)", "1D cooling, r = 5.0: collision dominated"),
    "fig3": (dict(_BASE_1D, r=0.4), "Fig. 3",
             "1D, r = 0.4: per-cycle N_1 / N_7 pseudo-oscillation"),
    "fig4": (dict(_BASE_3D, cycle="none", n_cycles=1), "Fig. 4",
             "3D shells, collisions only: stationary distribution from <n> = 6"),
    "fig5a": (dict(_BASE_3D, cycle="fig5a_3d", n_cycles=1200), "Fig. 5(a) solid",
              "3D ground-state cooling, pulses s = -4, 0 (A_z = 1, -2), collisions on"),
    "fig5b": (dict(_BASE_3D, cycle="fig5b_3d", n_cycles=2000), "Fig. 5(b) solid",
              "3D ground-state cooling, pulse s = -4 only, collisions on"),
    "fig5a_nocoll": (dict(_BASE_3D, cycle="fig5a_3d", n_cycles=1200, collisions=False),
                     "Fig. 5(a) dashed", "as fig5a with collisions off during cooling"),
    "fig5b_nocoll": (dict(_BASE_3D, cycle="fig5b_3d", n_cycles=2000, collisions=False),
                     "Fig. 5(b) dashed", "as fig5b with collisions off during cooling"),
}


def list_presets():
    return [(name, fig, desc) for name, (_, fig, desc) in PRESETS.items()]


def preset_config(name, **overrides):
    if name not in PRESETS:
        raise ConfigError("preset", None, f"unknown preset {name!r}")
    return validate(replace(ScenarioConfig(), **dict(PRESETS[name][0], **overrides)))


def _convert(key, raw, line):
    typ = _FIELD_TYPES[key]
    try:
        if typ == "bool":
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(key, line, f"expected {typ}, got {raw!r}") from None


def _positive(cfg, key, lines, allow_zero=False):
    v = getattr(cfg, key)
    if v < 0 or (v == 0 and not allow_zero):
        raise ConfigError(key, lines.get(key), f"must be {'>=' if allow_zero else '>'} 0, got {v}")


def validate(cfg, lines=None):
    lines = lines or {}
    for key, choices in (("mode", MODES), ("kind", KINDS), ("cycle", CYCLES),
                         ("dipole_pattern", PATTERNS)):
        if getattr(cfg, key) not in choices:
            raise ConfigError(key, lines.get(key), f"must be one of {choices}")
    for key in ("eta", "gamma", "Omega", "N", "n_cycles", "mean_n", "equilibration_window",
                "equilibration_tol", "angular_nodes", "stationary_batches"):
        _positive(cfg, key, lines)
    for key in ("nmax", "r", "Delta", "warmup_cycles", "guard", "seed"):
        _positive(cfg, key, lines, allow_zero=True)
    start, end = cfg.window
    if not 0 <= start < end <= cfg.n_cycles:
        raise ConfigError("warmup_cycles" if "window_end" not in lines else "window_end",
                          lines.get("window_end", lines.get("warmup_cycles")),
                          f"average window ({start}, {end}] must lie inside (0, {cfg.n_cycles}]")
    if not 0 <= cfg.target <= cfg.nmax:
        raise ConfigError("target", lines.get("target"), f"must be a level in 0..{cfg.nmax}")
    if cfg.pulses:
        _parse_pulses(cfg.pulses, lines.get("pulses"))
    return cfg


def parse_config(text):
    """Parse a flat config document into a validated :class:`ScenarioConfig`."""
    values, lines = {}, {}
    preset = None
    for i, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(body, i, "expected 'key = value'")
        key, value = (s.strip() for s in body.split("=", 1))
        if key == "preset":
            preset = (value, i)
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(key, i, "unknown key")
        if key in values:
            raise ConfigError(key, i, f"duplicate key (first set on line {lines[key]})")
        values[key] = _convert(key, value, i)
        lines[key] = i
    if preset is not None:
        if preset[0] not in PRESETS:
            raise ConfigError("preset", preset[1], f"unknown preset {preset[0]!r}")
        base = dict(PRESETS[preset[0]][0])
    else:
        base = {}
    base.update(values)
    cfg = validate(replace(ScenarioConfig(), **base), lines)
    if preset is None:
        for key in ("mode", "eta", "N", "n_cycles"):
            if key not in values:
                raise ConfigError(key, None, "missing required key (or give a preset)")
    return cfg


def _parse_pulses(text, line=None):
    """``s[@Ax,Ay,Az][:duration]`` entries separated by ';'."""
    pulses = []
    for item in filter(None, (p.strip() for p in text.split(";"))):
        try:
            dur = None
            if ":" in item:
                item, d = item.split(":", 1)
                dur = float(d)
            amps = (1.0, 1.0, 1.0)
            if "@" in item:
                item, a = item.split("@", 1)
                amps = tuple(complex(x.strip()) for x in a.split(","))
            pulses.append(kinetics.PulseSpec(int(item), duration=dur, axis_amplitudes=amps))
        except ValueError as exc:
            raise ConfigError("pulses", line, f"bad pulse entry {item!r}: {exc}") from None
    if not pulses:
        raise ConfigError("pulses", line, "empty pulse list")
    return kinetics.CoolingCycle(tuple(pulses))


def build_cycle(cfg):
    if cfg.pulses:
        return _parse_pulses(cfg.pulses)
    if cfg.cycle == "none":
        return None
    return kinetics.standard_cycles(cfg.cycle)


def build_channels(cfg, collisions=None, tables=None):
    cooling = CoolingParams(gamma=cfg.gamma, Omega=cfg.Omega, dipole_pattern=cfg.dipole_pattern)
    coll = cfg.collisions if collisions is None else collisions
    if cfg.mode == "one_d":
        trap = TrapModel(eta=cfg.eta, nmax=cfg.nmax, guard=cfg.guard,
                         angular_nodes=cfg.angular_nodes, dipole_pattern=cfg.dipole_pattern)
        return kinetics.Channels.one_d(trap, Collision1DParams(r=cfg.r), cooling,
                                       collisions=coll, tables=tables)
    model = ShellModel(nmax=cfg.nmax, Delta=cfg.Delta)
    return kinetics.Channels.shells(model, cfg.eta, cooling, collisions=coll)


def code_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def manifest_hash(cfg):
    text = cfg.to_text() + f"version = {code_version()}\n"
    return hashlib.sha256(text.encode()).hexdigest()


def _headers(cfg, name):
    return [f"manifest_hash={manifest_hash(cfg)}", f"{name} seed={cfg.seed}"]


def rate_table_fig1(eta=3.0, shifts=(8, -3), n_levels=10):
    """Rows (s, n, |<n+s|e^{i eta x}|n>|^2); zero where n+s < 0."""
    F = fc_matrix(n_levels + max(shifts) + 1, n_levels, eta)
    rows = []
    for s in shifts:
        for n in range(n_levels):
            rows.append((s, n, float(abs(F[n + s, n]) ** 2) if n + s >= 0 else 0.0))
    return rows


def _write_csv(path, header, rows, comments=()):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for r in rows:
            out.writerow([repr(v) if isinstance(v, float) else v for v in r])


def _prepare(cfg, rng, channels_coll):
    N = analysis.sample_thermal(cfg.mean_n, cfg.N, cfg.nmax, rng)
    info = None
    if cfg.equilibrate:
        N, info = analysis.equilibrate_collisions(
            N, channels_coll, rng, window=cfg.equilibration_window,
            tol=cfg.equilibration_tol, return_info=True)
    return N, info


def _run_one(cfg, seed_seq, out_dir):
    """One trajectory; returns a summary dict for the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed_seq)
    channels = build_channels(cfg)
    channels_coll = channels if cfg.collisions else build_channels(cfg, collisions=True)
    heads = _headers(cfg, cfg.mode)
    N0, info = _prepare(cfg, rng, channels_coll)
    summary = {"initial_state": N0.tolist()}
    if info is not None:
        summary["equilibration"] = {"events": info.events, "windows": info.windows,
                                    "last_drift": info.drifts[-1] if info.drifts else None}
    cycle = build_cycle(cfg)
    if cycle is None:
        st = analysis.stationary_average(N0, channels_coll, rng,
                                         n_batches=cfg.stationary_batches,
                                         batch_events=cfg.equilibration_window)
        _write_csv(out_dir / "stationary.csv", ["n", "mean", "stderr"],
                   [(n, float(m), float(s)) for n, (m, s) in enumerate(zip(st.mean, st.stderr))],
                   heads)
        summary["stationary_mean"] = st.mean.tolist()
        summary["stationary_stderr"] = st.stderr.tolist()
        return summary, st.mean
    traj = kinetics.run_cycles(N0, cycle, cfg.n_cycles, channels, rng,
                               log_events=cfg.event_log, seed=cfg.seed)
    kinetics.write_trajectory_csv(out_dir / "trajectory.csv", traj, heads)
    if cfg.event_log:
        kinetics.write_event_log_csv(out_dir / "events.csv", traj, heads)
    start, end = cfg.window
    stats = analysis.window_average(traj, start, end, target=cfg.target)
    analysis.write_stats_csv(out_dir / "stats.csv", stats, heads)
    summary.update(counters=traj.counters, peaks=stats.peaks, mean_n=stats.mean_n,
                   condensate_fraction=stats.condensate_fraction)
    return summary, stats.level_mean


def _worker(args):
    cfg_text, seed_seq, out_dir = args
    return _run_one(parse_config(cfg_text), seed_seq, out_dir)


def run_scenario(cfg, out_dir, ensemble=1, max_workers=None):
    """Run a scenario and write CSVs plus ``manifest.json`` and ``config.txt``
    into ``out_dir``. Returns the manifest dict."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    manifest = {"config": cfg.to_text(), "seed": cfg.seed, "version": code_version(),
                "manifest_hash": manifest_hash(cfg), "ensemble": ensemble}
    if cfg.kind == "rate_table":
        _write_csv(out_dir / "rates.csv", ["s", "n", "emptying_factor"],
                   rate_table_fig1(cfg.eta), _headers(cfg, "fig1"))
    elif ensemble == 1:
        summary, _ = _run_one(cfg, np.random.SeedSequence(cfg.seed), out_dir)
        manifest["runs"] = [summary]
    else:
        children = np.random.SeedSequence(cfg.seed).spawn(ensemble)
        jobs = [(cfg.to_text(), ss, out_dir / f"traj_{k:03d}") for k, ss in enumerate(children)]
        workers = max_workers or min(ensemble, os.cpu_count() or 1)
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(_worker, jobs))
        else:
            results = [_worker(j) for j in jobs]
        manifest["runs"] = [r[0] for r in results]
        pooled = np.mean([r[1] for r in results], axis=0)
        spread = np.std([r[1] for r in results], axis=0, ddof=1) / np.sqrt(ensemble)
        _write_csv(out_dir / "pooled.csv", ["n", "mean", "stderr"],
                   [(n, float(m), float(s)) for n, (m, s) in enumerate(zip(pooled, spread))],
                   _headers(cfg, "pooled"))
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def dump_rates(cfg, out_dir):
    """Write the occupation-independent tables of a scenario."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if cfg.kind == "rate_table":
        p = out_dir / "fig1_rates.csv"
        _write_csv(p, ["s", "n", "emptying_factor"], rate_table_fig1(cfg.eta))
        return [p]
    if cfg.mode == "one_d":
        trap = TrapModel(eta=cfg.eta, nmax=cfg.nmax, guard=cfg.guard,
                         angular_nodes=cfg.angular_nodes, dipole_pattern=cfg.dipole_pattern)
        tables = build_rate_tables(trap)
        p = out_dir / "franck_condon.csv"
        write_fc_table(p, cfg.eta, cfg.nmax + 1, [1.0])
        written.append(p)
        p = out_dir / "delta_c.csv"
        write_delta_c_table(p, cfg.nmax)
        written.append(p)
        p = out_dir / "emission_average.csv"
        _write_csv(p, ["l", "n", "value"],
                   [(l, n, float(tables.emit_avg[l, n]))
                    for l in range(tables.emit_avg.shape[0]) for n in range(cfg.nmax + 1)])
        written.append(p)
        return written
    model = ShellModel(nmax=cfg.nmax, Delta=cfg.Delta)
    cycle = build_cycle(cfg)
    rows = []
    for k, pulse in enumerate(cycle.pulses if cycle else ()):
        params = CoolingParams(gamma=cfg.gamma, Omega=cfg.Omega, s=pulse.s,
                               axis_amplitudes=pulse.axis_amplitudes,
                               dipole_pattern=cfg.dipole_pattern)
        tab = shell_cooling_table(model, params, cfg.eta)
        for n1 in range(cfg.nmax + 1):
            for n2 in range(cfg.nmax + 1):
                rows.append((k, n1, n2, float(tab.D[n1, n2])))
            rows.append((k, n1, -1, float(tab.over[n1])))
    p = out_dir / "shell_cooling.csv"
    _write_csv(p, ["pulse", "n1", "n2", "rate"], rows, ["n2 = -1 is the overflow total"])
    written.append(p)
    return written


def _load(spec):
    path = Path(spec)
    if path.is_file():
        return parse_config(path.read_text(encoding="utf-8"))
    if spec in PRESETS:
        return preset_config(spec)
    raise ConfigError("preset", None, f"{spec!r} is neither a config file nor a preset")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="bosecool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_sim = sub.add_parser("simulate", help="run a preset or config file")
    p_sim.add_argument("config", help="preset id or path to a key = value config")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--ensemble", type=int, default=1)
    p_sim.add_argument("--out", default=None)
    p_dump = sub.add_parser("dump-rates", help="write rate tables of a preset")
    p_dump.add_argument("config")
    p_dump.add_argument("--out", default=None)
    sub.add_parser("list-presets", help="show available presets")
    args = parser.parse_args(argv)

    try:
        if args.command == "list-presets":
            for name, fig, desc in list_presets():
                print(f"{name:14s} {fig:18s} {desc}")
            return 0
        cfg = _load(args.config)
        if args.command == "simulate":
            if args.seed is not None:
                cfg = replace(cfg, seed=args.seed)
            if args.ensemble < 1:
                raise ConfigError("ensemble", None, "must be >= 1")
            out = args.out or f"runs/{Path(args.config).stem}"
            manifest = run_scenario(cfg, out, ensemble=args.ensemble)
            print(f"wrote {out} (manifest {manifest['manifest_hash'][:12]})")
        else:
            out = args.out or f"tables/{Path(args.config).stem}"
            for p in dump_rates(cfg, out):
                print(p)
        return 0
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
