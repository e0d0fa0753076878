"""Experiment orchestration: prepare, run, archive, replay, sweep.

Every run owns one directory containing a config snapshot, the basis and
sector manifests, the spectrum, the replayable protocol, and the observable
CSVs. Archives replay bit-consistently from the protocol file alone; the
replay entry point checks that without invoking the optimizer.
"""

from __future__ import annotations

import json
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import observables, optimizer
from .config import ConfigError, ExperimentConfig, FORMAT_TAG
from .model import (EnergyShell, IsingParams, build_ising, diagonalize,
                    select_shell, spectrum_csv)
from .observables import Trajectory, d_pos, work_density
from .operators import (OperatorStack, build_basis, discrete_action_set,
                        sum_x)
from .propagate import ControlProtocol, StateBatch, evolve
from .sector import SectorBasis, build_sector_basis, manifest_checksum, sector_manifest


@dataclass
class RunContext:
    config: ExperimentConfig
    basis: SectorBasis
    H_target: np.ndarray
    eig: "object"
    shell: EnergyShell
    batch: StateBatch
    stack: OperatorStack
    kick_matrix: np.ndarray


def prepare(config: ExperimentConfig) -> RunContext:
    basis = build_sector_basis(config.L)
    model_op = build_ising(IsingParams(config.h, config.g, config.L))
    H_target = model_op.sector_matrix(basis)
    eig = diagonalize(H_target)
    shell = select_shell(eig, config.shell_lo, config.shell_hi, config.L)
    idx = list(shell.indices)
    batch = StateBatch(eig.states[:, idx], 0.0, eig.energies[idx])

    if config.mode == "optimize":
        ops = build_basis(config.L, config.k)
    elif config.mode == "quench":
        ops = [build_ising(IsingParams(config.quench_h, config.quench_g, config.L))]
    else:
        ops = discrete_action_set(config.L)
    stack = OperatorStack(ops, basis)
    kick_matrix = sum_x(config.L).sector_matrix(basis)
    return RunContext(config, basis, H_target, eig, shell, batch, stack, kick_matrix)


def _constant_gamma_protocol(ctx: RunContext) -> ControlProtocol:
    cfg = ctx.config
    n_steps = round(cfg.duration / cfg.dt)
    if abs(n_steps * cfg.dt - cfg.duration) > 1e-9:
        raise ConfigError("duration must be an integer number of steps")
    if cfg.mode == "quench":
        gamma = np.ones((n_steps, 1))
    else:
        gamma = np.zeros((len(cfg.actions), ctx.stack.n_ops))
        gamma[np.arange(len(cfg.actions)), cfg.actions] = 1.0
    return ControlProtocol(dt=cfg.dt, gamma=gamma,
                           kick_duration=cfg.kick_duration,
                           basis_checksum=ctx.stack.checksum)


def _replay_trajectory(ctx: RunContext, protocol: ControlProtocol) -> tuple[Trajectory, StateBatch]:
    """Evolve under a fixed protocol, recording the same aggregates as optimize."""
    cfg = ctx.config
    traj = Trajectory(np.asarray(ctx.shell.indices),
                      ctx.batch.origin_energies.copy())

    def observer(step, t, states):
        w = work_density(states, ctx.batch.origin_energies, ctx.H_target, cfg.L)
        traj.add_sample(step, t, optimizer.reward(w, cfg.reward), 0.0,
                        d_pos(w, cfg.dpos_epsilon), w)

    samples = sorted({0, protocol.n_steps}
                     | set(range(0, protocol.n_steps + 1, cfg.sample_every)))
    final = evolve(ctx.batch, protocol, ctx.stack, observers=[observer],
                   sample_steps=samples, kick_matrix=ctx.kick_matrix)
    return traj, final


def run(config: ExperimentConfig, compute_ee: bool = True) -> Path:
    """Execute one experiment and archive it; returns the run directory."""
    ctx = prepare(config)
    if ctx.shell.size == 0 and config.mode == "optimize":
        raise ConfigError("empty energy shell for the requested model and bounds")

    if config.mode == "optimize":
        opt_cfg = optimizer.OptimizerConfig(
            L=config.L, dt=config.dt, duration=config.duration,
            kick_duration=config.kick_duration, sample_every=config.sample_every)
        protocol, traj, final = optimizer.optimize(
            opt_cfg, config.reward, ctx.H_target, ctx.batch, ctx.stack,
            ctx.kick_matrix, dpos_epsilon=config.dpos_epsilon,
            alphas=np.asarray(ctx.shell.indices))
    else:
        protocol = _constant_gamma_protocol(ctx)
        traj, final = _replay_trajectory(ctx, protocol)

    if compute_ee and ctx.shell.size:
        traj.ee = observables.ee_records(ctx.batch.states, final.states,
                                         ctx.basis, ctx.shell.indices)
        traj.shell_mean_s0 = observables.shell_mean_initial_ee(traj.ee)

    return _archive(ctx, protocol, traj, final)


def _archive(ctx: RunContext, protocol: ControlProtocol, traj: Trajectory,
             final: StateBatch) -> Path:
    cfg = ctx.config
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg.save(outdir / "config.json")
    (outdir / "basis_manifest.txt").write_text(ctx.stack.manifest)
    sect = sector_manifest(ctx.basis)
    (outdir / "sector_manifest.txt").write_text(sect)
    (outdir / "spectrum.csv").write_text(spectrum_csv(ctx.eig, ctx.shell, cfg.L))
    protocol.save(outdir / "protocol.txt")
    (outdir / "timeseries.csv").write_text(traj.timeseries_csv())
    (outdir / "per_state.csv").write_text(traj.per_state_csv())
    summary = {
        "format": FORMAT_TAG,
        "L": cfg.L,
        "mode": cfg.mode,
        "k": cfg.k,
        "preset": cfg.preset_name(),
        "h": cfg.h,
        "g": cfg.g,
        "shell": {"lo": cfg.shell_lo, "hi": cfg.shell_hi,
                  "size": ctx.shell.size,
                  "indices": list(ctx.shell.indices)},
        "dpos_epsilon": cfg.dpos_epsilon,
        "dpos_final": traj.dpos[-1] if traj.dpos else 0,
        "t_final": traj.times[-1] if traj.times else 0.0,
        "shell_mean_initial_ee": traj.shell_mean_s0,
        "initial_ee_std": float(np.std([r.S0 for r in traj.ee])) if traj.ee else None,
        "basis_checksum": ctx.stack.checksum,
        "sector_checksum": manifest_checksum(sect),
        "eigenvector_checksum": ctx.eig.checksum(),
        "norm_drift": final.norm_drift(),
    }
    with open(outdir / "run.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return outdir


def replay(run_dir, tol: float = 1e-9) -> dict:
    """Re-evolve an archived protocol and compare final work densities."""
    run_dir = Path(run_dir)
    config = ExperimentConfig.from_file(run_dir / "config.json")
    ctx = prepare(config)
    protocol = ControlProtocol.load(run_dir / "protocol.txt")
    traj, _ = _replay_trajectory(ctx, protocol)

    archived = _final_w_from_per_state(
        (run_dir / "per_state.csv").read_text())
    replayed = traj.final_w()
    if len(archived) != len(replayed):
        raise ConfigError("archived per_state.csv does not match the shell size")
    max_dev = float(np.abs(np.asarray(archived) - replayed).max()) if len(archived) else 0.0
    return {"max_w_deviation": max_dev, "within_tolerance": bool(max_dev <= tol),
            "tolerance": tol, "n_states": len(archived)}


def _final_w_from_per_state(text: str) -> list[float]:
    rows = [ln.split(",") for ln in text.splitlines()[1:] if ln]
    t_final = max(float(r[2]) for r in rows)
    return [float(r[3]) for r in rows if float(r[2]) == t_final]


def run_scaling_sweep(template: dict, L_list, k_rule: str,
                      presets=("nonintegrable", "integrable"),
                      outdir="runs/sweep") -> list[dict]:
    """Optimize across system sizes; per-run failures isolate, sweep continues."""
    if k_rule not in ("fixed", "half"):
        raise ConfigError("k rule must be 'fixed' or 'half'")
    outdir = Path(outdir)
    rows = []
    for preset in presets:
        for L in L_list:
            data = dict(template)
            data.update(preset=preset, L=L, mode="optimize")
            if k_rule == "half":
                data["k"] = L // 2
            elif "k" not in data:
                raise ConfigError("fixed k rule needs k in the template")
            data["outdir"] = str(outdir / f"{preset}_L{L}_k{data['k']}")
            row = {"preset": preset, "L": L, "k": data["k"]}
            try:
                run_dir = run(ExperimentConfig.from_dict(data))
                summary = json.loads((run_dir / "run.json").read_text())
                row.update(status="ok", d_pos=summary["dpos_final"],
                           shell_size=summary["shell"]["size"],
                           run_dir=str(run_dir))
            except Exception as exc:  # isolate per-run failures
                row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
                traceback.print_exc()
            rows.append(row)
    outdir.mkdir(parents=True, exist_ok=True)
    ok = [(r["L"], r["k"], r["preset"], r["d_pos"], r["shell_size"])
          for r in rows if r["status"] == "ok"]
    (outdir / "fig3_scaling.csv").write_text(observables.fig3_csv(ok))
    with open(outdir / "sweep.json", "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")
    return rows


def run_threshold_sweep(run_dirs, eps_list, out_path=None) -> list[dict]:
    """Recompute D_pos from archived work records for each threshold.

    No re-simulation happens; reward parameters stay whatever the archive
    used. Thresholds wider than the energy shell are flagged since the
    gradient-based protocol is only meaningful below the shell width.
    """
    rows = []
    for run_dir in map(Path, run_dirs):
        summary = json.loads((run_dir / "run.json").read_text())
        shell_width = summary["shell"]["hi"] - summary["shell"]["lo"]
        text = (run_dir / "per_state.csv").read_text()
        t_final = summary["t_final"]
        for eps in eps_list:
            counts = observables.dpos_from_per_state_csv(text, eps)
            rows.append({
                "run": str(run_dir), "preset": summary["preset"],
                "L": summary["L"], "k": summary["k"], "epsilon": eps,
                "d_pos_final": counts.get(t_final, 0),
                "exceeds_shell_width": eps > shell_width + 1e-12,
            })
            if eps > shell_width + 1e-12:
                print(f"warning: epsilon={eps} exceeds the shell width "
                      f"{shell_width:.6g}; the greedy protocol is not expected "
                      f"to target work beyond the shell")
    if out_path is not None:
        lines = ["run,preset,L,k,epsilon,d_pos_final,exceeds_shell_width"]
        for r in rows:
            lines.append(f"{r['run']},{r['preset']},{r['L']},{r['k']},"
                         f"{r['epsilon']:.17g},{r['d_pos_final']},"
                         f"{int(r['exceeds_shell_width'])}")
        Path(out_path).write_text("\n".join(lines) + "\n")
    return rows


def load_trajectory(run_dir) -> tuple[dict, str, str]:
    run_dir = Path(run_dir)
    summary = json.loads((run_dir / "run.json").read_text())
    return (summary, (run_dir / "timeseries.csv").read_text(),
            (run_dir / "per_state.csv").read_text())


def write_report(run_dirs, outdir) -> Path:
    """Collect archived runs into the figure-data CSV exports."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    fig2_lines = ["label,t,d_pos,shell_size"]
    fig3_rows = []
    fig4_chunks = []
    seen_labels = set()
    for run_dir in map(Path, run_dirs):
        summary, timeseries, per_state = load_trajectory(run_dir)
        label = summary["mode"] if summary["mode"] != "optimize" \
            else f"optimize_k{summary['k']}"
        label = f"{summary['preset']}_{label}_L{summary['L']}"
        if label in seen_labels:
            label = f"{label}_{run_dir.name}"
        seen_labels.add(label)
        size = summary["shell"]["size"]
        for line in timeseries.splitlines()[1:]:
            _, t, _, _, dp = line.split(",")
            fig2_lines.append(f"{label},{t},{dp},{size}")
        if summary["mode"] == "optimize":
            fig3_rows.append((summary["L"], summary["k"], summary["preset"],
                              summary["dpos_final"], size))
            fig4_chunks.append((label, run_dir, summary))

    (outdir / "fig2_dpos_vs_t.csv").write_text("\n".join(fig2_lines) + "\n")
    (outdir / "fig3_scaling.csv").write_text(observables.fig3_csv(fig3_rows))

    fig4_lines = ["label,alpha,E,w,S0,St,dS_final_minus_initial,"
                  "dS_initial_minus_final,in_dpos"]
    for label, run_dir, summary in fig4_chunks:
        body = _fig4_rows_from_archive(run_dir, summary)
        fig4_lines.extend(f"{label},{row}" for row in body)
    (outdir / "fig4_deltaS_vs_w.csv").write_text("\n".join(fig4_lines) + "\n")
    return outdir


def _fig4_rows_from_archive(run_dir: Path, summary: dict) -> list[str]:
    eps = summary["dpos_epsilon"]
    t_final = summary["t_final"]
    per_alpha: dict[int, dict] = {}
    text = (run_dir / "per_state.csv").read_text()
    for line in text.splitlines()[1:]:
        if not line:
            continue
        alpha, E, t, w, S = line.split(",")
        entry = per_alpha.setdefault(int(alpha), {"E": E})
        t = float(t)
        if t == 0.0 and S:
            entry["S0"] = float(S)
        if t == t_final:
            entry["w"] = float(w)
            if S:
                entry["St"] = float(S)
    rows = []
    for alpha in sorted(per_alpha):
        e = per_alpha[alpha]
        if "S0" not in e or "St" not in e:
            continue
        rows.append(f"{alpha},{e['E']},{e['w']:.17g},{e['S0']:.17g},{e['St']:.17g},"
                    f"{e['St'] - e['S0']:.17g},{e['S0'] - e['St']:.17g},"
                    f"{int(e['w'] >= eps)}")
    return rows
