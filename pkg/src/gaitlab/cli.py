"""Command-line entry point: `gaitlab run`, `gaitlab compare`, and
`gaitlab analyze {interference,landscape,traces}`.

Every command resolves its configuration from (in increasing precedence)
preset values, a config file, GAITLAB_* environment variables, and explicit
flags, then writes a fully-resolved manifest next to its outputs so the
exact invocation can be replayed bit-for-bit with `--config manifest.cfg`.

Exit codes: 0 success, 2 bad configuration or missing artifacts, 3 I/O
failure.
"""
from __future__ import annotations

import functools
import os
import sys

import click
import numpy as np

from . import analysis as an
from . import config as cf
from . import experiment as ex
from . import learners as ln
from . import surrogate as sg
from .errors import GaitlabError

REQUIRED_FIELDS = ("controller", "learner", "schedule")


def _guard(fn):
    """Map library errors to the documented exit codes with diagnostics."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GaitlabError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _resolve_config(
    preset, config_path, flag_values: dict
) -> ex.ExperimentConfig:
    values: dict = {}
    if preset is not None:
        values.update(cf.preset_values(preset))
    if config_path is not None:
        values.update(cf.load_config(config_path))
    values = cf.apply_env_overrides(values)
    values.update({k: v for k, v in flag_values.items() if v is not None})
    for name in REQUIRED_FIELDS:
        if name not in values:
            raise cf.ConfigError(f"missing required config field {name!r}")
    return cf.build_experiment_config(values)


def _ensure_out(out: str) -> str:
    os.makedirs(out, exist_ok=True)
    return out


def _cell_name(cfg: ex.ExperimentConfig) -> str:
    return f"{cfg.controller}_{cfg.learner}_{cfg.schedule}"


def _write_run_outputs(out: str, cfg: ex.ExperimentConfig, curve) -> None:
    cf.write_manifest(os.path.join(out, "manifest.cfg"), cfg)
    ex.write_results_csv(os.path.join(out, "results.csv"), curve)
    if curve.episodes > 0:
        an.plot_learning_curve(
            curve,
            os.path.join(out, "curve.svg"),
            title=f"{cfg.controller}-{cfg.learner} ({cfg.schedule})",
        )
    for rep, record in enumerate(curve.records or []):
        sigma = (
            record.sigma
            if record.sigma is not None
            else np.zeros_like(record.theta)
        )
        baseline = (
            record.baseline
            if record.baseline is not None
            else ln.BaselineMap(np.zeros(record.theta.shape[1]))
        )
        ln.save_checkpoint(
            os.path.join(out, f"checkpoint_rep{rep}.txt"),
            record.theta,
            sigma,
            baseline,
            cfg.resolved_episodes,
        )


def _summary_row(cfg: ex.ExperimentConfig, curve, threshold: float) -> dict:
    finals = curve.final_rewards(window=5)
    eps = [
        ex.episodes_to_threshold(curve.rewards[r], threshold)
        for r in range(curve.repetitions)
    ]
    return {
        "controller": cfg.controller,
        "learner": cfg.learner,
        "schedule": cfg.schedule,
        "final_reward_median": float(np.median(finals)),
        "episodes_to_threshold_median": float(np.median(eps)),
    }


def _echo_summary(rows: list[dict]) -> None:
    click.echo(
        "controller,learner,schedule,final_reward_median,"
        "episodes_to_threshold_median"
    )
    for row in rows:
        eps = row["episodes_to_threshold_median"]
        eps_txt = "n/a" if np.isinf(eps) else "%.9g" % eps
        click.echo(
            "%s,%s,%s,%s,%s"
            % (
                row["controller"],
                row["learner"],
                row["schedule"],
                "%.9g" % row["final_reward_median"],
                eps_txt,
            )
        )


@click.group()
def main() -> None:
    """Rhythm-network locomotion controllers, policy-search learners, and a
    kinematic walking surrogate: experiments, comparisons, and analyses."""


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="Flat key-value config file.")(fn)
    fn = click.option("--preset", type=str, default=None,
                      help=f"One of: {', '.join(cf.PRESET_NAMES)}.")(fn)
    fn = click.option("--controller", type=str, default=None)(fn)
    fn = click.option("--learner", type=str, default=None)(fn)
    fn = click.option("--schedule", type=str, default=None)(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    fn = click.option("--episodes", type=int, default=None)(fn)
    fn = click.option("--repetitions", type=int, default=None)(fn)
    fn = click.option("--out", type=click.Path(), default="results",
                      help="Output directory (created if absent).")(fn)
    fn = click.option("--jobs", type=int, default=1,
                      help="Worker processes for repetitions/grid cells.")(fn)
    return fn


@main.command()
@_common_options
@_guard
def run(config_path, preset, controller, learner, schedule, seed, episodes,
        repetitions, out, jobs) -> None:
    """Run one experiment cell; write results.csv, curve.svg, checkpoints,
    and a replayable manifest; print the summary row."""
    if preset == cf.GRID_PRESET:
        raise cf.ConfigError(
            f"preset {cf.GRID_PRESET!r} is a grid; use `gaitlab compare`"
        )
    cfg = _resolve_config(preset, config_path, {
        "controller": controller, "learner": learner, "schedule": schedule,
        "seed": seed, "episodes": episodes, "repetitions": repetitions,
    })
    out = _ensure_out(out)
    curve = ex.run_experiment(cfg, jobs=jobs)
    _write_run_outputs(out, cfg, curve)
    if curve.episodes == 0:
        click.echo("empty curve (0 episodes); outputs written")
        return
    _echo_summary([_summary_row(cfg, curve, ex.default_threshold())])


@main.command()
@_common_options
@click.option("--threshold", type=float, default=None,
              help="Episodes-to-threshold bar (default: 40% of the tripod "
                   "preset reward).")
@_guard
def compare(config_path, preset, controller, learner, schedule, seed,
            episodes, repetitions, out, jobs, threshold) -> None:
    """Run a grid of cells and write per-cell results plus summary.csv
    mirroring the study's final-reward / episodes-to-threshold table."""
    if preset == cf.GRID_PRESET:
        base = {}
        if config_path is not None:
            base.update(cf.load_config(config_path))
        base = cf.apply_env_overrides(base)
        overrides = {"seed": seed, "episodes": episodes,
                     "repetitions": repetitions}
        base.update({k: v for k, v in overrides.items() if v is not None})
        grid = [
            ex.ExperimentConfig(**{
                **base,
                "controller": g.controller,
                "learner": g.learner,
                "schedule": g.schedule,
            })
            for g in ex.paper_grid()
        ]
    else:
        grid = [_resolve_config(preset, config_path, {
            "controller": controller, "learner": learner,
            "schedule": schedule, "seed": seed, "episodes": episodes,
            "repetitions": repetitions,
        })]
    deduped: list[ex.ExperimentConfig] = []
    for cfg in grid:
        if cfg in deduped:
            click.echo(f"warning: duplicate grid cell {_cell_name(cfg)} "
                       "skipped", err=True)
            continue
        deduped.append(cfg)
    out = _ensure_out(out)
    rows = ex.comparison_matrix(deduped, threshold=threshold, jobs=jobs)
    for cfg, row in zip(deduped, rows):
        cf.write_manifest(
            os.path.join(out, f"manifest_{_cell_name(cfg)}.cfg"), cfg
        )
        ex.write_results_csv(
            os.path.join(out, f"results_{_cell_name(cfg)}.csv"), row["curve"]
        )
    ex.write_summary_csv(os.path.join(out, "summary.csv"), rows)
    _plot_comparison(os.path.join(out, "comparison.svg"), rows)
    _echo_summary(rows)


def _plot_comparison(path, rows: list[dict]) -> None:
    plt = an._pyplot()
    controllers = sorted({r["controller"] for r in rows})
    fig, axes = plt.subplots(
        1, len(controllers), figsize=(5.5 * len(controllers), 3.8),
        squeeze=False,
    )
    for ax, ctrl in zip(axes[0], controllers):
        for row in rows:
            if row["controller"] != ctrl:
                continue
            curve = row["curve"]
            if curve.episodes == 0:
                continue
            ax.plot(
                np.arange(curve.episodes),
                curve.median_curve(),
                label=f"{row['learner']} ({row['schedule']})",
                linewidth=1.2,
            )
        ax.set_title(ctrl)
        ax.set_xlabel("episode")
        ax.set_ylabel("median episodic reward")
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


@main.group()
def analyze() -> None:
    """Post-hoc analyses over traces, checkpoints, and run directories."""


@analyze.command()
@click.option("--controller", type=click.Choice(ex.CONTROLLERS),
              required=True)
@click.option("--steps", type=int, default=400, show_default=True,
              help="Trace length used for the cycle metric.")
@click.option("--out", type=click.Path(), default="results")
@_guard
def interference(controller, steps, out) -> None:
    """Non-neighbor co-activation fraction of a controller's basis trace."""
    gen = ex.build_basis_generator(
        controller, sg.RobotGeometry().n_joints
    )
    _, trace = gen.trace(gen.initial_state(), steps)
    fraction = an.interference_fraction(trace)
    out = _ensure_out(out)
    path = os.path.join(out, "interference.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("controller,interference_fraction\n")
        fh.write("%s,%s\n" % (controller, "%.9g" % fraction))
    click.echo(f"interference_fraction {controller} = {fraction:.9g}")


def _parse_grid(spec: str) -> np.ndarray:
    try:
        start_s, stop_s, step_s = spec.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
    except ValueError:
        raise cf.ConfigError(
            f"bad grid {spec!r}; expected start:stop:step"
        ) from None
    if step <= 0 or stop < start:
        raise cf.ConfigError(f"bad grid {spec!r}; need step > 0, stop >= start")
    n = int(round((stop - start) / step)) + 1
    return np.linspace(start, stop, n)


@analyze.command()
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(exists=True))
@click.option("--direction", type=click.Choice(("agol", "pgpe")),
              default="agol", show_default=True)
@click.option("--grid", "grid_spec", type=str, default="0:0.8:0.02",
              show_default=True, help="Scale grid start:stop:step.")
@click.option("--controller", type=click.Choice(ex.CONTROLLERS),
              default="sme", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for the probe batch collected at the checkpoint.")
@click.option("--out", type=click.Path(), default="results")
@_guard
def landscape(checkpoint_path, direction, grid_spec, controller, seed,
              out) -> None:
    """Reward landscape along a learner's update direction, computed from a
    deterministic probe batch collected at the checkpoint's parameters."""
    theta, sigma, _, _ = ln.load_checkpoint(checkpoint_path)
    scales = _parse_grid(grid_spec)
    batch = an.probe_batch(controller, theta, sigma, seed)
    drc = an.update_direction(batch, theta, sigma, learner=direction)
    pairs = an.reward_landscape(theta, drc, scales, controller=controller)
    out = _ensure_out(out)
    csv_path = os.path.join(out, f"landscape_{direction}.csv")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("scale,reward\n")
        for s, r in pairs:
            fh.write("%s,%s\n" % ("%.9g" % s, "%.9g" % r))
    an.plot_reward_landscape(
        pairs,
        os.path.join(out, f"landscape_{direction}.svg"),
        title=f"{controller}-{direction} update direction",
    )
    best = pairs[np.argmax(pairs[:, 1])]
    click.echo(
        f"landscape {direction}: argmax scale {best[0]:.9g} "
        f"reward {best[1]:.9g} ({len(pairs)} points -> {csv_path})"
    )


@analyze.command()
@click.option("--run", "run_dir", required=True, type=click.Path(),
              help="Output directory of a previous `gaitlab run`.")
@click.option("--rep", type=int, default=0, show_default=True,
              help="Repetition to replay for artifact extraction.")
@click.option("--window", type=int, default=10, show_default=True,
              help="Moving-average window for exploration rates.")
@click.option("--out", type=click.Path(), default=None,
              help="Output directory (default: the run directory).")
@_guard
def traces(run_dir, rep, window, out) -> None:
    """Replay one repetition from a run's manifest and export the explored
    joint trajectories and exploration-rate evolution (CSV + SVG)."""
    manifest = os.path.join(run_dir, "manifest.cfg")
    if not os.path.exists(manifest):
        raise cf.ConfigError(
            f"no manifest.cfg under {run_dir!r}; run artifacts missing"
        )
    values = cf.load_config(manifest)
    values["keep_artifacts"] = True
    cfg = cf.build_experiment_config(values)
    record = ex.run_repetition(cfg, rep)
    out = _ensure_out(out if out is not None else run_dir)

    batch = ln.EpisodeBatch(window=min(8, len(record.episodes)))
    for episode in record.episodes[: batch.window]:
        batch.add(episode)
    traj_csv = os.path.join(out, "trajectories.csv")
    an.export_explored_joint_trajectories(batch, traj_csv)
    _plot_trajectories(os.path.join(out, "trajectories.svg"), batch)
    click.echo(f"wrote {traj_csv}")

    if not cfg.is_action_space:
        trace_csv = os.path.join(out, "exploration_trace.csv")
        an.export_exploration_trace(record, trace_csv, window=window)
        swing = record.sigma_trace[:, 0::3, :].mean(axis=(1, 2))
        lift = record.sigma_trace[:, 1::3, :].mean(axis=(1, 2))
        an.plot_exploration_trace(
            np.arange(len(swing)),
            an._trailing_mean(swing, window),
            an._trailing_mean(lift, window),
            os.path.join(out, "exploration_trace.svg"),
        )
        click.echo(f"wrote {trace_csv}")


def _plot_trajectories(path, batch: ln.EpisodeBatch, joint: int = 0) -> None:
    plt = an._pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for e, episode in enumerate(batch.episodes):
        ax.plot(episode.actions[:, joint], alpha=0.7, linewidth=1.0,
                label=f"episode {e}")
    ax.set_xlabel("timestep")
    ax.set_ylabel(f"joint {joint} command (rad)")
    ax.set_title("explored joint trajectories")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


if __name__ == "__main__":
    main()
