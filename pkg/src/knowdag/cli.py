"""Command-line interface."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .constraints import read_knowledge_file
from .graphs import generate_er_dag, generate_sf_dag, structural_metrics, write_adjacency_csv, write_edge_list
from .induction import KindFilter, KnowledgeSource, Variant, run_induction, write_trajectory
from .runner import (
    ExperimentConfig,
    full_grid,
    read_truth_file,
    run_campaign,
    run_real_data,
)
from .sem import (
    draw_index_model,
    load_csv_dataset,
    simulate_from_model,
    write_csv_dataset,
    write_sem_metadata,
)
from .solver import SolverConfig, fit, write_convergence_log


@click.group()
@click.version_option(__version__)
def main():
    """Structure learning with expert knowledge in the loop."""


def _solver_config(config_path: str | None) -> SolverConfig:
    if config_path:
        return SolverConfig.from_ini(config_path)
    return SolverConfig()


@main.command()
@click.option("--graph-type", type=click.Choice(["er", "sf"]), default="er")
@click.option("-d", "--nodes", "d", type=int, required=True)
@click.option("--s0", type=int, required=True, help="Target edge count.")
@click.option("-n", "--samples", "n", type=int, required=True)
@click.option("--noise-scale", type=float, default=1.0)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def simulate(graph_type, d, s0, n, noise_scale, seed, out):
    """Generate a random ground-truth DAG and simulated observations."""
    out.mkdir(parents=True, exist_ok=True)
    truth = generate_er_dag(d, s0, seed) if graph_type == "er" else generate_sf_dag(d, s0, seed)
    write_edge_list(truth, out / "truth.edges")
    write_adjacency_csv(truth, out / "truth.csv")
    model = draw_index_model(truth, noise_scale, seed)
    data = simulate_from_model(truth, model, n, seed)
    write_csv_dataset(data, out / "data.csv")
    write_sem_metadata(out / "sem_metadata.json", seed, "truth.edges", model)
    click.echo(f"wrote {out}/truth.edges ({truth.n_edges} edges) and {out}/data.csv ({n}x{d})")


@main.command("fit")
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--knowledge", type=click.Path(exists=True), default=None,
              help="Knowledge file with 'active i j' / 'inactive i j' lines.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--standardize", is_flag=True, default=False)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def fit_cmd(data_path, knowledge, config_path, standardize, seed, out):
    """Run a single constrained fit and write the learned graph."""
    out.mkdir(parents=True, exist_ok=True)
    data = load_csv_dataset(data_path, standardize=standardize)
    constraints = read_knowledge_file(knowledge) if knowledge else ()
    result = fit(data, constraints, _solver_config(config_path), seed=seed)
    write_edge_list(result.graph, out / "graph.edges")
    lines = [",".join(repr(float(v)) for v in row) for row in result.weights.values]
    (out / "weights.csv").write_text("\n".join(lines) + "\n")
    write_convergence_log(result.log, out / "convergence.csv")
    result.sem.save(out / "model.json")
    click.echo(f"status={result.status} edges={result.graph.n_edges} "
               f"h={result.log[-1].h:.3e} wall={result.wall_time:.1f}s")
    if not result.converged:
        sys.exit(1)


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--truth", "truth_path", type=click.Path(exists=True), required=True)
@click.option("--steps", type=int, default=3)
@click.option("--source", type=click.Choice([v.value for v in Variant]), default="misclassified")
@click.option("--kinds", type=click.Choice([k.value for k in KindFilter]), default="both")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--standardize", is_flag=True, default=False)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def induce(data_path, truth_path, steps, source, kinds, config_path, standardize, seed, out):
    """Run one sequential knowledge-induction trajectory."""
    data = load_csv_dataset(data_path, standardize=standardize)
    truth = read_truth_file(truth_path)
    src = KnowledgeSource(Variant(source), KindFilter(kinds))
    traj = run_induction(data, truth, steps, src, _solver_config(config_path), seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory(traj, out)
    last = traj.steps[-1]
    click.echo(f"steps={len(traj.steps)} exhausted={traj.exhausted} "
               f"final shd/d={last.metrics_pred.shd_per_node:.3f} tpr={last.metrics_pred.tpr:.3f}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="INI file with [experiment] and [solver] sections.")
@click.option("--full-grid", is_flag=True, default=False,
              help="Run the full 16-combination grid (ignores --config grid fields).")
@click.option("--out", type=click.Path(path_type=Path), required=True)
def campaign(config_path, full_grid, out):
    """Run an experiment campaign and aggregate the results."""
    if config_path:
        config = ExperimentConfig.from_ini(config_path)
    else:
        config = ExperimentConfig()
    if full_grid:
        config = full_grid(
            trials=config.trials, steps=config.steps, variant=config.variant,
            kinds=config.kinds, master_seed=config.master_seed, solver=config.solver,
            workers=config.workers, standardize=config.standardize,
        )
    summary = run_campaign(config, out)
    click.echo(f"trajectories={summary['n_trajectories']} pooled_samples={summary['n_samples']}")
    click.echo(f"tables under {out}/tables")
    if summary.get("failures"):
        for failure in summary["failures"]:
            click.echo(f"FAILED {failure['cell']} trial {failure['trial']}: {failure['error']}", err=True)
        sys.exit(1)


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--truth", "truth_path", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--trials", type=int, default=10)
@click.option("--steps", type=int, default=3)
@click.option("--standardize", is_flag=True, default=False)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def real(data_path, truth_path, config_path, trials, steps, standardize, seed, out):
    """Knowledge induction against a consensus graph on a real dataset."""
    config = ExperimentConfig(
        trials=trials, steps=steps, master_seed=seed, standardize=standardize,
        solver=_solver_config(config_path),
    )
    report = run_real_data(data_path, truth_path, out, config)
    if report.get("warning"):
        click.echo(f"warning: {report['warning']}")
    for row in report.get("rows", []):
        click.echo(f"{row['metric']} delta={row['delta']}: {row['mean']:+.4f} "
                   f"p={row['p_value']:.3g} ({row['remark']})")


@main.command("report")
@click.option("--results", "results_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--alpha", type=float, default=0.05)
def report_cmd(results_dir, alpha):
    """Re-aggregate persisted trajectories into tables and figures."""
    from .report import render_report

    summary = render_report(results_dir, alpha=alpha)
    click.echo(f"trajectories={summary['n_trajectories']} pooled_samples={summary['n_samples']}")
    click.echo(f"tables under {results_dir}/tables, figures under {results_dir}/figures")


@main.command()
@click.option("--host", default="127.0.0.1", envvar="KNOWDAG_HOST")
@click.option("--port", type=int, default=8000, envvar="KNOWDAG_PORT")
@click.option("--workdir", type=click.Path(path_type=Path), default=Path("knowdag-sessions"),
              envvar="KNOWDAG_WORKDIR")
@click.option("--static-dir", type=click.Path(path_type=Path), default=None,
              help="Directory with built frontend assets to serve at /ui.")
def serve(host, port, workdir, static_dir):
    """Start the expert-in-the-loop session service."""
    import uvicorn

    from .service import create_app

    app = create_app(workdir, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--pred", type=click.Path(exists=True), required=True)
@click.option("--truth", type=click.Path(exists=True), required=True)
def score(pred, truth):
    """Print structural metrics of a predicted graph against a reference."""
    report = structural_metrics(read_truth_file(pred), read_truth_file(truth))
    click.echo(json.dumps({
        "fdr": report.fdr, "tpr": report.tpr, "fpr": report.fpr,
        "shd": report.shd, "shd_per_node": report.shd_per_node,
        "tp": report.tp, "reversed": report.reversed,
        "fp": report.fp, "missing": report.missing,
    }, indent=2))


if __name__ == "__main__":
    main()
