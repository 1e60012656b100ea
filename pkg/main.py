import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn, TimeRemainingColumn
from rich.table import Table

from src.calibration.power_curve import power_curve_by_effect, power_curve_by_n
from src.calibration.sample_size import find_sample_size, find_switch_sample_size, sized
from src.calibration.thresholds import confirm_type1
from src.exceptions import ConfigError, NoFeasiblePair, TargetUnreachable, TrialInvalid
from src.reporting.config import COMMANDS, RunConfig, load_run_config
from src.reporting.report import (
    ReportRow,
    oc_summary,
    prepare_output_dir,
    result_document,
    write_document,
    write_frame,
    write_table,
)
from src.trial.config import Design, Method, StageSizes
from src.trial.engine import operating_characteristics

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

load_dotenv()

console = Console()
logger = logging.getLogger("ordinal_gsd")


def progress_bar() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        TimeRemainingColumn(),
        console=console,
    )


def progress_updater(progress: Progress):
    """One bar per stage label, created the first time the stage reports."""
    tasks: Dict[str, Any] = {}

    def update_progress(stage: str, current: int, total: int):
        if stage not in tasks:
            tasks[stage] = progress.add_task(f"[cyan]{stage}...", total=total)
        if current <= 1:
            for name, task_id in tasks.items():
                progress.update(task_id, visible=name == stage)
        progress.update(tasks[stage], completed=current, total=total)

    return update_progress


def run_operating_characteristics(cfg: RunConfig) -> Dict[str, Any]:
    design_cfg = cfg.design_config()
    npo_convention = cfg.design is Design.NPO
    rows: List[ReportRow] = []
    summaries = []
    with progress_bar() as progress:
        update_progress = progress_updater(progress)
        for scenario in cfg.scenarios:
            oc = operating_characteristics(
                design_cfg, scenario, cfg.n_trials, cfg.threads, progress_callback=update_progress
            )
            rows.append(ReportRow.from_oc(scenario, oc, npo_convention))
            summaries.append(oc_summary(scenario, oc))

    table = Table(title=f"Operating characteristics: {cfg.design.value.upper()} design")
    table.add_column("Scenario", style="cyan")
    table.add_column("Effect Size", style="magenta")
    table.add_column("PET (%)")
    table.add_column("PRN (%)")
    table.add_column("Avg N per arm")
    for row in rows:
        table.add_row(row.scenario, f"{row.effect_size:.3f}", f"{row.pet:.1f}", f"{row.prn:.1f}", f"{row.avg_n_per_arm:.1f}")
    console.print(table)
    return {"rows": rows, "scenarios": summaries}


def _sample_size_row(design: str, result) -> Dict[str, Any]:
    return {
        "design": design,
        "n_per_arm_per_stage": result.n_per_arm_per_stage,
        "power": result.achieved_power,
        "type1": result.achieved_type1,
        "c_f": result.c_f,
        "c_s": result.c_s,
        "previous_n": result.previous_n,
        "previous_power": result.previous_power,
    }


def run_sample_size(cfg: RunConfig) -> Dict[str, Any]:
    design_cfg = cfg.design_config()
    search = dict(n_trials=cfg.n_trials, threads=cfg.threads,
                  futility_grid=cfg.futility_grid, superiority_grid=cfg.superiority_grid)
    with progress_bar() as progress:
        update_progress = progress_updater(progress)
        if cfg.design is Design.SWITCH:
            result = find_switch_sample_size(
                design_cfg, cfg.control, cfg.effect, cfg.alpha, cfg.power,
                cfg.po_n_grid, cfg.npo_n_grid, progress_callback=update_progress, **search,
            )
            calibration = result.calibration
            rows = [
                _sample_size_row("po", result.po),
                _sample_size_row("npo", result.npo),
                {
                    "design": "switch",
                    "n_per_arm_per_stage": result.stage1_size,
                    "power": calibration.achieved_power,
                    "type1": calibration.achieved_type1,
                    "c_f": calibration.c_f,
                    "c_s": calibration.c_s,
                    "previous_n": None,
                    "previous_power": None,
                },
            ]
            n_po, n_npo = result.po.n_per_arm_per_stage, result.npo.n_per_arm_per_stage
            chosen_cfg = replace(
                design_cfg, po_sizes=StageSizes(n_po, n_po), npo_sizes=StageSizes(n_npo, n_npo)
            ).with_cutoffs(calibration.c_f, calibration.c_s)
            history = pd.concat(
                [result.po.history.assign(design="po"), result.npo.history.assign(design="npo")], ignore_index=True
            )
        else:
            n_grid = cfg.po_n_grid if cfg.design is Design.PO else cfg.npo_n_grid
            result = find_sample_size(
                design_cfg, cfg.control, cfg.effect, cfg.alpha, cfg.power, n_grid,
                progress_callback=update_progress, **search,
            )
            rows = [_sample_size_row(cfg.design.value, result)]
            chosen_cfg = sized(design_cfg, result.n_per_arm_per_stage).with_cutoffs(result.c_f, result.c_s)
            history = result.history.assign(design=cfg.design.value)

        confirmed = None
        if cfg.confirm and cfg.method is Method.FREQUENTIST:
            confirmed = confirm_type1(chosen_cfg, cfg.control, cfg.n_trials, cfg.threads, update_progress)

    table = Table(title="Recommended sample size")
    table.add_column("Design", style="cyan")
    table.add_column("N per arm per stage", style="magenta")
    table.add_column("Power")
    table.add_column("Type I")
    table.add_column("c_f")
    table.add_column("c_s")
    for row in rows:
        table.add_row(row["design"], str(row["n_per_arm_per_stage"]), f"{row['power']:.3f}",
                      f"{row['type1']:.3f}", f"{row['c_f']:.2f}", f"{row['c_s']:.2f}")
    console.print(table)
    if confirmed is not None:
        console.print(f"[green]Bayesian confirmation type I error: {confirmed:.3f}")
    return {"rows": rows, "history": history, "confirmed_type1": confirmed}


def run_power_curve(cfg: RunConfig) -> Dict[str, Any]:
    frames = []
    with progress_bar() as progress:
        update_progress = progress_updater(progress)
        for design in cfg.designs:
            design_cfg = cfg.design_config(design)
            if cfg.vary == "effect":
                frames.append(
                    power_curve_by_effect(design_cfg, cfg.scenarios, cfg.n_trials, cfg.threads, update_progress)
                )
            else:
                n_grid = cfg.po_n_grid if design is Design.PO else cfg.npo_n_grid
                frames.append(
                    power_curve_by_n(
                        design_cfg, cfg.control, cfg.effect, cfg.alpha, n_grid, cfg.n_trials, cfg.threads,
                        cfg.futility_grid, cfg.superiority_grid, update_progress,
                    )
                )
    curve = pd.concat(frames, ignore_index=True)
    x = "effect_size" if cfg.vary == "effect" else "n"

    table = Table(title=f"Power by {'effect size' if cfg.vary == 'effect' else 'sample size'}")
    table.add_column("Design", style="cyan")
    table.add_column(x, style="magenta")
    table.add_column("Power")
    for record in curve.to_dict(orient="records"):
        table.add_row(record["design"], f"{record[x]:.4g}", f"{record['power']:.3f}")
    console.print(table)
    return {"curve": curve}


def execute(cfg: RunConfig, out_dir: Path) -> Path:
    """Run the configured command and write its artifacts into `out_dir`."""
    if cfg.command.startswith("oc-"):
        results = run_operating_characteristics(cfg)
        write_table(results["rows"], out_dir / "table.csv")
        payload = {"scenarios": results["scenarios"]}
    elif cfg.command.startswith("ss-"):
        results = run_sample_size(cfg)
        write_frame(pd.DataFrame(results["rows"]), out_dir / "sample_size.csv")
        write_frame(results["history"], out_dir / "search_history.csv")
        payload = {
            "sample_size": results["rows"],
            "history": results["history"],
            "confirmed_type1": results["confirmed_type1"],
        }
    else:
        results = run_power_curve(cfg)
        write_frame(results["curve"], out_dir / "power_curve.csv")
        payload = {"vary": cfg.vary, "curve": results["curve"]}

    return write_document(result_document(cfg.command, cfg.to_dict(), payload), out_dir / "result.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Two-stage group sequential designs for ordinal endpoints (PO, NPO and PO/NPO switch)"
    )
    parser.add_argument("command", choices=COMMANDS, help="What to compute")
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="Base seed for the per-trial random streams")
    parser.add_argument("--ntrial", type=int, dest="n_trials", help="Number of simulated trials")
    parser.add_argument("--alpha", type=float, help="Type I error target for calibration")
    parser.add_argument("--power", type=float, help="Power target for sample-size searches")
    parser.add_argument("--method", choices=[m.value for m in Method], help="Criterion computation")
    parser.add_argument("--out", type=Path, help="Output directory (must be empty unless --overwrite)")
    parser.add_argument("--threads", type=int, help="Worker processes for trial simulation")
    parser.add_argument("--vary", choices=["effect", "n"], help="power-curve axis")
    parser.add_argument("--designs", type=str, help="power-curve designs, e.g. po,npo,switch")
    parser.add_argument("--overwrite", action="store_true", help="Allow writing into a non-empty --out")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def run_command(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )
    overrides = {
        "seed": args.seed,
        "n_trials": args.n_trials,
        "alpha": args.alpha,
        "power": args.power,
        "method": args.method,
        "threads": args.threads,
        "vary": args.vary,
        "designs": args.designs,
        "overwrite": args.overwrite or None,
    }
    try:
        cfg = load_run_config(args.config, args.command, overrides)
        logger.debug("resolved config: %s", cfg.to_dict())
        explicit = args.out is not None
        out_dir = prepare_output_dir(args.out if explicit else cfg.output_dir, explicit, cfg.overwrite, args.command)
        console.print(Panel(
            f"[bold]Command:[/bold] {cfg.command}\n[bold]Design:[/bold] {cfg.design.value}\n"
            f"[bold]Method:[/bold] {cfg.method.value}\n[bold]Trials:[/bold] {cfg.n_trials}\n"
            f"[bold]Seed:[/bold] {cfg.seed}\n[bold]Output:[/bold] {out_dir}",
            title="Run",
            expand=False,
        ))
        document = execute(cfg, out_dir)
    except ConfigError as e:
        console.print(f"[red]Configuration error: {e}")
        return EXIT_CONFIG
    except (NoFeasiblePair, TargetUnreachable) as e:
        console.print(f"[red]Error: {e}")
        return EXIT_INFEASIBLE
    except TrialInvalid as e:
        console.print(f"[red]Every simulated trial was invalid: {e}")
        return EXIT_INFEASIBLE

    console.print(f"\n[green]Results written to {document.parent}[/green]")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(run_command())
