import os
import sys
from pathlib import Path

from dotenv import load_dotenv
from rich import print

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.ordinal.scenarios import scenario_catalog
from src.reporting.report import ReportRow, write_table
from src.trial.config import Design, DesignConfig
from src.trial.engine import operating_characteristics

# Published cutoffs for n = 100 per arm per stage
CUTOFFS = {
    Design.PO: (0.2, 0.95),
    Design.NPO: (0.2, 0.86),
    Design.SWITCH: (0.2, 0.97),
}


def main():
    load_dotenv(Path(__file__).parent.parent / ".env")
    seed = int(os.getenv("ORDINAL_SEED", "0"))
    threads = int(os.getenv("ORDINAL_THREADS", "1"))
    n_trials = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
    out_dir = Path(os.getenv("ORDINAL_OUTPUT_DIR", "results")) / "tables"
    out_dir.mkdir(parents=True, exist_ok=True)

    scenarios = scenario_catalog()
    for design, (c_f, c_s) in CUTOFFS.items():
        print(f"\n[yellow]{design.value.upper()} design at (c_f={c_f}, c_s={c_s}), {n_trials} trials per scenario")
        cfg = DesignConfig.fixed(design, 100, c_f=c_f, c_s=c_s, seed=seed)
        rows = []
        for scenario in scenarios:
            oc = operating_characteristics(cfg, scenario, n_trials, threads)
            rows.append(ReportRow.from_oc(scenario, oc, npo_convention=design is Design.NPO))
            print(f"  scenario {scenario.id}: PET {oc.pet:.1f}%  PRN {oc.prn:.1f}%  avg n {oc.avg_n_per_arm:.1f}")
        path = write_table(rows, out_dir / f"oc_{design.value}.csv")
        print(f"[green]Wrote {path}")


if __name__ == "__main__":
    main()
