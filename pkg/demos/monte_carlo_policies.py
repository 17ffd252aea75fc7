#!/usr/bin/env python3
"""Small Monte Carlo comparison of the four allocation policies.

Runs a seeded batch across the SNR grid, prints the mean root CRLB per
policy and the active-transmitter histogram, and leaves behind a CSV
plus a matplotlib script for the full figures.
"""

from radalloc import (
    ExperimentConfig, active_histogram, emit_plot_script, run_experiment,
)

CONFIG = ExperimentConfig(trials=20, seed=1)
CSV_PATH = "policy_comparison.csv"


def main():
    run = run_experiment(CONFIG, csv_path=CSV_PATH)
    print(f"{len(run.records)} records from {CONFIG.trials} trials "
          f"({len(run.failures)} failures)")
    print()

    snrs = sorted(CONFIG.snr_grid_db)
    header = "snr_db   " + "".join(f"{p:>12s}" for p in CONFIG.policies)
    print("mean root worst-case CRLB [m]")
    print(header)
    for snr in snrs:
        cells = [run.summary[p][snr]["mean_sqrt_cost"] for p in CONFIG.policies]
        print(f"{snr:+6.1f}   " + "".join(f"{c:12.2f}" for c in cells))
    print()

    print("active transmitters (relative frequency)")
    hist = active_histogram(run.records)
    counts = sorted({n for pol in hist.values() for n in pol})
    print("policy     " + "".join(f"{n:>8d}" for n in counts))
    for policy, freqs in hist.items():
        row = "".join(f"{freqs.get(n, 0.0):8.0%}" for n in counts)
        print(f"{policy:<10s} {row}")
    print()

    script = CSV_PATH.replace(".csv", "_plot.py")
    emit_plot_script(CSV_PATH, script)
    print(f"records: {CSV_PATH}")
    print(f"figures: python3 {script}")


if __name__ == "__main__":
    main()
