#!/usr/bin/env python3
"""One full simulated hour, then the two headline comparisons in miniature.

Runs the six-user scenario end to end (motion, twin migrations, Poisson
change requests, synchronized swaps, shuffle ledger), prints the report
table, and then reruns the scheme comparison and the beta sweep on a few
seeds. The full-size versions live behind `pseudotwin reproduce`.
"""

from pseudotwin.cli import (
    config_to_toml,
    fig5a_table,
    fig5b_table,
    parse_config_text,
    preset_text,
    sim_report_table,
)
from pseudotwin.sim import SimulationEngine, experiment_fig5a, experiment_fig5b


def main():
    config = parse_config_text(preset_text("paper_fig5a")).with_seed(11)
    print("scenario config (echo):\n")
    print(config_to_toml(config))

    engine = SimulationEngine(config)
    report = engine.run()
    print(sim_report_table(report))
    print(f"twin migrations while driving: {len(report.migrations)}")
    print(f"authority log records: {len(report.ca_log)}")
    first = report.chain_digest[0].split()
    print(f"ledger head: block {first[0]} at epoch {first[1]} hash {first[2][:16]}...\n")

    print("scheme comparison on 5 seeds (full version: pseudotwin reproduce fig5a):")
    result = experiment_fig5a(config, seeds=list(range(5)))
    print(fig5a_table(result))

    print("beta sweep on 3 seeds (full version: pseudotwin reproduce fig5b):")
    sweep = experiment_fig5b(
        parse_config_text(preset_text("paper_fig5b")),
        beta_grid=(0.5, 1.5, 2.5),
        seeds=[0, 1, 2],
    )
    print(fig5b_table(sweep))


if __name__ == "__main__":
    main()
