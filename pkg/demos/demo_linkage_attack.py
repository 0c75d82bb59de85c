#!/usr/bin/env python3
"""Why asynchronous pseudonym changes leak, and what synchronizing buys.

A passive attacker watches safety messages (physical layer) and twin
activity (virtual layer). When the two layers change pseudonyms at
different times, one layer always bridges the other's change: the attacker
re-identifies the target with certainty and never loses the trail. When a
user and twin change together inside a group of G lookalikes, each
boundary is a 1-in-G guess and the lock decays geometrically.
"""

from pseudotwin.adversary import (
    AttackerConfig,
    linkage_mapping_trace,
    synchronous_group_trace,
    tracking_fraction,
)


def main():
    print("asynchronous timeline: twin changes 4x as often as the user")
    trace = linkage_mapping_trace(vmu_period=4.0, vt_period=1.0, n_vmu_changes=2)
    record = tracking_fraction(trace, AttackerConfig(seed=0))
    print(f"  boundaries seen: {len(record.boundaries)} "
          f"({sum(1 for b in trace.boundaries if b.kind == 'vmu')} user, "
          f"{sum(1 for b in trace.boundaries if b.kind == 'vt')} twin)")
    print(f"  tracked fraction: {record.tracked_fraction:.3f}")
    links = record.belief.link_table[trace.initial_vmu_pid]
    print(f"  twin pseudonyms mapped to the user's first pseudonym: {len(links)}")
    print("  every single-layer change was bridged by the other layer.\n")

    print("same attacker, but the user's layer is all it can see:")
    record = tracking_fraction(
        trace, AttackerConfig(observe_virtual=False, seed=0)
    )
    print(f"  tracked fraction: {record.tracked_fraction:.3f}")
    print("  no links form, yet solo changes (G=1) still re-identify.\n")

    print("synchronized changes in groups of G, six boundaries, 20000 replays:")
    n = 20000
    for g in (1, 2, 4, 8):
        trace = synchronous_group_trace(group_size=g, n_boundaries=6)
        survived = 0
        for seed in range(n):
            rec = tracking_fraction(trace, AttackerConfig(seed=seed))
            survived += all(b.reidentified for b in rec.boundaries)
        print(
            f"  G={g}: lock survives all six boundaries "
            f"{survived / n:.5f} of the time (theory {g ** -6.0:.5f})"
        )
    print("\nsynchrony turns certain re-identification into G^-k decay.")


if __name__ == "__main__":
    main()
