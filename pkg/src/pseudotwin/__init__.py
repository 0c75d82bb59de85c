"""Dual-pseudonym privacy toolkit for vehicular digital-twin networks.

A deterministic discrete-event simulator plus the numerical machinery
around it: sawtooth privacy entropy, Poisson change demand, newsvendor-style
on-demand pseudonym allocation (exact greedy and genetic solvers), the
dual-pseudonym protocol with synchronized change handshakes, a
tamper-evident shuffle ledger, and linkage-mapping attacker replays.
"""

__version__ = "0.1.0"

from . import adversary, allocator, demand, entropy, ledger, protocol  # noqa: F401
