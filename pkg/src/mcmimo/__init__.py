"""Multi-cell massive MIMO downlink simulator.

Covers the full chain: hexagonal scenario generation, contaminated
uplink training, MF/ZF precoding, closed-form large-antenna SINR/BER
limits, combinatorial pilot allocation and distributed power control,
plus a Monte Carlo harness with a CLI.
"""

__version__ = "0.1.0"
