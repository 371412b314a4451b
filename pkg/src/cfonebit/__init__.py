"""cfonebit: energy-aware one-bit precoding for cell-free massive MIMO.

Library layout:

* :mod:`cfonebit.config`    — network / solver / experiment dataclasses
* :mod:`cfonebit.channel`   — geometry, fading, correlated Rayleigh draws
* :mod:`cfonebit.splitting` — three-operator splitting solver and proxes
* :mod:`cfonebit.precoder`  — relaxed-to-codebook quantization, receiver scale
* :mod:`cfonebit.baselines` — one-bit RZF, SQUID-style, random deactivation
* :mod:`cfonebit.qpsk`      — modulation / hard-decision demodulation
* :mod:`cfonebit.harness`   — seeded Monte Carlo BER experiments
* :mod:`cfonebit.cli`       — `cfonebit run | validate | prox-check`
"""

__version__ = "0.1.0"

from .config import ExperimentPlan, NetworkConfig, Precoder, SolverConfig  # noqa: F401
from .channel import ChannelMatrix, sample_channel  # noqa: F401
from .harness import RunResult, run_experiment  # noqa: F401
