"""Weighted quasi-metrics induced by (alpha, beta) Finsler metrics.

Modules: ``metric`` (configs and phi catalog), ``shen`` (admissibility),
``geodesic`` (spray and RK4), ``distance`` (induced quasi-distance and
weights), ``spaces`` (finite weighted quasi-metric spaces), ``cli``.
"""

__version__ = "0.1.0"
