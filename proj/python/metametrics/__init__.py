"""Meta-metrics for player performance measures.

Thin wrapper over the C++ core: discrimination, stability, and independence
scores for season-level metrics derived from per-game logs, plus the
bootstrap, rank-likelihood copula, PCA, clustering, and shrinkage machinery
behind them.
"""

from metametrics._core import *  # noqa: F401,F403
from metametrics._core import __version__  # noqa: F401
