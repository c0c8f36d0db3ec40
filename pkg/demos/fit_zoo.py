"""Rank the jointly symmetric copula zoo on simulated ARCH(1)-t4 data.

Usage: ``python demos/fit_zoo.py [n]`` (default 10000 observations).
"""
import sys

from garchmimic.fit import compare_models, format_table, pseudo_observations, table_zoo
from garchmimic.garch import GarchSpec, simulate, student_t

n = int(sys.argv[1]) if len(sys.argv) > 1 else 10_000
x = simulate(GarchSpec(0.4, 0.6, innovations=student_t(4.0)), n + 1, seed=1).x
rows = compare_models(pseudo_observations(x, lag=1), table_zoo("table1"))
print(format_table(rows))
