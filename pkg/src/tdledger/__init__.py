"""tdledger: a multi-analyzer technical-debt ledger.

Normalizes findings from static-analysis reports into TD instances, prices
them with a per-item cost model, ranks projects by quality attributes,
analyzes dependency graphs for architecture debt and diffs runs for CI gating.
"""

__version__ = "0.1.0"
