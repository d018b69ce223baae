"""Upper-tail large deviations toolkit for subgraph counts in sparse random graphs.

Submodules: ``graphs`` (representations and predicates), ``patterns``
(motif combinatorics), ``counting`` (exact copy counts), ``rates`` (speeds,
rate functions, regime classification), ``meanfield`` (relative-entropy
variational objects), ``structures`` (detectors and core pruning),
``montecarlo`` (sampling, oracles, estimators), ``cli`` (the command line).
"""

__version__ = "0.1.0"
