"""Probe recurrent networks for clusters that mirror automaton states.

Ground-truth automata (:mod:`~rnnclust.automata`) label the hidden states of
trained or hand-constructed networks (:mod:`~rnnclust.rnn`,
:mod:`~rnnclust.construct`); clusterings and linear probes of those states
are scored by their entropy-based ambiguity (:mod:`~rnnclust.metrics`).
"""

__version__ = "0.1.0"

from . import (automata, cluster, construct, data, exceptions, extract, metrics, probe, rnn,
               runner, separability, train)

__all__ = ["automata", "cluster", "construct", "data", "exceptions", "extract", "metrics", "probe",
           "rnn", "runner", "separability", "train", "__version__"]
