"""Chapter segmentation of video transcripts.

Subpackages and modules:

* :mod:`chaptering.corpus`: captions to labelled documents, splits, statistics.
* :mod:`chaptering.autograd`: reverse-mode differentiation over numpy arrays.
* :mod:`chaptering.model`: the hierarchical segmenter and streaming inference.
* :mod:`chaptering.training`: optimisation loop and checkpoint selection.
* :mod:`chaptering.metrics`: boundary P/R/F1, P_k, Boundary Similarity.
* :mod:`chaptering.titling`: title-generation inputs, a baseline titler, ROUGE.
"""

__version__ = "0.1.0"
CHECKPOINT_FORMAT_VERSION = 1
