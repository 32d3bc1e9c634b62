"""Python bindings for the psg4d scene graph toolkit."""

import json as _json

from ._psg4d import *  # noqa: F401,F403
from ._psg4d import Error, _evaluate_json, default_parallelism

__version__ = "0.1.0"


def evaluate(preds, gts, ks=(20, 50, 100), viou_threshold=0.5, parallelism=None):
    """Score prediction graphs against ground truth, pairwise by position.

    Returns the same report structure that ``psg4d evaluate`` writes. The
    default parallelism honours PSG4D_JOBS.
    """
    if parallelism is None:
        parallelism = default_parallelism()
    return _json.loads(_evaluate_json(list(preds), list(gts), list(ks), viou_threshold, parallelism))
