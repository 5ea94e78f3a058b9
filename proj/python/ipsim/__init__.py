"""Hardware design similarity from dataflow graph embeddings."""

import json

from ._core import (
    IpsimError,
    Model,
    compare,
    cosine_embedding_loss,
    cosine_similarity,
    dataflow_equivalent,
    dfg_json,
    embed,
    train,
    variants,
)


def dfg(source, top="", drop_structural=False):
    """Trimmed dataflow graph as a dict with name, nodes, edges and roots."""
    return json.loads(dfg_json(source, top, drop_structural))


__all__ = [
    "IpsimError",
    "Model",
    "compare",
    "cosine_embedding_loss",
    "cosine_similarity",
    "dataflow_equivalent",
    "dfg",
    "dfg_json",
    "embed",
    "train",
    "variants",
]
