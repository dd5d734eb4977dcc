"""One-call fitting: data plus dictionary plus regularizer to a spectral model."""

from __future__ import annotations

import numpy as np

from .dictionary import Dictionary
from .empirical import SnapshotSet, build_gram
from .solver import RegularizerSpec, koopman_matrix, output_weights
from .spectral import KoopmanModel, decompose


def fit_koopman(
    dictionary: Dictionary,
    data: SnapshotSet,
    regularizer: RegularizerSpec | None = None,
) -> KoopmanModel:
    """Estimate the operator matrix and output weights, then decompose.

    Without outputs in the data, W defaults to the identity so the model
    predicts the dictionary functions themselves. meta records the
    regularizer, the sample count, and the Gram condition number.
    """
    reg = regularizer or RegularizerSpec.pseudoinverse()
    gram = build_gram(dictionary, data)
    K = koopman_matrix(gram, reg)
    if data.Y is not None:
        W = output_weights(gram, reg)
    else:
        W = np.eye(dictionary.n_functions)
    meta = {
        "regularizer": reg.to_json_dict(),
        "m": data.m,
        "gram_condition": float(np.linalg.cond(gram.G)),
    }
    return decompose(dictionary, K, W, meta=meta)
