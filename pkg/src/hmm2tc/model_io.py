"""Versioned JSON persistence for order-1 and order-2 models."""

from __future__ import annotations

import json

import numpy as np

from .errors import FormatError
from .gmm import GaussianMixture
from .hmm1 import Hmm1Model
from .hmm2 import Hmm2Model

MODEL_FORMAT_VERSION = 1


def model_to_dict(model: Hmm1Model | Hmm2Model, metadata: dict | None = None) -> dict:
    order = 2 if isinstance(model, Hmm2Model) else 1
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "order": order,
        "N": model.n_states,
        "M": model.n_components,
        "D": model.dim,
        "topology": model.topology,
        "mixtures": [
            {
                "weights": m.weights.tolist(),
                "means": m.means.tolist(),
                "variances": m.variances.tolist(),
            }
            for m in model.mixtures
        ],
    }
    if order == 2:
        doc["psi"] = model.psi.tolist()
        doc["a2"] = model.a2.tolist()
        doc["a3"] = model.a3.tolist()
    else:
        doc["psi"] = model.pi.tolist()
        doc["a2"] = model.a.tolist()
    if metadata:
        doc["metadata"] = metadata
    return doc


def model_from_dict(doc: dict) -> Hmm1Model | Hmm2Model:
    try:
        version = doc["format_version"]
        if version != MODEL_FORMAT_VERSION:
            raise FormatError(f"unsupported model format version {version}")
        mixtures = [
            GaussianMixture(np.array(m["weights"]), np.array(m["means"]),
                            np.array(m["variances"]))
            for m in doc["mixtures"]
        ]
        topology = doc["topology"]
        if doc["order"] == 2:
            return Hmm2Model(np.array(doc["psi"]), np.array(doc["a2"]),
                             np.array(doc["a3"]), mixtures, topology)
        if doc["order"] == 1:
            return Hmm1Model(np.array(doc["psi"]), np.array(doc["a2"]),
                             mixtures, topology)
        raise FormatError(f"unsupported model order {doc['order']}")
    except KeyError as exc:
        raise FormatError(f"model document missing field {exc}") from exc


def dumps_model(model, metadata: dict | None = None) -> str:
    # sort_keys + fixed separators makes serialization canonical (byte-stable)
    return json.dumps(model_to_dict(model, metadata), sort_keys=True,
                      separators=(",", ":"))


def save_model(model, path, metadata: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model, metadata))
        fh.write("\n")


def load_model(path) -> Hmm1Model | Hmm2Model:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def load_model_metadata(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return doc.get("metadata", {})
