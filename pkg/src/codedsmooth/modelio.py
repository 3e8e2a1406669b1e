"""Model file format: 8-byte magic, text header, little-endian f64 parameters.

Layout:
    b"CSMODEL1"
    ascii header, one "key value" pair per line, terminated by a blank line:
        version 1
        widths 2,64,64,2
        activation relu
        seed 7
        method coded mu=0.5 gamma=1.5 schedule=linear_ramp
    raw parameter block: per layer, weight matrix (row-major) then bias,
    as little-endian float64.
"""

import numpy as np

from .errors import ValidationError
from .models import MLP, MLPSpec

MAGIC = b"CSMODEL1"
VERSION = 1


def save_model(path, model: MLP, seed: int, method_desc: str) -> None:
    spec = model.spec
    header = (
        f"version {VERSION}\n"
        f"widths {','.join(str(w) for w in spec.widths)}\n"
        f"activation {spec.activation}\n"
        f"seed {seed}\n"
        f"method {method_desc}\n"
        "\n"
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header.encode("ascii"))
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w.data, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b.data, dtype="<f8").tobytes())


def load_model(path) -> tuple:
    """Read a model file; returns (model, header dict)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise ValidationError(f"{path}: bad magic, not a model file")
    end = blob.find(b"\n\n", 8)
    if end < 0:
        raise ValidationError(f"{path}: unterminated header")
    header = {}
    for line in blob[8:end].decode("ascii").splitlines():
        key, _, value = line.partition(" ")
        header[key] = value
    if header.get("version") != str(VERSION):
        raise ValidationError(f"{path}: unsupported version {header.get('version')!r}")
    widths = tuple(int(w) for w in header["widths"].split(","))
    spec = MLPSpec(widths=widths, activation=header["activation"])
    model = MLP(spec, rng=None)

    params = np.frombuffer(blob[end + 2:], dtype="<f8")
    if params.size != model.parameter_count():
        raise ValidationError(f"{path}: parameter block has {params.size} values, "
                              f"expected {model.parameter_count()}")
    pos = 0
    for w, b in zip(model.weights, model.biases):
        w.data[...] = params[pos:pos + w.data.size].reshape(w.data.shape)
        pos += w.data.size
        b.data[...] = params[pos:pos + b.data.size]
        pos += b.data.size
    return model, header
