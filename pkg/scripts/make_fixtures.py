"""Regenerate the shipped fixture model files.

    python scripts/make_fixtures.py

Random weights come from fixed PCG64 seeds and are rounded to three
decimals so the files stay readable.  mlp_2_4_1 is written by hand: every
hidden unit has positive weight along (1, 1) and every output weight is
positive, so the neuron is monotone along that direction and f o G has no
spurious local maxima below the bands used in the configs.
"""
from pathlib import Path

import numpy as np

from inverseset import diffmap as dm
from inverseset.model_io import save_model

OUT = Path(__file__).resolve().parents[1] / "src" / "inverseset" / "data" / "models"


def random_mlp(widths, seed, activation="tanh", gain=1.5):
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        weights.append(np.round(rng.normal(0.0, gain / np.sqrt(n_in), (n_out, n_in)), 3))
        biases.append(np.round(rng.normal(0.0, 0.3, n_out), 3))
    return dm.MLP.from_layers(weights, biases, activation)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    models = {
        "linear_logistic_2d": dm.LinearLogistic([4.0, 4.0], -4.0),
        "halfplane_2d": dm.LinearLogistic([1.0, 0.0], 0.0),
        "quadratic_2d": dm.Quadratic(np.eye(2)),
        # -(t - 2.5)^2: composed with |x|^2 its superlevel set {>= -2.25} is 1 <= |x|^2 <= 4
        "ring_1d": dm.Quadratic([[-1.0]], [5.0], -6.25),
        # Same annulus scaled by 0.1; gentle enough to share a penalty with a
        # second constraint without the quartic term going unstable.
        "ring_soft_1d": dm.Quadratic([[-0.1]], [0.5], -0.625),
        "identity_2d": dm.Identity(2),
        "squash_2d": dm.MLP.from_layers([np.eye(2)], [np.zeros(2)], "tanh",
                                        output_activation="sigmoid"),
        "mlp_2_4_1": dm.MLP.from_layers(
            [[[1.0, 0.5], [0.5, 1.0], [1.5, -0.5], [-0.25, 1.5]], [[1.0, 0.75, 0.5, 1.25]]],
            [[0.0, -0.5, 0.25, 0.5], [-0.5]], "tanh"),
        "mlp_G_4_16_2": random_mlp([4, 16, 2], 11),
        "mlp_E_2_8_3": random_mlp([2, 8, 3], 13),
        "mlp_relu_2_3_1": dm.MLP.from_layers(
            [[[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]], [[1.0, -0.5, 0.25]]],
            [[0.0, 0.0, 0.0], [0.1]], "relu"),
    }
    for name, model in models.items():
        save_model(model, OUT / f"{name}.model")
        print("wrote", name)


if __name__ == "__main__":
    main()
