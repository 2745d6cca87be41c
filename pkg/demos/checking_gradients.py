"""Finite-difference checks of every shipped model.

Each model's hand-written vector-Jacobian product is compared against
central differences at a few random points.  The ReLU network is also
probed on a kink, where the check should flag non-differentiability
instead of reporting a large error.
"""
import numpy as np

from inverseset import finite_diff_check, load_model
from inverseset.config import models_dir


def main():
    rng = np.random.default_rng(0)
    for path in sorted(models_dir().glob("*.model")):
        m = load_model(path)
        worst = max(finite_diff_check(m, rng.normal(size=m.input_dim)).max_rel_error
                    for _ in range(5))
        print(f"{path.stem:>20}: {m.input_dim} -> {m.output_dim}, worst rel error {worst:.1e}")
    kink = finite_diff_check(load_model(models_dir() / "mlp_relu_2_3_1.model"),
                             np.array([0.0, 0.7]))
    print(f"\nrelu net at a kink: nondifferentiable={kink.nondifferentiable_flag}")


if __name__ == "__main__":
    main()
