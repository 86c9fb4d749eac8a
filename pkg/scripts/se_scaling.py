"""Standard errors from the observed information at n and 2n."""

import argparse
import warnings

import numpy as np

from msnfa import FitConfig, MsnfaModel, SnfaComponent, mixture_sample, multi_start_fit
from msnfa.inference import InformationWarning, observed_info, parameter_names, standard_errors


def truth():
    B = np.array([[1.0], [0.6], [-0.4]])
    comps = [SnfaComponent(np.full(3, m), B, np.array([0.3, 0.4, 0.5]), np.array([1.5])) for m in (0.0, 5.0)]
    return MsnfaModel(np.array([0.4, 0.6]), comps, "msnfa")


def fitted_se(model, n, seed):
    X, _ = mixture_sample(model, n, seed)
    fitm = multi_start_fit(X, 2, 1, FitConfig(n_starts=2, tol=1e-8, seed=seed)).model
    fitm = fitm.permuted(np.argsort([c.mu[0] for c in fitm.components]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InformationWarning)
        return np.asarray(standard_errors(observed_info(fitm, X)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=10)
    args = ap.parse_args()
    T = truth()
    a = fitted_se(T, args.n, args.seed)
    b = fitted_se(T, 2 * args.n, args.seed + 1)
    print("parameter\tse_n\tse_2n\tratio")
    for name, x, y in zip(parameter_names(2, 3, 1, "msnfa"), a, b):
        print(f"{name}\t{x:.4f}\t{y:.4f}\t{y / x:.3f}")
    print(f"# geometric mean ratio {np.exp(np.mean(np.log(b / a))):.4f} (1/sqrt 2 = 0.7071)")


if __name__ == "__main__":
    main()
