"""Regenerate the bundled data files under src/codedopt/data/.

    python scripts/make_fixtures.py

Every array comes from a named seed, so rerunning reproduces the files
bit for bit.
"""
from pathlib import Path

import numpy as np

from codedopt.objectives import SyntheticClassifier, write_matrix_csv

DATA = Path(__file__).resolve().parents[1] / "src" / "codedopt" / "data"

L1_SEED = 2020
CLASSIFIER_SEED = 7
RUNTIME_SEED = 99


def l1_instance():
    # Planted consistent system: the minimum of ||A theta - b||_1 is 0 at theta_star.
    rng = np.random.default_rng(L1_SEED)
    A = 1e-4 * rng.standard_normal((200, 32))
    theta_star = 1.5 * rng.standard_normal(32)
    return A, A @ theta_star, theta_star


def lambda_like_runtimes(n=1000):
    # Synthetic stand-in for a serverless return-time histogram: a tight
    # bulk around 1.2 s with a 10% straggler tail out to ~8 s.
    rng = np.random.default_rng(RUNTIME_SEED)
    bulk = 0.9 + rng.gamma(shape=4.0, scale=0.08, size=n)
    tail = rng.random(n) < 0.1
    bulk[tail] += rng.uniform(1.5, 7.0, size=tail.sum())
    return bulk


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    A, b, theta_star = l1_instance()
    write_matrix_csv(DATA / "l1_A.csv", A)
    write_matrix_csv(DATA / "l1_b.csv", b)
    write_matrix_csv(DATA / "l1_theta_star.csv", theta_star)

    # Weight scales chosen so that, on held-out random instances, the local
    # minimizer of the targeted attack objective (c=0.1, kappa=0) reaches the
    # target's decision boundary about 90% of the time.
    SyntheticClassifier.random(CLASSIFIER_SEED, input_scale=3.0, output_scale=10.0).save(DATA / "classifier")

    times = lambda_like_runtimes()
    header = "# synthetic stand-in for serverless worker return times (seconds), one per line\n"
    (DATA / "lambda_runtimes.txt").write_text(header + "".join(f"{t:.6f}\n" for t in times))


if __name__ == "__main__":
    main()
