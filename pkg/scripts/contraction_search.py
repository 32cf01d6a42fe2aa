"""Search for circuits where depolarizing noise raises a |<Z>| marginal.

Single-qubit depolarizing noise shrinks every Bloch vector, but once CNOTs
spread correlations the noiseless marginal can be a near-cancellation of
several Pauli terms that the noise damps unequally. This script counts how
often |z_noisy| > |z_exact| on touched qubits for random circuits, and reports
the smallest violating chromosome it finds.
"""

import argparse

import numpy as np

from gatqnn.backend import BackendConfig, execute_vector
from gatqnn.chromosome import GeneBounds, random_chromosome
from gatqnn.circuit import build, param_count

EXACT = BackendConfig("exact")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    bounds = GeneBounds()
    for p in (0.01, 0.05, 0.1):
        noisy_backend = BackendConfig("noisy", p=p)
        hits, worst, smallest = 0, 0.0, None
        for _ in range(args.trials):
            ch = random_chromosome(bounds, rng)
            spec = build(ch, 4)
            thetas = rng.uniform(-np.pi, np.pi, len(spec.slots))
            x = rng.standard_normal(16)
            x /= np.linalg.norm(x)
            wires = sorted({w for g in spec.gates for w in g.wires})
            exact = execute_vector(spec, x, thetas, EXACT)
            noisy = execute_vector(spec, x, thetas, noisy_backend)
            excess = float(np.max(np.abs(noisy[wires]) - np.abs(exact[wires])))
            if excess > 1e-10:
                hits += 1
                worst = max(worst, excess)
                size = (param_count(ch), spec.resources.cnot)
                if smallest is None or size < smallest[0]:
                    smallest = (size, ch, excess)
        print(f"p={p}: {hits}/{args.trials} violate, worst excess {worst:.4f}, smallest {smallest}")


if __name__ == "__main__":
    main()
