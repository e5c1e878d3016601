"""Generate the canonical 5-state/3-action fixture files shipped in fixtures/."""
import numpy as np
import kernelgail as kg

rng = np.random.default_rng(42)
S, A = 5, 3
raw = rng.dirichlet(np.ones(S), size=(S, A))
P = 0.55 * raw + 0.45 / S
mdp = kg.TabularMDP(S, A, P, np.full(S, 1 / S), eval_reward=rng.random((S, A)))
kg.save_mdp("fixtures/mdp5.txt", mdp)

fs = kg.build_features(mdp, d_S=5, d_A=2, q=16, bandwidth=1.0, seed=7)
kg.save_features("fixtures/features5.txt", fs)
print("rho_g:", fs.rho_g)
print("wrote fixtures/mdp5.txt and fixtures/features5.txt")
