"""Train an adaptive forest next to a plain random forest.

The synthetic task has two regimes: the sign of ``x0`` decides whether the
label follows ``x1`` or ``x2``.  Bagged trees see both regimes at once, so
their equal-weight vote blurs the two.  The adaptive forest learns a
policy tree that sends each input to its own weight vector.

Run with ``python demos/02_train_and_compare.py`` (about a minute).
"""

import numpy as np

from adaptive_forests import AfConfig, Dataset, partition, predict_af, score_auc, static_predict, train_af
from adaptive_forests.baselines import equal_weights

rng = np.random.default_rng(4)
n = 400
X = rng.normal(size=(n, 4))
y = np.where(X[:, 0] > 0, X[:, 1] > 0, X[:, 2] > 0).astype(int)
flip = rng.random(n) < 0.05
y[flip] = 1 - y[flip]
ds = Dataset(X, y, ["x0", "x1", "x2", "noise"], 2)

cfg = AfConfig(m=20, cart_depth=4, time_limit=2.0, max_iterations=4, seed=0)
model = train_af(ds, cfg)
split = partition(ds, cfg.seed)
X_test, y_test = X[split.test], y[split.test]

_, P_af = predict_af(model, X_test)
P_rf = static_predict(model.ensemble, equal_weights(model.ensemble.m), X_test)
print(f"test AUC  random forest   {score_auc(P_rf, y_test):.3f}")
print(f"test AUC  adaptive forest {score_auc(P_af, y_test):.3f}")

print()
print("chosen configuration:", model.config.reward_variant, model.config.feature_mode, model.config.data_filter)
print("weight vectors in the pool:", len(model.W))
for h in model.history:
    print(f"  iteration {h['iteration']}: val AUC {h['val_auc']:.3f}")

leaves = model.tree.leaves()
used = sorted({int(model.tree.treatment[v]) for v in leaves})
print("policy tree leaves:", len(leaves), "distinct weight vectors used:", len(used))
