"""Train the in-context effect model for a few minutes and watch it
learn to read treatment effects out of raw observational rows.

Run: python demos/03_train_model.py          (about a minute)
     STEPS=500 python demos/03_train_model.py  (full sanity-run budget)
"""
import os

import numpy as np

from effectlab.episodes import generate_batch, narrow_linear_prior
from effectlab.model import (
    ModelConfig,
    TrainConfig,
    episode_loss,
    init_params,
    predict_cate,
    train,
)
from effectlab.rng import derived_rng

steps = int(os.environ.get("STEPS", "150"))
prior = narrow_linear_prior()
model_cfg = ModelConfig()
train_cfg = TrainConfig(steps=steps)

print(f"Training {steps} steps on synthetic linear processes...")
result = train(model_cfg, train_cfg, prior=prior,
               progress=lambda s, loss, sm, lr: print(
                   f"  step {s + 1:4d}  loss {loss:7.4f}  "
                   f"smoothed {sm:7.4f}  lr {lr:.1e}")
               if (s + 1) % 25 == 0 else None)

first = np.mean(result.history[:25])
last = np.mean(result.history[-25:])
print(f"\nLoss: first-25 mean {first:.4f} -> last-25 mean {last:.4f}")

held = generate_batch(prior, 20, derived_rng(999, 0))
init = init_params(model_cfg, derived_rng(train_cfg.seed, 0))
wins = sum(episode_loss(result.params, model_cfg, ep)
           < episode_loss(init, model_cfg, ep) for ep in held)
print(f"Beats its own untrained initialization on {wins}/20 fresh episodes")

ep = held[0]
est = predict_cate(result.params, model_cfg, ep.context, ep.queries)
print("\nOne fresh episode, first three queries:")
for p, t in list(zip(est.point, ep.targets))[:3]:
    print(f"  predicted effect {p:+.3f}   true effect {t:+.3f}")
