"""Drive the HTTP API end to end in-process: upload a dataset, ask
what-if questions, rank candidate interventions, probe for root causes.

Run: python demos/05_service_walkthrough.py
(For a live server use `effectlab serve --store DIR` and the same
payloads over HTTP.)
"""
import json
import tempfile

import numpy as np
from starlette.testclient import TestClient

from effectlab.service import create_app

rng = np.random.default_rng(0)
n = 400
pressure = rng.normal(size=n)
temperature = rng.normal(size=n)
additive = (rng.random(n) < 1 / (1 + np.exp(-pressure))).astype(float)
quality = 2.0 * additive + 1.5 * pressure - 0.8 * temperature \
    + 0.1 * rng.normal(size=n)
lines = ["additive,pressure,temperature,quality"]
lines += [f"{float(a)!r},{float(p)!r},{float(t)!r},{float(q)!r}"
          for a, p, t, q in zip(additive, pressure, temperature, quality)]
csv_body = "\n".join(lines) + "\n"

store = tempfile.mkdtemp(prefix="effectlab-demo-")
client = TestClient(create_app(store))

resp = client.post("/v1/datasets", content=csv_body.encode())
dataset = resp.json()
print(f"Uploaded dataset {dataset['id']}: {dataset['n_rows']} rows")
for col in dataset["columns"]:
    print(f"  {col['name']:12s} kind={col['kind']}")

resp = client.post("/v1/estimate", json={
    "dataset_id": dataset["id"],
    "treatment_column": "additive",
    "outcome_column": "quality",
    "estimator": "s-learner",
    "bootstrap": True,
    "query": {"rows": [{"pressure": 0.0, "temperature": 0.0}]},
})
est = resp.json()["estimates"][0]
print(f"\nWhat if we add the additive for a nominal batch?")
print(f"  effect {est['point']:+.2f}  "
      f"[{est['lower']:+.2f}, {est['upper']:+.2f}]  (truth: +2.00)")

resp = client.post("/v1/rank", json={
    "dataset_id": dataset["id"],
    "outcome_column": "quality",
    "candidates": [{"column": "additive"},
                   {"column": "pressure"},
                   {"column": "temperature"}],
    "objective": "maximize",
    "estimator": "s-learner",
})
print("\nWhich dial moves quality up the most?")
for row in resp.json()["ranking"]:
    note = f"  ({row['reason']})" if row["flagged"] else ""
    est_txt = "   n/a" if row["estimate"] is None else f"{row['estimate']:+.2f}"
    print(f"  {row['candidate']:12s} {est_txt}{note}")

resp = client.post("/v1/root-cause", json={
    "dataset_id": dataset["id"],
    "target_column": "quality",
    "candidates": ["additive", "pressure", "temperature"],
    "estimator": "s-learner",
})
print("\nRoot-cause probe (largest absolute effect first):")
for row in resp.json()["results"]:
    print(f"  {row['candidate']:12s} probe={row['probe_value']:+.2f} "
          f"effect={row['effect']:+.2f}")

resp = client.post("/v1/jobs/train", json={"steps": 0, "seed": 1})
job = resp.json()
job = client.get(f"/v1/jobs/{job['id']}").json()
print(f"\nTraining job {job['id']}: state={job['state']} "
      f"result={json.dumps(job['result'])}")
