"""Command-line shell: generate, train, evaluate, serve, export, replay.

Every artifact-producing run writes a ``manifest.json`` next to its
outputs recording the resolved parameters; ``replay`` re-runs a manifest
and reproduces the artifacts byte for byte. Option values resolve with
flag > environment variable (``EFFECTLAB_<COMMAND>_<OPTION>``) > config
file (``--config``, a JSON object keyed by subcommand).
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .baseline import SLearner
from .benchmark import build_benchmark_suite, run_benchmark, OracleEstimator, ZeroEstimator
from .episodes import PriorConfig, generate_batch, narrow_linear_prior, save_episodes
from .errors import ConfigurationError, EffectLabError, TrainingDivergenceError
from .graphs import sample_cpg
from .model.checkpoint import load_checkpoint, save_checkpoint
from .model.config import ModelConfig, TrainConfig
from .model.inference import InContextEstimator
from .model.network import init_params
from .model.train import train as train_model
from .rng import derived_rng
from .scm import instantiate_scm, scm_to_json
from .service import create_app

MANIFEST_FORMAT_VERSION = 1

EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def _fail(code: int, kind: str, message: str):
    click.echo(f"error[{kind}]: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map domain errors to documented exit codes with structured stderr."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigurationError as exc:
            _fail(EXIT_CONFIG_ERROR, "configuration", str(exc))
        except TrainingDivergenceError as exc:
            _fail(EXIT_RUNTIME_ERROR, "divergence", str(exc))
        except EffectLabError as exc:
            _fail(EXIT_RUNTIME_ERROR, type(exc).__name__, str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _load_config(ctx, param, value):
    if value is None:
        return None
    with open(value, "r", encoding="utf-8") as fh:
        ctx.default_map = json.load(fh)
    return value


def _write_manifest(out_dir: Path, command: str, parameters: dict, outputs: dict):
    manifest = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "tool_version": __version__,
        "command": command,
        "parameters": parameters,
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


@click.group(context_settings={"auto_envvar_prefix": "EFFECTLAB"})
@click.version_option(version=__version__, prog_name="effectlab")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              callback=_load_config, is_eager=True, expose_value=False,
              help="JSON config file; keys are subcommand names.")
def main():
    """Causal effect estimation workbench."""


def _resolve_prior(name: str) -> PriorConfig:
    if name == "narrow-linear":
        return narrow_linear_prior()
    if name == "default":
        return PriorConfig()
    raise ConfigurationError(f"unknown prior {name!r}")


# ---------------------------------------------------------------------------


def _run_generate_prior(params: dict, out_dir: Path) -> dict:
    prior = _resolve_prior(params["prior"])
    episodes = generate_batch(prior, params["count"], params["seed"])
    out = out_dir / "episodes.bin"
    save_episodes(out, episodes)
    return {"episodes": "episodes.bin"}


@main.command("generate-prior")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=32, show_default=True,
              help="Number of episodes to generate.")
@click.option("--prior", type=click.Choice(["narrow-linear", "default"]),
              default="default", show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@_guarded
def generate_prior(seed, count, prior, out_dir):
    """Sample pretraining episodes to a binary snapshot."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = {"seed": seed, "count": count, "prior": prior}
    outputs = _run_generate_prior(params, out)
    _write_manifest(out, "generate-prior", params, outputs)
    click.echo(f"wrote {outputs['episodes']} ({count} episodes) to {out}")


def _run_train(params: dict, out_dir: Path) -> dict:
    model_config = ModelConfig()
    ckpt = out_dir / "checkpoint.ckpt"
    if params["steps"] == 0:
        params_init = init_params(model_config, derived_rng(params["seed"], 0))
        save_checkpoint(ckpt, params_init, model_config,
                        extras={"step": 0, "lr": params["learning_rate"]})
    else:
        tc = TrainConfig(steps=params["steps"], batch_size=params["batch_size"],
                         learning_rate=params["learning_rate"], seed=params["seed"])
        prior = _resolve_prior(params["prior"])
        result = train_model(model_config, tc, prior=prior, checkpoint_path=ckpt)
        history = out_dir / "loss_history.csv"
        lines = ["step,loss,smoothed,lr"]
        for i, (l, s, lr) in enumerate(
            zip(result.history, result.smoothed, result.lr_history)
        ):
            lines.append(f"{i},{float(l)!r},{float(s)!r},{float(lr)!r}")
        history.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return {"checkpoint": "checkpoint.ckpt", "loss_history": "loss_history.csv"}
    return {"checkpoint": "checkpoint.ckpt"}


@main.command("train")
@click.option("--steps", type=int, default=500, show_default=True,
              help="0 writes the initialization checkpoint unchanged.")
@click.option("--batch-size", type=int, default=8, show_default=True)
@click.option("--learning-rate", type=float, default=1e-3, show_default=True,
              help="Use 1e-5 to mimic large-model fine-tuning rates.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--prior", type=click.Choice(["narrow-linear", "default"]),
              default="narrow-linear", show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@_guarded
def train(steps, batch_size, learning_rate, seed, prior, out_dir):
    """Pretrain the in-context model on synthetic episodes."""
    if steps < 0:
        raise ConfigurationError("steps must be >= 0")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = {"steps": steps, "batch_size": batch_size,
              "learning_rate": learning_rate, "seed": seed, "prior": prior}
    outputs = _run_train(params, out)
    _write_manifest(out, "train", params, outputs)
    click.echo(f"wrote {outputs['checkpoint']} to {out}")


def _run_evaluate(params: dict, out_dir: Path) -> dict:
    suite = build_benchmark_suite(n_rows=params["n_rows"], seed=params["seed"])
    estimators = []
    for name in params["estimators"]:
        if name == "s-learner":
            estimators.append(SLearner(seed=params["seed"]))
        elif name == "zero":
            estimators.append(ZeroEstimator())
        elif name == "oracle":
            estimators.append(OracleEstimator(suite))
        elif name == "in-context":
            if not params.get("checkpoint"):
                raise ConfigurationError(
                    "estimator 'in-context' requires --checkpoint"
                )
            model_params, model_config, _ = load_checkpoint(params["checkpoint"])
            estimators.append(InContextEstimator(model_params, model_config))
        else:
            raise ConfigurationError(f"unknown estimator {name!r}")
    report = run_benchmark(suite, estimators, split_seed=params["seed"])
    report.to_csv(out_dir / "report.csv")
    (out_dir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    return {"report_csv": "report.csv", "report_txt": "report.txt"}


@main.command("evaluate")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-rows", type=int, default=1000, show_default=True,
              help="Rows per semi-synthetic dataset.")
@click.option("--estimators", default="s-learner", show_default=True,
              help="Comma-separated: s-learner, zero, oracle, in-context.")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Checkpoint for the in-context estimator.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@_guarded
def evaluate(seed, n_rows, estimators, checkpoint, out_dir):
    """Score estimators on the semi-synthetic comparison suite."""
    if n_rows < 100:
        raise ConfigurationError("n-rows must be >= 100")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = {
        "seed": seed,
        "n_rows": n_rows,
        "estimators": [e.strip() for e in estimators.split(",") if e.strip()],
        "checkpoint": checkpoint,
    }
    outputs = _run_evaluate(params, out)
    _write_manifest(out, "evaluate", params, outputs)
    report_text = (out / "report.txt").read_text(encoding="utf-8")
    click.echo(report_text, nl=False)


def _run_export_scm(params: dict, out_dir: Path) -> dict:
    rng = derived_rng(params["seed"])
    prior_cfg = _resolve_prior(params["prior"])
    graph = sample_cpg(prior_cfg.graph, rng)
    scm = instantiate_scm(graph, prior_cfg.mechanisms, rng, seed=params["seed"])
    scm_to_json(scm, out_dir / "scm.json")
    return {"scm": "scm.json"}


@main.command("export-scm")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--prior", type=click.Choice(["narrow-linear", "default"]),
              default="default", show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@_guarded
def export_scm(seed, prior, out_dir):
    """Sample one process model and write it as JSON."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = {"seed": seed, "prior": prior}
    outputs = _run_export_scm(params, out)
    _write_manifest(out, "export-scm", params, outputs)
    click.echo(f"wrote {outputs['scm']} to {out}")


@main.command("serve")
@click.option("--store", "store_dir", type=click.Path(file_okay=False),
              required=True, help="Dataset and checkpoint store directory.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Preload a trained model checkpoint.")
@_guarded
def serve(store_dir, host, port, checkpoint):
    """Run the HTTP service."""
    import uvicorn

    app = create_app(store_dir, checkpoint_path=checkpoint)
    uvicorn.run(app, host=host, port=port, log_level="warning")


_RUNNERS = {
    "generate-prior": _run_generate_prior,
    "train": _run_train,
    "evaluate": _run_evaluate,
    "export-scm": _run_export_scm,
}


@main.command("replay")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@_guarded
def replay(manifest, out_dir):
    """Re-run a recorded manifest; artifacts reproduce byte-identically."""
    with open(manifest, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MANIFEST_FORMAT_VERSION:
        raise ConfigurationError(
            f"unsupported manifest format_version {doc.get('format_version')!r}"
        )
    command = doc.get("command")
    if command not in _RUNNERS:
        raise ConfigurationError(f"manifest command {command!r} is not replayable")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = _RUNNERS[command](doc["parameters"], out)
    _write_manifest(out, command, doc["parameters"], outputs)
    click.echo(f"replayed {command} into {out}")


if __name__ == "__main__":
    main()
