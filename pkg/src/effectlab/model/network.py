"""Numpy transformer for in-context effect prediction.

Rows are set elements, not a sequence: there is no positional encoding,
and attention keys and values come from the context rows only. Context
rows therefore attend to every context row (themselves included), while
query rows read the context but never each other, which makes predictions
invariant to context ordering and independent across queries.

Forward and backward passes are written by hand against a flat
``dict[str, ndarray]`` parameter tree so gradients can be verified
against finite differences without any framework.
"""
from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .config import ModelConfig

_LN_EPS = 1e-5
_GELU_C = 0.7978845608028654  # sqrt(2/pi)
_GELU_A = 0.044715


def init_params(config: ModelConfig, rng, dtype=np.float32) -> dict[str, np.ndarray]:
    """Gaussian(0, 0.02) weights, zero biases, unit layer-norm gains."""
    d, f, din = config.d_model, config.ffn_dim, config.d_in

    def w(*shape):
        return (0.02 * rng.standard_normal(shape)).astype(dtype)

    def z(*shape):
        return np.zeros(shape, dtype=dtype)

    def ones(*shape):
        return np.ones(shape, dtype=dtype)

    params = {"embed.w": w(din, d), "embed.b": z(d)}
    for l in range(config.n_layers):
        p = f"block{l}."
        params[p + "ln1.g"] = ones(d)
        params[p + "ln1.b"] = z(d)
        for name in ("wq", "wk", "wv", "wo"):
            params[p + "attn." + name] = w(d, d)
        for name in ("bq", "bk", "bv", "bo"):
            params[p + "attn." + name] = z(d)
        params[p + "ln2.g"] = ones(d)
        params[p + "ln2.b"] = z(d)
        params[p + "ffn.w1"] = w(d, f)
        params[p + "ffn.b1"] = z(f)
        params[p + "ffn.w2"] = w(f, d)
        params[p + "ffn.b2"] = z(d)
    params["final_ln.g"] = ones(d)
    params["final_ln.b"] = z(d)
    params["readout.w"] = w(d, 1)
    params["readout.b"] = z(1)
    return params


def count_parameters(params: dict[str, np.ndarray]) -> int:
    return int(sum(v.size for v in params.values()))


def cast_params(params: dict[str, np.ndarray], dtype) -> dict[str, np.ndarray]:
    return {k: np.asarray(v, dtype=dtype) for k, v in params.items()}


def assemble_tokens(ctx_x, ctx_t, ctx_y, query_x, config: ModelConfig, dtype=None):
    """Stack context and query rows into one token matrix.

    Token layout: ``[covariates | treatment flag | outcome | outcome mask]``.
    Query rows carry covariates only; their flag, outcome, and mask slots
    stay zero, which is how the network tells them apart from context.
    """
    ctx_x = np.asarray(ctx_x)
    query_x = np.asarray(query_x)
    if dtype is None:
        dtype = ctx_x.dtype
    n_ctx, n_q = ctx_x.shape[0], query_x.shape[0]
    if ctx_x.shape[1] != config.max_features or query_x.shape[1] != config.max_features:
        raise ContractError(
            f"feature width must be {config.max_features}, "
            f"got {ctx_x.shape[1]} and {query_x.shape[1]}"
        )
    tokens = np.zeros((n_ctx + n_q, config.d_in), dtype=dtype)
    tokens[:n_ctx, : config.max_features] = ctx_x
    tokens[:n_ctx, config.max_features] = ctx_t
    tokens[:n_ctx, config.max_features + 1] = ctx_y
    tokens[:n_ctx, config.max_features + 2] = 1.0
    tokens[n_ctx:, : config.max_features] = query_x
    return tokens


def _layernorm_forward(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = (x - mu) * inv
    return g * xhat + b, (xhat, inv)


def _layernorm_backward(dout, cache, g):
    xhat, inv = cache
    dg = (dout * xhat).sum(axis=0)
    db = dout.sum(axis=0)
    dxhat = dout * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _gelu_forward(x):
    u = _GELU_C * (x + _GELU_A * x ** 3)
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), t


def _gelu_backward(dout, x, t):
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x ** 2)
    return dout * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * du)


def _split_heads(x, n_heads):
    # (rows, d) -> (heads, rows, d_head)
    r, d = x.shape
    return x.reshape(r, n_heads, d // n_heads).transpose(1, 0, 2)


def _merge_heads(x):
    h, r, dh = x.shape
    return x.transpose(1, 0, 2).reshape(r, h * dh)


def forward(params, config: ModelConfig, tokens, n_ctx: int, with_cache: bool = False):
    """Run the network; returns predictions for the query rows.

    ``tokens`` is (n_ctx + n_q, d_in) with context rows first. Output is
    (n_q,) in normalized outcome units. With ``with_cache`` the full set
    of intermediates needed by :func:`backward` is returned too.
    """
    if n_ctx < 1:
        raise ContractError("at least one context row is required")
    if tokens.shape[0] <= n_ctx:
        raise ContractError("at least one query row is required")
    scale = 1.0 / np.sqrt(config.d_head)
    h = tokens @ params["embed.w"] + params["embed.b"]
    caches = []
    for l in range(config.n_layers):
        p = f"block{l}."
        h_in = h
        ln1, ln1_cache = _layernorm_forward(h_in, params[p + "ln1.g"], params[p + "ln1.b"])
        q = ln1 @ params[p + "attn.wq"] + params[p + "attn.bq"]
        k = ln1[:n_ctx] @ params[p + "attn.wk"] + params[p + "attn.bk"]
        v = ln1[:n_ctx] @ params[p + "attn.wv"] + params[p + "attn.bv"]
        qh = _split_heads(q, config.n_heads)
        kh = _split_heads(k, config.n_heads)
        vh = _split_heads(v, config.n_heads)
        scores = np.einsum("hsd,hcd->hsc", qh, kh) * scale
        scores -= scores.max(axis=-1, keepdims=True)
        e = np.exp(scores)
        att = e / e.sum(axis=-1, keepdims=True)
        heads = np.einsum("hsc,hcd->hsd", att, vh)
        merged = _merge_heads(heads)
        attn_out = merged @ params[p + "attn.wo"] + params[p + "attn.bo"]
        h_mid = h_in + attn_out
        ln2, ln2_cache = _layernorm_forward(h_mid, params[p + "ln2.g"], params[p + "ln2.b"])
        pre = ln2 @ params[p + "ffn.w1"] + params[p + "ffn.b1"]
        act, gelu_t = _gelu_forward(pre)
        ffn_out = act @ params[p + "ffn.w2"] + params[p + "ffn.b2"]
        h = h_mid + ffn_out
        if with_cache:
            caches.append({
                "h_in": h_in, "ln1": ln1, "ln1_cache": ln1_cache,
                "qh": qh, "kh": kh, "vh": vh, "att": att, "merged": merged,
                "h_mid": h_mid, "ln2": ln2, "ln2_cache": ln2_cache,
                "pre": pre, "act": act, "gelu_t": gelu_t,
            })
    hf, final_cache = _layernorm_forward(h, params["final_ln.g"], params["final_ln.b"])
    preds = (hf[n_ctx:] @ params["readout.w"] + params["readout.b"])[:, 0]
    if not with_cache:
        return preds
    return preds, {"tokens": tokens, "caches": caches, "hf": hf, "final_cache": final_cache}


def backward(params, config: ModelConfig, n_ctx: int, dpreds, cache):
    """Gradients of a scalar loss with given d(loss)/d(preds)."""
    scale = 1.0 / np.sqrt(config.d_head)
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    hf = cache["hf"]
    dhf = np.zeros_like(hf)
    dhf[n_ctx:] = dpreds[:, None] * params["readout.w"][:, 0][None, :]
    grads["readout.w"][:, 0] = (hf[n_ctx:] * dpreds[:, None]).sum(axis=0)
    grads["readout.b"][0] = dpreds.sum()
    dh, dg, db = _layernorm_backward(dhf, cache["final_cache"], params["final_ln.g"])
    grads["final_ln.g"] = dg
    grads["final_ln.b"] = db
    for l in range(config.n_layers - 1, -1, -1):
        p = f"block{l}."
        c = cache["caches"][l]
        # ffn branch
        dffn_out = dh
        grads[p + "ffn.w2"] = c["act"].T @ dffn_out
        grads[p + "ffn.b2"] = dffn_out.sum(axis=0)
        dact = dffn_out @ params[p + "ffn.w2"].T
        dpre = _gelu_backward(dact, c["pre"], c["gelu_t"])
        grads[p + "ffn.w1"] = c["ln2"].T @ dpre
        grads[p + "ffn.b1"] = dpre.sum(axis=0)
        dln2 = dpre @ params[p + "ffn.w1"].T
        dh_mid, dg2, db2 = _layernorm_backward(dln2, c["ln2_cache"], params[p + "ln2.g"])
        grads[p + "ln2.g"] = dg2
        grads[p + "ln2.b"] = db2
        dh_mid = dh_mid + dh  # residual
        # attention branch
        dattn_out = dh_mid
        grads[p + "attn.wo"] = c["merged"].T @ dattn_out
        grads[p + "attn.bo"] = dattn_out.sum(axis=0)
        dmerged = dattn_out @ params[p + "attn.wo"].T
        dheads = _split_heads(dmerged, config.n_heads)
        datt = np.einsum("hsd,hcd->hsc", dheads, c["vh"])
        dvh = np.einsum("hsc,hsd->hcd", c["att"], dheads)
        att = c["att"]
        dscores = att * (datt - (datt * att).sum(axis=-1, keepdims=True))
        dqh = np.einsum("hsc,hcd->hsd", dscores, c["kh"]) * scale
        dkh = np.einsum("hsc,hsd->hcd", dscores, c["qh"]) * scale
        dq = _merge_heads(dqh)
        dk = _merge_heads(dkh)
        dv = _merge_heads(dvh)
        ln1 = c["ln1"]
        grads[p + "attn.wq"] = ln1.T @ dq
        grads[p + "attn.bq"] = dq.sum(axis=0)
        grads[p + "attn.wk"] = ln1[:n_ctx].T @ dk
        grads[p + "attn.bk"] = dk.sum(axis=0)
        grads[p + "attn.wv"] = ln1[:n_ctx].T @ dv
        grads[p + "attn.bv"] = dv.sum(axis=0)
        dln1 = dq @ params[p + "attn.wq"].T
        dln1[:n_ctx] += dk @ params[p + "attn.wk"].T + dv @ params[p + "attn.wv"].T
        dh_in, dg1, db1 = _layernorm_backward(dln1, c["ln1_cache"], params[p + "ln1.g"])
        grads[p + "ln1.g"] = dg1
        grads[p + "ln1.b"] = db1
        dh = dh_in + dh_mid  # residual
    tokens = cache["tokens"]
    grads["embed.w"] = tokens.T @ dh
    grads["embed.b"] = dh.sum(axis=0)
    return grads


def episode_loss(params, config: ModelConfig, episode, with_grads: bool = False):
    """Mean squared error on one episode's normalized targets."""
    dtype = params["embed.w"].dtype
    tokens = assemble_tokens(
        episode.context_features(), episode.context_treatment(),
        episode.context_outcome(), episode.query_features(), config, dtype=dtype,
    )
    n_ctx = episode.n_context
    targets = episode.targets_normalized().astype(dtype)
    if not with_grads:
        preds = forward(params, config, tokens, n_ctx)
        return float(np.mean((preds - targets) ** 2))
    preds, cache = forward(params, config, tokens, n_ctx, with_cache=True)
    resid = preds - targets
    loss = float(np.mean(resid ** 2))
    dpreds = (2.0 / targets.size) * resid
    grads = backward(params, config, n_ctx, dpreds.astype(dtype), cache)
    return loss, grads


def loss_and_grads(params, config: ModelConfig, episodes):
    """Batch loss: mean of per-episode losses; gradients to match."""
    total = 0.0
    acc = {k: np.zeros_like(v) for k, v in params.items()}
    e = len(episodes)
    for ep in episodes:
        loss, grads = episode_loss(params, config, ep, with_grads=True)
        total += loss
        for k in acc:
            acc[k] += grads[k]
    for k in acc:
        acc[k] /= e
    return total / e, acc
