"""Loss heads with analytic gradients.

Classification reads the [CLS] row through the linear classifier (mean
cross-entropy over the batch). The masked-token head is weight-tied to the
token embedding table (mean cross-entropy over targets). Edge and
alignment prediction score position pairs with sigmoid(h_i . h_j) and sum
binary cross-entropy over the sampled candidates.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ponziscan.encoding import ModelInput
from ponziscan.errors import NoTargets, NonFiniteGradient
from ponziscan.model.config import ModelConfig
from ponziscan.model.encoder import backward_hidden, forward_hidden
from ponziscan.model.params import Params, check_finite, zeros_like_params


def _log_softmax_pick(logits: np.ndarray, target: int) -> tuple[float, np.ndarray]:
    """Cross-entropy of one softmax row and its dLoss/dlogits."""
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    dlogits = np.exp(logits - lse)
    dlogits[target] -= 1.0
    return float(lse - logits[target]), dlogits


def classification_loss_and_grads(batch: list[tuple[ModelInput, int]],
                                  params: Params, config: ModelConfig):
    """Mean label cross-entropy over the batch, with gradients."""
    if not batch:
        raise NoTargets("empty classification batch")
    grads = zeros_like_params(params)
    cls_w = params["cls_w"]
    total = 0.0
    for inp, label in batch:
        H, caches = forward_hidden(inp, params, config)
        h = H[0]
        loss, dlogits = _log_softmax_pick(h @ cls_w, label)
        total += loss
        grads["cls_w"] += np.outer(h, dlogits)
        dH = np.zeros_like(H)
        dH[0] = cls_w @ dlogits
        backward_hidden(dH, inp, caches, params, config, grads)
    scale = 1.0 / len(batch)
    for g in grads.values():
        g *= scale
    check_finite(grads, NonFiniteGradient)
    return total * scale, grads


def mlm_loss_and_grads(inp: ModelInput, targets: list[tuple[int, int]],
                       params: Params, config: ModelConfig):
    """targets: (sequence position, original token id). inp carries the
    already-corrupted token ids. Mean cross-entropy over targets."""
    if not targets:
        raise NoTargets("no masked positions to predict")
    H, caches = forward_hidden(inp, params, config)
    tok_emb = params["tok_emb"]
    grads = zeros_like_params(params)
    dH = np.zeros_like(H)
    total = 0.0
    scale = 1.0 / len(targets)
    for pos, true_id in targets:
        h = H[pos]
        loss, dlogits = _log_softmax_pick(tok_emb @ h, true_id)
        total += loss
        dlogits *= scale
        grads["tok_emb"] += np.outer(dlogits, h)
        dH[pos] += tok_emb.T @ dlogits
    backward_hidden(dH, inp, caches, params, config, grads)
    check_finite(grads, NonFiniteGradient)
    return total * scale, grads


def pair_bce_loss_and_grads(inp: ModelInput, pairs: list[tuple[int, int, int]],
                            params: Params, config: ModelConfig):
    """pairs: (position i, position j, label). p = sigmoid(h_i . h_j);
    binary cross-entropy summed over the pairs. An empty candidate list is
    a valid degenerate case contributing zero loss and zero gradients."""
    grads = zeros_like_params(params)
    if not pairs:
        return 0.0, grads
    H, caches = forward_hidden(inp, params, config)
    dH = np.zeros_like(H)
    total = 0.0
    for i, j, y in pairs:
        z = float(H[i] @ H[j])
        total += float(np.logaddexp(0.0, z)) - y * z
        dz = float(expit(z)) - y
        dH[i] += dz * H[j]
        dH[j] += dz * H[i]
    backward_hidden(dH, inp, caches, params, config, grads)
    check_finite(grads, NonFiniteGradient)
    return total, grads


def add_grads(into: Params, more: Params) -> None:
    for name, g in more.items():
        into[name] += g
