"""Backbone loading and penultimate-feature capture.

Any torchvision classification model qualifies: the classification head is
taken to be the *last* ``nn.Linear`` module in the network, its input is
the penultimate feature vector, and a forward pre-hook records that input
during inference. Models are loaded without pretrained weights; pass a
state-dict path to use trained ones, or a seed for reproducible random
initialization (pipeline testing).
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from oodscreen.errors import DimensionError, InvalidInput


def load_backbone(name: str, weights_path=None, seed: int = 0) -> nn.Module:
    """Instantiate a torchvision model by name, in eval mode on CPU."""
    import torchvision.models

    torch.manual_seed(seed)
    try:
        model = torchvision.models.get_model(name, weights=None)
    except (ValueError, KeyError) as exc:
        raise InvalidInput(f"unknown backbone {name!r}: {exc}") from None
    if weights_path is not None:
        state = torch.load(weights_path, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
    model.eval()
    return model


def find_classification_head(model: nn.Module) -> nn.Linear:
    """The last ``nn.Linear`` in module order — the classification layer."""
    head = None
    for module in model.modules():
        if isinstance(module, nn.Linear):
            head = module
    if head is None:
        raise InvalidInput(
            "backbone has no nn.Linear layer to use as a classification head"
        )
    return head


def replace_classification_head(model: nn.Module, n_classes: int,
                                seed: int = 0) -> nn.Module:
    """Swap the classification layer for a fresh ``nn.Linear`` of width K.

    For screening, K = 2. The new layer is seeded, untrained, and meant
    for transfer setups or pipeline testing; the rest of the model is
    untouched.
    """
    if n_classes < 2:
        raise InvalidInput(f"a classification head needs at least 2 classes, "
                           f"got {n_classes}")
    last_name = None
    for name, module in model.named_modules():
        if isinstance(module, nn.Linear):
            last_name = name
    if last_name is None:
        raise InvalidInput(
            "backbone has no nn.Linear layer to use as a classification head"
        )
    parent = model
    *path, attr = last_name.split(".")
    for part in path:
        parent = parent[int(part)] if part.isdigit() else getattr(parent, part)
    old = parent[int(attr)] if attr.isdigit() else getattr(parent, attr)
    torch.manual_seed(seed)
    replacement = nn.Linear(old.in_features, n_classes)
    if attr.isdigit():
        parent[int(attr)] = replacement
    else:
        setattr(parent, attr, replacement)
    return model


def run_inference(model: nn.Module, images: np.ndarray,
                  batch_size: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Run ``images`` (n, 3, H, W) through ``model``.

    Returns ``(features, logits)`` as float32 arrays of shapes ``(n, m)``
    and ``(n, K)``: the captured inputs of the classification head and the
    model's native outputs, row order preserved.
    """
    if batch_size < 1:
        raise InvalidInput(f"batch_size must be positive, got {batch_size}")
    head = find_classification_head(model)
    captured: list[torch.Tensor] = []

    def capture(_module, inputs):
        captured.append(inputs[0].detach())

    feature_chunks: list[np.ndarray] = []
    logit_chunks: list[np.ndarray] = []
    hook = head.register_forward_pre_hook(capture)
    try:
        with torch.no_grad():
            for start in range(0, len(images), batch_size):
                batch = torch.from_numpy(images[start:start + batch_size])
                captured.clear()
                logits = model(batch)
                if len(captured) != 1:
                    raise DimensionError(
                        "classification head ran "
                        f"{len(captured)} times in one forward pass; "
                        "cannot attribute penultimate features"
                    )
                features = captured[0]
                if features.ndim != 2 or features.shape[1] != head.in_features:
                    raise DimensionError(
                        f"captured features have shape {tuple(features.shape)}, "
                        f"expected (batch, {head.in_features})"
                    )
                feature_chunks.append(features.cpu().numpy().astype(np.float32))
                logit_chunks.append(logits.detach().cpu().numpy().astype(np.float32))
    finally:
        hook.remove()

    if not feature_chunks:
        return (np.zeros((0, head.in_features), dtype=np.float32),
                np.zeros((0, head.out_features), dtype=np.float32))
    return np.concatenate(feature_chunks), np.concatenate(logit_chunks)
