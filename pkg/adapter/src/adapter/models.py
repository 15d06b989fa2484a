"""Vision backbones and the same-different classification head.

Four backbones: a 50-layer-class convnet and a B/16-class transformer
(torchvision, optionally with pretrained weights), plus small random-init
variants that train on a CPU. Each backbone maps a (3, 224, 224) image to
an embedding vector; `SameDiffModel` appends one linear classifier with
two outputs (logit_diff, logit_same). Backbones take float images in
[0, 1] and apply their own input normalization.
"""

from __future__ import annotations

import torch
from torch import nn

BACKBONES = (
    "convnet-50-class",
    "transformer-B/16-class",
    "convnet-small",
    "transformer-small",
)
PRETRAININGS = ("random", "supervised-imagenet", "contrastive-clip")


class AdapterError(RuntimeError):
    """Configuration or weight-loading failure."""


IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
# The stimuli are dark strokes on a white canvas; shifting white to zero
# lets the strokes, not the constant background, drive the activations.
CANVAS_MEAN = (1.0, 1.0, 1.0)
CANVAS_STD = (1.0, 1.0, 1.0)


class InputNorm(nn.Module):
    """Per-channel (x - mean) / std on [0, 1] images."""

    def __init__(self, mean, std):
        super().__init__()
        self.register_buffer("mean", torch.tensor(mean).view(1, -1, 1, 1))
        self.register_buffer("std", torch.tensor(std).view(1, -1, 1, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return (x - self.mean) / self.std


class TinyViT(nn.Module):
    """Patch-32 transformer: dim 128, depth 4, CLS readout."""

    def __init__(self, image_size: int = 224, patch: int = 32, dim: int = 128,
                 depth: int = 4, heads: int = 4):
        super().__init__()
        n_tokens = (image_size // patch) ** 2
        self.embed_dim = dim
        self.patch_embed = nn.Conv2d(3, dim, kernel_size=patch, stride=patch)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, dim))
        self.pos_embed = nn.Parameter(torch.zeros(1, n_tokens + 1, dim))
        layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=heads, dim_feedforward=4 * dim,
            dropout=0.0, activation="gelu", batch_first=True, norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=depth,
                                             enable_nested_tensor=False)
        self.norm = nn.LayerNorm(dim)
        self.input_norm = InputNorm(CANVAS_MEAN, CANVAS_STD)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        nn.init.trunc_normal_(self.cls_token, std=0.02)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        tokens = self.patch_embed(self.input_norm(x)).flatten(2).transpose(1, 2)
        cls = self.cls_token.expand(tokens.shape[0], -1, -1)
        z = torch.cat([cls, tokens], dim=1) + self.pos_embed
        z = self.encoder(z)
        return self.norm(z[:, 0])


class SmallConvNet(nn.Module):
    """Four stride-2 conv blocks with GroupNorm, global average pooled."""

    def __init__(self):
        super().__init__()
        chans = (3, 32, 64, 128, 256)
        blocks = []
        for cin, cout in zip(chans, chans[1:]):
            blocks += [
                nn.Conv2d(cin, cout, kernel_size=3, stride=2, padding=1),
                nn.GroupNorm(8, cout),
                nn.GELU(),
            ]
        self.features = nn.Sequential(*blocks)
        self.input_norm = InputNorm(CANVAS_MEAN, CANVAS_STD)
        self.embed_dim = chans[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.features(self.input_norm(x)).mean(dim=(2, 3))


class _TorchvisionBackbone(nn.Module):
    """Wraps a torchvision model with its classifier removed."""

    def __init__(self, model: nn.Module, embed_dim: int):
        super().__init__()
        self.model = model
        self.input_norm = InputNorm(IMAGENET_MEAN, IMAGENET_STD)
        self.embed_dim = embed_dim

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.model(self.input_norm(x))


def _torchvision_resnet50(pretraining: str) -> nn.Module:
    try:
        from torchvision import models
    except ImportError as e:
        raise AdapterError("convnet-50-class needs torchvision installed") from e
    weights = None
    if pretraining == "supervised-imagenet":
        weights = models.ResNet50_Weights.IMAGENET1K_V2
    elif pretraining == "contrastive-clip":
        raise AdapterError("convnet-50-class has no contrastive-clip weights here")
    try:
        net = models.resnet50(weights=weights)
    except Exception as e:
        raise AdapterError(f"cannot load resnet50 weights ({pretraining}): {e}") from e
    net.fc = nn.Identity()
    return _TorchvisionBackbone(net, 2048)


def _torchvision_vit_b16(pretraining: str) -> nn.Module:
    try:
        from torchvision import models
    except ImportError as e:
        raise AdapterError("transformer-B/16-class needs torchvision installed") from e
    weights = None
    if pretraining == "supervised-imagenet":
        weights = models.ViT_B_16_Weights.IMAGENET1K_V1
    elif pretraining == "contrastive-clip":
        raise AdapterError(
            "contrastive-clip weights are not bundled; provide a checkpoint instead"
        )
    try:
        net = models.vit_b_16(weights=weights)
    except Exception as e:
        raise AdapterError(f"cannot load vit_b_16 weights ({pretraining}): {e}") from e
    net.heads = nn.Identity()
    return _TorchvisionBackbone(net, 768)


def build_backbone(name: str, pretraining: str = "random") -> nn.Module:
    if name not in BACKBONES:
        raise AdapterError(f"unknown backbone {name!r}; choose from {BACKBONES}")
    if pretraining not in PRETRAININGS:
        raise AdapterError(f"unknown pretraining {pretraining!r}")
    if name in ("convnet-small", "transformer-small") and pretraining != "random":
        raise AdapterError(f"{name} supports only random init")
    if name == "convnet-small":
        return SmallConvNet()
    if name == "transformer-small":
        return TinyViT()
    if name == "convnet-50-class":
        return _torchvision_resnet50(pretraining)
    return _torchvision_vit_b16(pretraining)


class SameDiffModel(nn.Module):
    """Backbone plus one linear head: outputs (logit_diff, logit_same)."""

    def __init__(self, backbone: nn.Module):
        super().__init__()
        self.backbone = backbone
        self.head = nn.Linear(backbone.embed_dim, 2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.backbone(x))

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        return self.backbone(x)


def save_checkpoint(path, model: SameDiffModel, backbone: str, pretraining: str,
                    extra: dict | None = None) -> None:
    torch.save(
        {
            "backbone": backbone,
            "pretraining": pretraining,
            "embed_dim": model.backbone.embed_dim,
            "state_dict": model.state_dict(),
            "extra": extra or {},
        },
        path,
    )


def load_checkpoint(path) -> tuple[SameDiffModel, dict]:
    try:
        blob = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise AdapterError(f"cannot load checkpoint {path}: {e}") from e
    model = SameDiffModel(build_backbone(blob["backbone"], "random"))
    model.load_state_dict(blob["state_dict"])
    return model, blob
