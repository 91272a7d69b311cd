"""DenseNet121 feature extraction for chest X-ray images.

Each image becomes the 1024-dimensional global average of the final
convolutional feature map (the representation feeding the classifier
head). Images are resized to 224x224, grayscale is replicated to three
channels, and pixels are scaled with the standard ImageNet normalization.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, UnidentifiedImageError
from torchvision.models import DenseNet121_Weights, densenet121

log = logging.getLogger("cxrextract")

FEATURE_DIM = 1024
INPUT_SIZE = 224
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

RANDOM_WEIGHTS_ENV = "CXREXTRACT_RANDOM_WEIGHTS"
_RANDOM_INIT_SEED = 1024


@dataclass(frozen=True)
class ExtractConfig:
    """Fixed DenseNet121 backbone configuration."""

    batch_size: int = 32
    # "imagenet": pretrained weights (downloaded or cached by torchvision);
    # "random": seeded random initialization for offline/test use;
    # any other value: path to a state-dict checkpoint file.
    weights: str = "imagenet"
    device: str = "cpu"

    def describe(self) -> str:
        return f"densenet121 weights={self.weights} input={INPUT_SIZE}"


class FeatureExtractor:
    def __init__(self, config: ExtractConfig | None = None):
        self.config = config or default_config()
        model = densenet121(weights=None)
        if self.config.weights == "imagenet":
            model = densenet121(weights=DenseNet121_Weights.IMAGENET1K_V1)
        elif self.config.weights == "random":
            torch.manual_seed(_RANDOM_INIT_SEED)
            model = densenet121(weights=None)
        else:
            state = torch.load(self.config.weights, map_location="cpu",
                               weights_only=True)
            model.load_state_dict(state)
        self.device = torch.device(self.config.device)
        self.model = model.to(self.device).eval()

    def preprocess(self, image: Image.Image) -> torch.Tensor:
        rgb = image.convert("RGB").resize((INPUT_SIZE, INPUT_SIZE),
                                          Image.BILINEAR)
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
        arr = (arr - IMAGENET_MEAN) / IMAGENET_STD
        return torch.from_numpy(arr.astype(np.float32)).permute(2, 0, 1)

    @torch.no_grad()
    def embed_batch(self, batch: torch.Tensor) -> np.ndarray:
        feature_map = self.model.features(batch.to(self.device))
        pooled = F.adaptive_avg_pool2d(F.relu(feature_map), (1, 1))
        out = pooled.flatten(1).cpu().numpy().astype(np.float32)
        assert out.shape[1] == FEATURE_DIM
        assert np.isfinite(out).all(), "non-finite activation in embedding"
        return out

    def embed_image(self, image: Image.Image) -> np.ndarray:
        return self.embed_batch(self.preprocess(image).unsqueeze(0))[0]

    def embed_file(self, source: str | Path | IO[bytes]) -> np.ndarray:
        with Image.open(source) as image:
            return self.embed_image(image)


def default_config(batch_size: int = 32) -> ExtractConfig:
    weights = "random" if os.environ.get(RANDOM_WEIGHTS_ENV) else "imagenet"
    return ExtractConfig(batch_size=batch_size, weights=weights)


def extract_features(images: Sequence[str | Path],
                     config: ExtractConfig | None = None,
                     extractor: FeatureExtractor | None = None
                     ) -> tuple[np.ndarray, list[str]]:
    """Embed images in order; undecodable files are skipped with a warning.

    Returns (matrix of n_ok x 1024 float32, ids of the images embedded);
    ids are the given paths as strings, in input order minus skips.
    """
    extractor = extractor or FeatureExtractor(config)
    batch_size = extractor.config.batch_size
    rows: list[np.ndarray] = []
    ids: list[str] = []
    pending: list[torch.Tensor] = []

    def flush():
        if pending:
            rows.extend(extractor.embed_batch(torch.stack(pending)))
            pending.clear()

    for path in images:
        try:
            with Image.open(path) as image:
                pending.append(extractor.preprocess(image))
        except (UnidentifiedImageError, OSError) as exc:
            log.warning("skipping undecodable image %s: %s", path, exc)
            continue
        ids.append(str(path))
        if len(pending) >= batch_size:
            flush()
    flush()
    if not rows:
        return np.empty((0, FEATURE_DIM), dtype=np.float32), ids
    return np.stack(rows), ids
