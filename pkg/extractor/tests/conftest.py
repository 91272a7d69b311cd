import os

import pytest
from PIL import Image

# tests never download weights; the seeded random backbone is enough to
# exercise shapes, finiteness, determinism, and wiring
os.environ.setdefault("CXREXTRACT_RANDOM_WEIGHTS", "1")

from cxrextract.features import ExtractConfig, FeatureExtractor  # noqa: E402


@pytest.fixture(scope="session")
def extractor():
    return FeatureExtractor(ExtractConfig(batch_size=4, weights="random"))


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("imgs")
    Image.new("L", (64, 80), color=0).save(directory / "black.png")
    Image.new("L", (64, 80), color=255).save(directory / "white.png")
    gradient = Image.new("L", (32, 32))
    gradient.putdata([min(255, 8 * i % 256) for i in range(32 * 32)])
    gradient.save(directory / "gradient.jpg")
    (directory / "not-an-image.png").write_text("plain text")
    return directory
