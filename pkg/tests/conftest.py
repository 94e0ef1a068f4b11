from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

RED = (220, 30, 30)
GREEN = (30, 180, 40)


def solid_image(color, size=(32, 32)) -> np.ndarray:
    h, w = size
    arr = np.zeros((h, w, 3), dtype=np.uint8)
    arr[:, :] = color
    return arr


def write_png(path: Path, array: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array).save(path)
    return path


def make_class_tree(root: Path, classes: dict[str, list[np.ndarray]]) -> Path:
    """Write root/{class}/img_###.png for each class's list of arrays."""
    for name, arrays in classes.items():
        for i, arr in enumerate(arrays):
            write_png(root / name / f"img_{i:03d}.png", arr)
    return root


@pytest.fixture
def solid_dataset(tmp_path):
    """Flat layout: 6 red 'fire' and 6 green 'nofire' 32x32 images."""
    root = tmp_path / "data"
    make_class_tree(
        root,
        {
            "fire": [solid_image(RED) for _ in range(6)],
            "nofire": [solid_image(GREEN) for _ in range(6)],
        },
    )
    return root


def make_solid_dataset(root: Path, n_per_class: int, size=(224, 224)) -> Path:
    """Larger solid-color fixture used by the end-to-end runs."""
    make_class_tree(
        root,
        {
            "fire": [solid_image(RED, size) for _ in range(n_per_class)],
            "nofire": [solid_image(GREEN, size) for _ in range(n_per_class)],
        },
    )
    return root
