"""Dataset Tool — scans class directories and loads their images."""
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..errors import ConfigError, PbimError
from ..imagecore import SUPPORTED_SUFFIXES, GrayImage, load_image

BACKGROUND = "background"


def list_images(directory: str) -> List[str]:
    """Sorted paths of every supported image directly inside `directory`."""
    if not os.path.isdir(directory):
        raise ConfigError(f"Image directory '{directory}' does not exist")
    names = sorted(n for n in os.listdir(directory)
                   if os.path.splitext(n)[1].lower() in SUPPORTED_SUFFIXES)
    return [os.path.join(directory, n) for n in names]


@dataclass(frozen=True)
class Dataset:
    """root/<class>/* for every class plus root/background/*."""
    root: str
    classes: Dict[str, Tuple[str, ...]]

    def images(self, name: str) -> Tuple[str, ...]:
        if name not in self.classes:
            raise ConfigError(
                f"Dataset '{self.root}' has no class '{name}'. Available: {sorted(self.classes)}"
            )
        return self.classes[name]

    @property
    def background(self) -> Tuple[str, ...]:
        return self.images(BACKGROUND)


def scan_dataset(root: str) -> Dataset:
    if not os.path.isdir(root):
        raise ConfigError(f"Dataset root '{root}' does not exist")
    classes = {}
    for name in sorted(os.listdir(root)):
        path = os.path.join(root, name)
        if os.path.isdir(path):
            classes[name] = tuple(list_images(path))
    if BACKGROUND not in classes:
        raise ConfigError(f"Dataset root '{root}' has no '{BACKGROUND}' directory")
    return Dataset(root, classes)


class ImageLoader:
    """
    Loads images once per path and keeps them for the rest of the run.
    Decode failures are logged and reported as None instead of raising.
    """

    def __init__(self, log: Optional[Callable] = None):
        self._cache: Dict[str, GrayImage] = {}
        self._log_fn = log

    def _log(self, phase: str, message: str):
        if self._log_fn:
            self._log_fn(phase, message)

    def load(self, path: str) -> Optional[GrayImage]:
        if path in self._cache:
            return self._cache[path]
        try:
            img = load_image(path)
        except (PbimError, OSError) as e:
            self._log("warn", f"⚠ Skipping {path}: {e}")
            return None
        self._cache[path] = img
        return img

    def load_all(self, paths: Sequence[str]) -> List[Tuple[str, GrayImage]]:
        """(path, image) for every path that decodes, in input order."""
        loaded = [(p, self.load(p)) for p in paths]
        return [(p, img) for p, img in loaded if img is not None]

    def require_all(self, paths: Sequence[str]) -> List[GrayImage]:
        """Every image, or ConfigError naming the first that fails to decode."""
        images = []
        for p in paths:
            img = self.load(p)
            if img is None:
                raise ConfigError(f"Required image '{p}' could not be loaded")
            images.append(img)
        return images
