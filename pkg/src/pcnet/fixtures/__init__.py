"""Bundled pc-net files: ``tiny``, ``machining`` and ``dominance``."""

from importlib import resources

NAMES = ("tiny", "machining", "dominance")


def path(name: str):
    if name not in NAMES:
        raise KeyError(f"no bundled fixture {name!r}; choose from {', '.join(NAMES)}")
    return resources.files(__name__) / f"{name}.pcnet.json"


def text(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def load(name: str):
    from ..core import load_pcnet

    return load_pcnet(text(name))
