"""Access to the bundled scenario presets (see the presets/ data files)."""

from __future__ import annotations

from importlib import resources

from .errors import ConfigError


def preset_names():
    root = resources.files(__package__) / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    root = resources.files(__package__) / "presets"
    path = root / f"{name}.cfg"
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}")
