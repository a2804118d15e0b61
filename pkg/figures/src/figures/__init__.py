"""Figure regeneration from the simulator's artifact files."""

from .render import ArtifactError, FigureSpec, render

__all__ = ["ArtifactError", "FigureSpec", "render"]
