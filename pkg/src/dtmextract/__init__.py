"""Terrain model extraction from surface-model rasters."""
from .core import ExtractionConfig, ExtractionResult, extract_dtm
from .raster import Grid, load_grid, read_ascii_grid, save_grid, write_ascii_grid

__all__ = [
    "ExtractionConfig",
    "ExtractionResult",
    "Grid",
    "extract_dtm",
    "load_grid",
    "read_ascii_grid",
    "save_grid",
    "write_ascii_grid",
]
