"""Bridge from torch models to the RRSM attribution-map interchange format."""

from .export import ExportJob, ExportOutcome, IdentityModel, export_maps, gradient_map, load_image, load_model
from .rrsm import encode, write

__version__ = "0.1.0"
