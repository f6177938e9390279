"""Contextualized term-weight exporter for the qbe-lexica engine."""

from .export import ExportConfig, ExportError, StoreKind, WeightExporter

__version__ = "0.1.0"
