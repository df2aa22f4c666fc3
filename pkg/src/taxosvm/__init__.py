"""Hierarchy-aware multiclass SVMs and a strain-aware benchmark for peak-list mass spectra."""

from taxosvm.kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
