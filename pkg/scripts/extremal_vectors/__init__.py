"""Extremal Vectors: minimal-norm solutions of ‖Ty − x₀‖ ≤ ε.

Provides a secular-equation solver for the extremal vector of a dense
operator, KKT verification of its structural properties, parameter sweeps
over ε and x₀, brute-force oracles, and a CSV-emitting command line.
"""

from pathlib import Path

# Derive workspace directory from this file's location
# scripts/extremal_vectors/__init__.py -> scripts -> workspace
SCRIPTS_DIR = Path(__file__).resolve().parent.parent
WORKSPACE_DIR = SCRIPTS_DIR.parent
PROBLEMS_DIR = WORKSPACE_DIR / "problems"
