"""torsionlab: desk-scale computations around boundary torsion anomalies."""

__version__ = "0.1.0"
