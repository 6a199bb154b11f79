"""Analytic torsion forms of flat cochain complexes over flat tori."""
__version__ = "0.1.0"
