"""Numerical toolkit for time-fractional diffusion.

Modules: :mod:`~fracdiff.mlf` (Mittag-Leffler and relaxation functions),
:mod:`~fracdiff.fracops` (singular convolutions and discrete identities),
:mod:`~fracdiff.spectral` (eigenfunction solver on an interval),
:mod:`~fracdiff.fdsolver` (finite-difference solver and principle checks),
:mod:`~fracdiff.fullspace` (Fourier-symbol computations in R^d),
:mod:`~fracdiff.probe` (Harnack and Hoelder probes),
:mod:`~fracdiff.acceptance` (the numbered acceptance criteria) and
:mod:`~fracdiff.cli` (the ``fracdiff`` command).
"""

__version__ = "0.1.0"
