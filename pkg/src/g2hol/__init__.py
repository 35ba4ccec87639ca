"""Verification toolkit for split G2 holonomy of type III in signature (4,3).

Exact layer: :mod:`exactnum` (Q(sqrt2) linear algebra), :mod:`g2algebra`
(the 3-form, the matrix algebra, the subalgebra registry) and :mod:`berger`
(curvature endomorphisms and Berger verdicts).

Float layer: :mod:`expr` and :mod:`jet` turn slot functions into Taylor jets,
:mod:`coframe` assembles the eight normal forms, :mod:`curvature` computes the
Levi-Civita data and :mod:`holonomy` issues certificates.
"""

__version__ = "0.1.0"
