"""Numerical laboratory for matrix-valued classical symbol calculus and
quantitative spectral asymptotics on truncated tori.

Submodules:
    symbols     classical symbols, composition, adjoint
    elliptic    ellipticity certificates, parametrix, resolvent expansion
    powers      complex powers of matrices and of elliptic symbols
    zeta        localized zeta functions and residue extraction
    quantize    torus grids and dense operator realizations
    spectral    singular value functions and Weyl-limit analysis
    predictors  closed-form asymptotic constants and random models
    experiments named experiment pipelines
    cli         config-driven experiment runner
"""

__version__ = "0.1.0"
