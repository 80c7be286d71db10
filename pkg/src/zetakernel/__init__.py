"""Screened zeta kernels, truncated Fredholm determinants and the canonical
system they generate.

Layout:
    specfun      scalar special functions (Gamma, digamma, Bessel I/J)
    fps          exact power series over Q[theta], coefficient tables
    arith        von Mangoldt / multiplicative coefficient tables, zeta ratios
    quadrature   Gauss-Legendre panels, graded endpoint refinement
    archimedean  density profiles and their Laplace transforms
    kernel       the screened kernel K_theta and its transform checks
    fredholm     Nystrom discretization, determinants, integral equations
    verify       cross-validation suites with machine-readable reports
    cli          command line front end
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
