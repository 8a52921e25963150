"""Spectral invariants of compact nilmanifolds.

Submodules:

``group_core``     graded groups, dilations, quasi-norms, lattices
``spectral_data``  explicit spectra of torus and Heisenberg nilmanifolds
``kernels``        convolution kernels and their periodisation
``constants``      Plancherel and heat-kernel constants
``zeta_engine``    heat traces, Weyl fits and spectral zeta functions
``cli``            batch frontend
"""

from .errors import CertificateError, CompletenessError, NilspecError, PoleError

__version__ = "0.1.0"

__all__ = ["CertificateError", "CompletenessError", "NilspecError", "PoleError", "__version__"]
