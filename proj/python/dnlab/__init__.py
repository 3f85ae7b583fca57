"""Dirichlet-to-Neumann operators on periodic Lipschitz domains.

Spectral norms, strip and half-space DN operators with coercivity
certificates, and the one-phase interface flow driven by them.
"""

from dnlab._core import (  # noqa: F401
    DnOperator,
    __version__,
    apply_multiplier,
    calibrate_flat_family,
    certify,
    convex_certify,
    fit_decay,
    flat_dn,
    half_space_operator,
    holder_norm,
    lp_certify,
    lp_norm,
    mean,
    norm_h_neg_half,
    norm_wt_half,
    psi_from_phi,
    random_field,
    random_lipschitz,
    seminorm_hs,
    sharp_constant,
    simulate_muskat,
    strip_operator,
)
