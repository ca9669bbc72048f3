"""Bit-error and post-selection key rates for coherent-state BPSK over log-normal turbulence."""
from .channel import (
    LognormalDist,
    TurbulenceParams,
    fenton_wilkinson,
    fw_equiv_homodyne,
    fw_equiv_kennedy,
    lognormal_pdf,
    mean_transmittance,
)
from .detection import (
    BerMethod,
    BerResult,
    Receiver,
    SignalAmplitude,
    homodyne_ber,
    homodyne_conditional_pdf,
    kennedy_ber,
    kennedy_conditional_ber,
    kennedy_photon_pmf,
)
from .errors import DomainError, NumericalError
from .montecarlo import McConfig, McEstimate, mc_ber, mc_skr, sample_transmittances
from .qkd import (
    AttackModel,
    SkrResult,
    eve_overlap,
    i_ab_homodyne,
    i_ab_kennedy,
    i_ae,
    optimize_beta,
    ps_threshold_homodyne,
    ps_threshold_kennedy,
    skr_homodyne,
    skr_kennedy,
)
from .quadrature import QuadSpec, binary_entropy, bisect, integrate_lognormal, q_function

__version__ = "0.1.0"
