"""Covariance-based SPARC decoding for unsourced random access in massive MIMO."""

from .codebook import (
    Codebook,
    CodebookKind,
    CoherenceReport,
    gen_bernoulli,
    gen_sphere_uniform,
    gen_subsampled_fourier,
    mutual_coherence,
)
from .channel import (
    ActivityVector,
    PowerSpec,
    ReceivedBlock,
    build_activity,
    ebn0_to_sigma2,
    sigma2_to_ebn0,
    simulate_block,
)
from .covariance import (
    expected_statistic,
    lifted_adjoint,
    model_covariance,
    sample_covariance,
    screening_statistic,
)
from .decoders import (
    DecoderConfig,
    GammaEstimate,
    accml,
    iht,
    ml,
    ml_coordinate_descent,
    nnls,
    one_step_iht,
    select_top,
    threshold_screen,
)
from .metrics import DecodingReport, pupe
from .tree_code import TreeCodeConfig, make_tree_config, tree_decode, tree_encode

__version__ = "0.1.0"
