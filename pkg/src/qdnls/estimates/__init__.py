"""Discrete space-time frequency laboratory for the bilinear block estimates."""

from .angular import (
    angular_partition,
    in_sector_support,
    sector_tile_index,
    smooth_bump,
)
from .lattice import (
    BlockSpec,
    LatticeFunction,
    block_product_norm,
    synthesize_block,
    xsb_norm,
)
from .lemmas import (
    case_split_threshold,
    lemma_2_8_constant,
    verify_lemma_2_8,
    verify_lemma_3_5,
    verify_lemma_3_8,
)
from .sweeps import (
    ESTIMATES,
    default_sweep,
    run_bilinear_suite,
    test_bilinear_scaling,
)
