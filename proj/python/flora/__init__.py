"""Tucker-structured low-rank tensor adapters (FLoRA) with a LoRA baseline.

Thin wrapper over the C++ core. Tensors are numpy arrays of float64; modes
are 0-based.
"""

from ._flora import (
    TuckerAdapter,
    amplification_factor,
    frobenius_norm,
    gradcheck,
    init_tucker,
    locality_dispersion,
    lora_delta_conv,
    lora_delta_linear,
    merge,
    mode_n_fold,
    mode_n_product,
    mode_n_unfold,
    optimal_core,
    param_count,
    pseudo_inverse,
    random_tucker_tensor,
    read_flt1,
    run_recovery,
    svd,
    top_r_singular_subspaces,
    write_flt1,
)

__all__ = [
    "TuckerAdapter",
    "amplification_factor",
    "frobenius_norm",
    "gradcheck",
    "init_tucker",
    "locality_dispersion",
    "lora_delta_conv",
    "lora_delta_linear",
    "merge",
    "mode_n_fold",
    "mode_n_product",
    "mode_n_unfold",
    "optimal_core",
    "param_count",
    "pseudo_inverse",
    "random_tucker_tensor",
    "read_flt1",
    "run_recovery",
    "svd",
    "top_r_singular_subspaces",
    "write_flt1",
]
