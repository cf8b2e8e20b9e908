"""Gradient-descent saliency maps from a classification network.

Images are float64 arrays shaped (3, H, W) with values in [0, 1]; maps are
(H, W) arrays.
"""

from ._core import (
    DataError,
    GradsalError,
    Network,
    NumericalError,
    UsageError,
    backward_to_input,
    best_f,
    class_names,
    clamp_penalty,
    contrast_smooth,
    cost,
    default_config,
    f_beta,
    forward,
    gd_step,
    generate_dataset,
    global_contrast,
    load_network,
    lowlevel_map,
    make_desk_network,
    output_error,
    parse_config,
    pr_curve,
    probe_epsilon,
    raw_saliency,
    refine,
    rgb_to_lab,
    run_pipeline,
    run_saliency,
    save_network,
    slic,
    smooth,
    train,
)

__version__ = "0.1.0"
