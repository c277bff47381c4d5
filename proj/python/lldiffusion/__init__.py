"""Low-light enhancement with a degradation-aware conditional diffusion model."""

import torch as _torch  # noqa: F401  (loads the libtorch shared libraries)

from ._core import (  # noqa: F401
    Model,
    NoiseSchedule,
    clean_images,
    color_map,
    ddim_step,
    evaluate,
    forward_diffuse,
    make_synth,
    psnr,
    select_substeps,
    ssim,
    synth_degrade,
    train,
)
