from .core import (
    ArchSpec,
    NetParams,
    count_nonzero,
    cross_entropy,
    forward,
    from_json,
    gradient,
    gradient_check,
    init_params,
    logits,
    loss_and_gradient,
    project_sup,
    to_json,
    zeros,
)
from .stitch import (
    Net,
    from_layers,
    identity_net,
    stitch_compose,
    stitch_diagonal,
    stitch_parallel,
    stitch_sync_depth,
)
from .constructive import build_exp_log_network, clip_net, compose_with_floor, derived_floor
