"""Training: L1 objective, Adam, staged orchestration, checkpoints."""

from gdnet.train.checkpoint import (
    MAGIC,
    VERSION,
    CheckpointError,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from gdnet.train.loss import l1_loss
from gdnet.train.optim import HALVE_EVERY_EPOCHS, Adam, lr_at_epoch
from gdnet.train.stages import (
    STAGE_IDS,
    PairLoader,
    StageSpec,
    assemble_batch,
    plot_loss_curve,
    run_stage,
    set_trainable,
    stage_spec,
    write_loss_log,
)

__all__ = [
    "Adam",
    "CheckpointError",
    "HALVE_EVERY_EPOCHS",
    "MAGIC",
    "PairLoader",
    "STAGE_IDS",
    "StageSpec",
    "VERSION",
    "assemble_batch",
    "l1_loss",
    "load_checkpoint",
    "lr_at_epoch",
    "plot_loss_curve",
    "read_checkpoint",
    "run_stage",
    "save_checkpoint",
    "set_trainable",
    "stage_spec",
    "write_loss_log",
]
