"""Trainable base rankers."""

from .ncf import Adam, NcfModel, NcfParams, init_params, loss_and_grads, ncf_predict, train_ncf
from .pfm import (MfModel, PfmParams, mf_predict, pfm_gradient, pfm_objective, train_pfm,
                  write_trace)

__all__ = ["Adam", "NcfModel", "NcfParams", "init_params", "loss_and_grads", "ncf_predict",
           "train_ncf", "MfModel", "PfmParams", "mf_predict", "pfm_gradient", "pfm_objective",
           "train_pfm", "write_trace"]
