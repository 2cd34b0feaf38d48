"""Contextual scoring models: geographical, temporal, social and categorical."""

from .base import CONTEXT_TAGS, ContextScore
from .categorical import CategoricalModel, ContextUnavailable, categorical_score, fit_categorical
from .kde import GeoKdeModel, fit_geo_kde, geo_score, silverman_bandwidth, weighted_std
from .mgm import MgmModel, fit_mgm, mgm_score
from .social import (FcfModel, SocialPowerLawModel, estimate_beta, fcf_score, fit_fcf,
                     fit_social, social_frequency, social_score)
from .temporal import AmcTransitionGraph, amc_score, build_transition_graph

__all__ = [
    "CONTEXT_TAGS", "ContextScore", "CategoricalModel", "ContextUnavailable", "categorical_score",
    "fit_categorical", "GeoKdeModel", "fit_geo_kde", "geo_score", "silverman_bandwidth",
    "weighted_std", "MgmModel", "fit_mgm", "mgm_score", "FcfModel", "SocialPowerLawModel", "estimate_beta",
    "fcf_score", "fit_fcf", "fit_social", "social_frequency", "social_score",
    "AmcTransitionGraph", "amc_score", "build_transition_graph",
]
