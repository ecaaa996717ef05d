from snmix.estimation.estimators import (
    AzzaliniPenalized,
    GaussianMixture,
    MaximumLikelihood,
    ModifiedMaximumLikelihood,
    PenalizedMaximumLikelihood,
    estimator_factory,
)
from snmix.estimation.fit import Algorithm, FitConfig, FitResult, fit, fit_best, fit_perturbed, label_sort
from snmix.estimation.modified import constrained_mle_diagnostic, one_sided_components, profile_lrt_me
