"""monotune: Bayesian optimization for hyperparameter tuning with
directional-derivative sign observations on complexity hyperparameters."""

from .acquisition import Incumbent, expected_improvement, maximize_acquisition
from .ep import (
    EPConfig,
    EPState,
    SignObservation,
    ValueObservation,
    ep_fit,
    ep_log_evidence,
    ep_predict,
    sign_probability,
)
from .kernel import (
    ConditioningError,
    JointGram,
    KernelParams,
    build_joint_gram,
    se_kernel,
    se_kernel_dd,
    se_kernel_dobs,
)
from .space import Dimension, SearchSpace

__version__ = "0.1.0"
