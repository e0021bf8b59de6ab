"""Python bindings for the defnet evidential fusion library."""

from ._defnet import (
    CommandOptions,
    NigParams,
    aleatoric,
    average,
    constrain,
    datagen,
    epistemic,
    evaluate,
    evidential_grad,
    evidential_loss,
    fidelity,
    fuse,
    fuse_n,
    fusedemo,
    generate_mos,
    gradcheck,
    joint_softmax,
    marginals,
    nll_loss,
    normality_diag,
    plcc,
    predictive_interval,
    quality_expectation,
    reg_loss,
    srcc,
    thurstone_prob,
    total_evidence,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
