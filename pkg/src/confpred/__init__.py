"""Conformal prediction: transductive and inductive confidence predictors,
the ridge regression confidence machine, and an on-line evaluation harness."""

from .conformal import (
    KnnConformalClassifier,
    SmoothingTape,
    TransductiveClassifier,
    classify_p_table,
    p_value,
    prediction_set,
    smoothed_p_value,
    summarize,
)
from .core import (
    ClassAlphabet,
    ConfidenceCredibility,
    ConformalError,
    DataError,
    Dataset,
    Example,
    IntervalUnion,
    LabelSet,
    NumericalError,
    PValueTable,
    RealLine,
    complete,
)
from .icp import IcpModel, icp_fit, icp_p_value, icp_predict
from .kernels import RBF, Linear, Polynomial
from .nonconformity import KnnConfig, RidgeConfig, delta_scores, knn_scores, residual_scores
from .protocol import (
    Batch,
    Explicit,
    Immediate,
    Lazy,
    ProtocolLedger,
    Slow,
    calibration_report,
    run_batch,
    run_online,
)
from .rrcm import RegressionPrediction, exact_interval, residual_lines, rrcm_predict

__version__ = "0.1.0"
