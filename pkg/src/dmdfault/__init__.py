"""Sensor fault detection from a DMDc model, a Kalman observer and a decision tree."""
from .classifier import (
    TrainedTree,
    TreeNode,
    class_reweight,
    cross_validate,
    feature_importances,
    gini,
    tree_fit,
    tree_predict,
)
from .errors import (
    ConfigurationError,
    DmdFaultError,
    FormatVersionError,
    InsufficientDataError,
    MissingChannelError,
    ModelParseError,
    NonUniformSamplingError,
    NumericError,
    ParameterError,
    ShapeError,
    SingleClassError,
)
from .faults import FAULT_MODES, FaultMode, FaultSpec, inject_fault
from .modelio import load_model, save_model
from .observer import (
    ObserverConfig,
    ObserverState,
    StreamingObserver,
    init_state,
    innovation_covariance,
    observer_step,
    run_observer,
)
from .pipeline import (
    VK,
    Detector,
    DetectorConfig,
    DetectorModel,
    MetricsReport,
    evaluate,
    fit_lti,
    offline_train,
    online_detect,
)
from .simulators import (
    FlightSimConfig,
    GkConfig,
    TurbulenceFilter,
    flight_simulate,
    gk_simulate,
    turbulence_forcing,
)
from .sysid import (
    LtiModel,
    dmd_fit,
    dmd_fit_reduced,
    dmdc_fit,
    eigenvalues,
    pseudoinverse,
    truncated_svd,
)
from .timeseries import (
    DelayConfig,
    RecordedSeries,
    delay_embed,
    kfold_split,
    load_csv,
    snapshot_matrices,
)

__version__ = "0.1.0"
