"""Multi-scale trust quantification for a credit-default classifier."""

from .dataset import ClientRecord, DemographicProfile, SplitSpec, load_records
from .density import DensityConfig, DensityCurve, scenario_densities
from .errors import FintrustError, ValidationError
from .model import MlpModel, PredictionRecord, TrainConfig, read_predictions, write_predictions
from .report import TrustReport, build_report, read_report, write_report
from .trust import (
    TrustConfig,
    conditional_net_trust_scores,
    demographic_trust_spectrum,
    net_trust_score,
    question_answer_trust,
    score_all,
    trust_matrix,
    trust_spectrum,
)

__version__ = "0.1.0"
