"""Cross-layer feature alignment trainer."""

__version__ = "0.1.0"

from .data import TrainingPair, load_pairs
from .encoder import EncoderSpec, ModelBundle, SequenceClassifier
from .losses import cosine_alignment_loss, kd_loss, student_loss
from .train import Metrics, TrainerConfig, distill_student, evaluate, train_teacher

__all__ = [
    "TrainingPair",
    "load_pairs",
    "EncoderSpec",
    "ModelBundle",
    "SequenceClassifier",
    "cosine_alignment_loss",
    "kd_loss",
    "student_loss",
    "Metrics",
    "TrainerConfig",
    "distill_student",
    "evaluate",
    "train_teacher",
]
