"""Software reproduction of a robot-trained, human-tested wrist-IMU digit gesture experiment."""
from .datasets import GenerationConfig, generate_human_set, generate_robot_set
from .digits import AugmentationParams, augmentation_grid, digit_template, synthesize_trajectory
from .evaluation import ConfusionMatrix, IterationRecord, RunReport, render_comparison, render_report
from .imu import GestureSample, ImuConfig, make_sample
from .mlp import MLPGestureClassifier, MlpModel, forward, init_model
from .preprocessing import GesturePreprocessor
from .protocol import FeatureSet, TrainConfig, run_protocol
from .robot import fk, ik, irb120_model, plan_joint_trajectory, replay
from .signals import FilterSpec, SampledSignal3, lowpass, resample_fourier

__version__ = "0.1.0"

__all__ = [
    "AugmentationParams", "ConfusionMatrix", "FeatureSet", "FilterSpec", "GenerationConfig",
    "GesturePreprocessor", "GestureSample", "ImuConfig", "IterationRecord", "MLPGestureClassifier",
    "MlpModel", "RunReport", "SampledSignal3", "TrainConfig", "augmentation_grid", "digit_template",
    "fk", "forward", "generate_human_set", "generate_robot_set", "ik", "init_model", "irb120_model",
    "lowpass", "make_sample", "plan_joint_trajectory", "render_comparison", "render_report",
    "replay", "resample_fourier", "run_protocol", "synthesize_trajectory",
]
