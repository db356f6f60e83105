"""Spherical latent flow matching at desk scale.

Geometry on the fixed-radius hypersphere, transport paths with velocity
targets, shell diagnostics, a self-contained flow-matching trainer, and a
binary latent container, all verified against exact identities.
"""

from .errors import (
    ContainerFormatError,
    DegenerateShell,
    DimensionMismatch,
    DivergenceDetected,
    EmptyInput,
    NearZeroNorm,
    RadiusMismatch,
    UnknownCondition,
)
from .sphere import (
    GaussianNormStats,
    SphereToken,
    TangentVector,
    angle_between,
    exp_map,
    gaussian_mean_radius_approx,
    gaussian_mean_radius_exact,
    gaussian_norm_cv,
    gaussian_norm_stats,
    one_step_deficit,
    radial_project,
    sample_uniform_sphere,
    slerp,
    slerp_velocity,
    tangent_project,
)
from .paths import (
    PathKind,
    PathPoint,
    RadialSplit,
    chord_norm_sq,
    linear_path,
    radial_split,
    shell_path,
    slerp_path,
)
from .diagnostics import (
    PathProfile,
    ShellStats,
    SwapPair,
    component_swap,
    off_shell_sigma,
    path_profile,
    shell_stats,
)
from .model import (
    SampleRun,
    SyntheticDataset,
    TrainConfig,
    VelocityField,
    loss_and_grad,
    sample,
    sample_time,
    train,
)
from .container import read_container, write_container

__version__ = "0.1.0"

__all__ = [
    "ContainerFormatError",
    "DegenerateShell",
    "DimensionMismatch",
    "DivergenceDetected",
    "EmptyInput",
    "NearZeroNorm",
    "RadiusMismatch",
    "UnknownCondition",
    "GaussianNormStats",
    "SphereToken",
    "TangentVector",
    "angle_between",
    "exp_map",
    "gaussian_mean_radius_approx",
    "gaussian_mean_radius_exact",
    "gaussian_norm_cv",
    "gaussian_norm_stats",
    "one_step_deficit",
    "radial_project",
    "sample_uniform_sphere",
    "slerp",
    "slerp_velocity",
    "tangent_project",
    "PathKind",
    "PathPoint",
    "RadialSplit",
    "chord_norm_sq",
    "linear_path",
    "radial_split",
    "shell_path",
    "slerp_path",
    "PathProfile",
    "ShellStats",
    "SwapPair",
    "component_swap",
    "off_shell_sigma",
    "path_profile",
    "shell_stats",
    "SampleRun",
    "SyntheticDataset",
    "TrainConfig",
    "VelocityField",
    "loss_and_grad",
    "sample",
    "sample_time",
    "train",
    "read_container",
    "write_container",
    "__version__",
]
