"""Decision trees and random forests on mixed-curvature product manifolds."""

from .angular import AngleMatrix, FeatureMode, MidpointMode, ProjectionIndex, compute_angles, feature_map
from .cart import DecisionTree, Task, TreeHyperparams, component_attribution, fit, fit_classical
from .forest import Forest, ForestHyperparams, MaxFeatures, fit_forest
from .geometry import ComponentSpec, Kind, ManifoldError, PointBatch, Signature
from .sampler import Dataset, MixtureSpec, sample_mixture

__version__ = "0.1.0"
