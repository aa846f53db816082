"""kinetree: kinematic hierarchy inference from part-labeled 3D point clouds.

Pipeline: procedural articulated objects and simulated scans (synthgen,
dataset) -> candidate part graph (graphbuild) -> graph labeling network
(neural, labelnet) -> tree extraction and joint heuristics (treeextract)
-> evaluation (metrics).  The cli module ties everything together.
"""

from .core import (
    Box,
    Cylinder,
    GroundTruthObject,
    Joint,
    JointPose,
    KinematicTree,
    MotionType,
    Part,
    PointCloud,
    TreeEdge,
    TreeNode,
    apply_articulation,
    tree_to_dot,
    validate_tree,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "Cylinder",
    "GroundTruthObject",
    "Joint",
    "JointPose",
    "KinematicTree",
    "MotionType",
    "Part",
    "PointCloud",
    "TreeEdge",
    "TreeNode",
    "apply_articulation",
    "tree_to_dot",
    "validate_tree",
    "__version__",
]
