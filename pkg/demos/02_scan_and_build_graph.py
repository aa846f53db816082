"""From simulated scans to the overcomplete candidate part graph.

Shows the clean vs noisy scan conditions and how the candidate graph always
covers the ground-truth tree edges (the graph labeling network's job is to
prune it back down).
"""

import numpy as np

from kinetree.graphbuild import build_graph, part_min_distances
from kinetree.synthgen import ScanConfig, generate_object, sample_pose, scan_clean, scan_noisy

obj = generate_object("cabinet", seed=11)
pose = sample_pose(obj, seed=5)

clean = scan_clean(obj, pose, n_points=2048, seed=1)
noisy = scan_noisy(obj, pose, ScanConfig(n_points=2048), seed=1)
print(f"clean: {len(clean)} points; noisy after visibility/dropout: {len(noisy)}")

dists = part_min_distances(clean)
np.set_printoptions(precision=3, suppress=True)
print("\nminimum inter-part distances (m):")
print(dists)

graph = build_graph(clean, tau_rel=0.05)
gt = {tuple(sorted((e.parent, e.child))) for e in obj.tree.edges}
print(f"\ncandidate edges ({len(graph.edges)}): {graph.edges}")
print(f"ground-truth edges ({len(gt)}): {sorted(gt)}")
print("GT covered by candidates:", gt <= set(graph.edges))
print("spurious candidates the model must prune:", sorted(set(graph.edges) - gt))
