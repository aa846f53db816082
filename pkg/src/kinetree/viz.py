"""Static SVG renderings of labeled point clouds (orthographic projection)."""

from __future__ import annotations

import numpy as np

from .core import PointCloud

# fixed palette, cycled by label index
PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
    "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#1b9e77", "#d95f02",
)

_PLANES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


def cloud_to_svg(cloud: PointCloud, plane: str = "xz", size: int = 640,
                 point_radius: float = 1.6) -> str:
    """Project points orthographically onto a plane and emit SVG.

    Deterministic: fixed coordinate formatting, points in storage order,
    colors cycled from a fixed palette by label (grey when unlabeled).
    """
    if plane not in _PLANES:
        raise ValueError(f"plane must be one of {sorted(_PLANES)}")
    ax, ay = _PLANES[plane]
    n = len(cloud)
    header = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
    )
    lines = [header, f'<rect width="{size}" height="{size}" fill="white"/>']
    if n:
        u = cloud.points[:, ax]
        v = cloud.points[:, ay]
        lo = np.array([u.min(), v.min()])
        hi = np.array([u.max(), v.max()])
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
        margin = 0.05 * size
        scale = (size - 2 * margin) / span
        xs = margin + (u - lo[0]) * scale
        ys = size - margin - (v - lo[1]) * scale  # second axis points up
        labels = cloud.labels if cloud.labels is not None else None
        for i in range(n):
            color = PALETTE[int(labels[i]) % len(PALETTE)] if labels is not None else "#888888"
            lines.append(
                f'<circle cx="{xs[i]:.2f}" cy="{ys[i]:.2f}" r="{point_radius}" '
                f'fill="{color}"/>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
