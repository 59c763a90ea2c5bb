"""Point quadtree for Euclidean range queries.

Rebuilt from scratch each snake iteration (point sets stay small); supports
circular range queries used to generate collision candidates.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Quadtree"]

LEAF_CAPACITY = 8
MAX_DEPTH = 16


class _Node:
    __slots__ = ("cx", "cy", "half", "depth", "indices", "children")

    def __init__(self, cx, cy, half, depth):
        self.cx = cx
        self.cy = cy
        self.half = half
        self.depth = depth
        self.indices: list[int] = []
        self.children = None

    def insert(self, idx, x, y, points):
        node = self
        while node.children is not None:
            node = node._child_for(x, y)
        node.indices.append(idx)
        if len(node.indices) > LEAF_CAPACITY and node.depth < MAX_DEPTH:
            node._split(points)

    def _split(self, points):
        h = self.half / 2.0
        d = self.depth + 1
        self.children = [
            _Node(self.cx - h, self.cy - h, h, d),
            _Node(self.cx + h, self.cy - h, h, d),
            _Node(self.cx - h, self.cy + h, h, d),
            _Node(self.cx + h, self.cy + h, h, d),
        ]
        pending = self.indices
        self.indices = []
        for idx in pending:
            x, y = points[idx]
            self._child_for(x, y).insert(idx, x, y, points)

    def _child_for(self, x, y):
        i = (1 if x >= self.cx else 0) | (2 if y >= self.cy else 0)
        return self.children[i]


class Quadtree:
    """Static index over an (n, 2) array of points."""

    def __init__(self, points: np.ndarray):
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        n = len(self.points)
        if n == 0:
            self.root = None
            return
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        center = (lo + hi) / 2.0
        half = max(float((hi - lo).max()) / 2.0, 1e-9) * 1.001
        self.root = _Node(float(center[0]), float(center[1]), half, 0)
        for idx, (x, y) in enumerate(self.points):
            self.root.insert(idx, x, y, self.points)

    def query_circle(self, center, radius: float) -> list[int]:
        """Indices of all points with Euclidean distance <= radius from center."""
        if self.root is None:
            return []
        cx, cy = float(center[0]), float(center[1])
        r2 = radius * radius
        out: list[int] = []
        stack = [self.root]
        pts = self.points
        while stack:
            node = stack.pop()
            # Reject nodes whose square is farther than radius from the center.
            dx = max(abs(cx - node.cx) - node.half, 0.0)
            dy = max(abs(cy - node.cy) - node.half, 0.0)
            if dx * dx + dy * dy > r2:
                continue
            if node.children is not None:
                stack.extend(node.children)
            for idx in node.indices:
                px, py = pts[idx]
                if (px - cx) ** 2 + (py - cy) ** 2 <= r2:
                    out.append(idx)
        return out
