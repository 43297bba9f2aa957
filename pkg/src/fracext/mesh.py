"""Tensor-product meshes of the truncated cylinder Omega x (0, Y).

Omega is the unit interval or the unit square with a uniform grid; the
extended direction uses the power-law partition y_k = (k/M)^gamma * Y.
Nodes are numbered lexicographically with x fastest, then x2 (square only),
then y.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError

OMEGA_KINDS = ("unit-interval", "unit-square")


@dataclass(frozen=True)
class OmegaSpec:
    kind: str
    subdivisions: int

    def __post_init__(self):
        if self.kind not in OMEGA_KINDS:
            raise ConfigError(f"unknown domain kind {self.kind!r}; expected one of {OMEGA_KINDS}")
        if int(self.subdivisions) != self.subdivisions or self.subdivisions < 1:
            raise ConfigError(f"subdivisions must be a positive integer, got {self.subdivisions!r}")
        object.__setattr__(self, "subdivisions", int(self.subdivisions))

    @property
    def dim(self) -> int:
        return 1 if self.kind == "unit-interval" else 2

    @property
    def h(self) -> float:
        return 1.0 / self.subdivisions

    @property
    def points_1d(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.subdivisions + 1)

    @property
    def cells(self) -> int:
        return self.subdivisions**self.dim

    @property
    def nodes(self) -> int:
        return (self.subdivisions + 1) ** self.dim


def grading_bound(alpha: float) -> float:
    """Smallest admissible grading exponent: gamma must exceed 3 / (1 - alpha)."""
    return 3.0 / (1.0 - alpha)


def default_grading(alpha: float, margin: float = 1.05) -> float:
    return margin * grading_bound(alpha)


@dataclass(frozen=True)
class YPartition:
    points: np.ndarray
    gamma: float
    M: int
    Y: float
    below_grading_bound: bool = False

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.points)

    def max_neighbor_ratio(self) -> float:
        """Largest ratio between the widths of adjacent intervals (either order)."""
        h = self.widths
        r = h[1:] / h[:-1]
        return float(np.max(np.maximum(r, 1.0 / r)))


def make_y_partition(M: int, Y: float, gamma: float = 1.0, alpha: float | None = None) -> YPartition:
    """Partition of [0, Y] with y_k = (k/M)^gamma * Y; gamma = 1 is uniform.

    When ``alpha`` is given, ``below_grading_bound`` records whether
    gamma <= 3 / (1 - alpha) and a warning is emitted for graded meshes that
    violate it.
    """
    if int(M) != M or M < 2:
        raise ConfigError(f"the y-partition needs M >= 2 intervals, got {M!r}")
    if not (Y > 0.0) or not math.isfinite(Y):
        raise ConfigError(f"truncation height must be positive, got {Y!r}")
    if not (gamma >= 1.0):
        raise ConfigError(f"grading exponent must be >= 1, got {gamma!r}")
    M = int(M)
    k = np.arange(M + 1, dtype=float)
    if gamma == 1.0:
        pts = k / M * Y
    else:
        pts = (k / M) ** gamma * Y
    pts[0] = 0.0
    pts[-1] = Y
    below = False
    if alpha is not None:
        below = gamma <= grading_bound(alpha)
        if below and gamma != 1.0:
            warnings.warn(
                f"grading gamma={gamma:g} does not exceed 3/(1-alpha)={grading_bound(alpha):g}",
                stacklevel=2,
            )
    pts.setflags(write=False)
    return YPartition(points=pts, gamma=float(gamma), M=M, Y=float(Y), below_grading_bound=below)


def choose_truncation(eps: float, lambda1: float, C: float = 1.0) -> float:
    """Truncation height max(1, (2/sqrt(lambda1)) (ln C + 2 ln(1/eps)))."""
    if not (0.0 < eps < 1.0):
        raise ConfigError(f"eps must lie in (0, 1), got {eps!r}")
    if not (lambda1 > 0.0):
        raise ConfigError(f"lambda1 must be positive, got {lambda1!r}")
    if not (C > 0.0):
        raise ConfigError(f"C must be positive, got {C!r}")
    y0 = 2.0 / math.sqrt(lambda1) * (math.log(C) + 2.0 * math.log(1.0 / eps))
    return max(1.0, y0)


@dataclass(frozen=True)
class CylinderMesh:
    omega: OmegaSpec
    ypart: YPartition
    dirichlet: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.omega.dim

    @property
    def n_omega_nodes(self) -> int:
        return self.omega.nodes

    @property
    def n_nodes(self) -> int:
        return self.omega.nodes * (self.ypart.M + 1)

    @property
    def n_cells(self) -> int:
        return self.omega.cells * self.ypart.M

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet)

    @property
    def n_free(self) -> int:
        return int(np.count_nonzero(~self.dirichlet))

    def omega_free_1d(self) -> np.ndarray:
        """Interior grid indices along one coordinate direction of Omega."""
        return np.arange(1, self.omega.subdivisions)

    def y_free(self) -> np.ndarray:
        """y-levels carrying free nodes: all but the top."""
        return np.arange(self.ypart.M)

    def node_coordinates(self) -> np.ndarray:
        """(n_nodes, dim + 1) array of coordinates in node order."""
        x = self.omega.points_1d
        y = self.ypart.points
        if self.dim == 1:
            Yg, Xg = np.meshgrid(y, x, indexing="ij")
            return np.column_stack([Xg.ravel(), Yg.ravel()])
        Yg, X2, X1 = np.meshgrid(y, x, x, indexing="ij")
        return np.column_stack([X1.ravel(), X2.ravel(), Yg.ravel()])

    def node_index(self, *idx: int) -> int:
        """Global index of the node with grid indices (i, [j,] k)."""
        n1 = self.omega.subdivisions + 1
        if self.dim == 1:
            i, k = idx
            return i + n1 * k
        i, j, k = idx
        return i + n1 * (j + n1 * k)

    def cell_nodes(self, *idx: int) -> list[int]:
        """Node indices of the cell with lower-corner grid indices (i, [j,] k)."""
        if self.dim == 1:
            i, k = idx
            return [self.node_index(i + a, k + c) for c in (0, 1) for a in (0, 1)]
        i, j, k = idx
        return [
            self.node_index(i + a, j + b, k + c)
            for c in (0, 1)
            for b in (0, 1)
            for a in (0, 1)
        ]

    def bottom_nodes(self) -> np.ndarray:
        return np.arange(self.omega.nodes)

    def summary(self) -> dict:
        return {
            "n": self.dim,
            "M_omega": self.omega.subdivisions,
            "M": self.ypart.M,
            "Y": self.ypart.Y,
            "gamma": self.ypart.gamma,
            "nodes": self.n_nodes,
            "cells": self.n_cells,
            "free_dofs": self.n_free,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary())


def build_cylinder_mesh(omega: OmegaSpec, ypart: YPartition) -> CylinderMesh:
    m = omega.subdivisions
    lateral_1d = np.zeros(m + 1, dtype=bool)
    lateral_1d[[0, m]] = True
    if omega.dim == 1:
        lateral = lateral_1d
    else:
        lateral = (lateral_1d[:, None] | lateral_1d[None, :]).ravel()
    top = np.zeros(ypart.M + 1, dtype=bool)
    top[-1] = True
    mask = (top[:, None] | lateral[None, :]).ravel()
    mask.setflags(write=False)
    return CylinderMesh(omega=omega, ypart=ypart, dirichlet=mask)
