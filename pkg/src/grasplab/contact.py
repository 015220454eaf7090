"""Contact extraction for a closing jaw pair and the antipodal quality score.

Contacts mimic rigid jaws closing symmetrically along the grasp frame Y
axis: within the closing region, the +Y jaw first touches the in-region
point with the largest Y coordinate and the -Y jaw the point with the
smallest. The antipodal score is the product of unsigned cosines between
the closing axis and the two contact normals; 1 means perfectly opposed
surface normals (force closure in the frictionless sense), 0 means the
jaws land on faces parallel to the closing axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grasp, GripperParams, PointCloud, grasp_frame, world_to_grasp
from .collision import gripper_volume

__all__ = ["ContactPair", "find_contacts", "antipodal_score", "width_fit"]


@dataclass(frozen=True, eq=False)
class ContactPair:
    """Two jaw contacts in world coordinates plus their closing-axis coordinates."""

    ci: np.ndarray
    cj: np.ndarray
    ni: np.ndarray
    nj: np.ndarray
    y_i: float  # grasp-frame Y of ci
    y_j: float  # grasp-frame Y of cj


def find_contacts(cloud: PointCloud, g: Grasp, s: GripperParams) -> ContactPair | None:
    """First-touch contact pair inside the closing region, or None.

    Returns None when either side of the closing plane is unoccupied; a
    cloud without normals is an error.
    """
    if cloud.normals is None:
        raise ValueError("find_contacts requires a cloud with normals")
    if len(cloud) == 0:
        return None
    q = world_to_grasp(grasp_frame(g), cloud.points)
    inside = np.flatnonzero(gripper_volume(s).closing.contains(q))
    if inside.size == 0:
        return None
    y = q[inside, 1]
    pos = inside[y >= 0.0]
    neg = inside[y < 0.0]
    if pos.size == 0 or neg.size == 0:
        return None
    i = pos[np.argmax(q[pos, 1])]
    j = neg[np.argmin(q[neg, 1])]
    return ContactPair(
        ci=cloud.points[i].copy(),
        cj=cloud.points[j].copy(),
        ni=cloud.normals[i].copy(),
        nj=cloud.normals[j].copy(),
        y_i=float(q[i, 1]),
        y_j=float(q[j, 1]),
    )


def antipodal_score(pair: ContactPair, g: Grasp) -> float:
    """Force-closure proxy |cos(r, ni)| * |cos(r, nj)| in [0, 1].

    Unsigned cosines make the score independent of normal orientation
    (estimated normals may point inward or outward).
    """
    r = g.orientation
    score = 1.0
    for n in (pair.ni, pair.nj):
        length = float(np.linalg.norm(n))
        if length < 1e-12:
            raise ValueError("contact normal has zero length")
        score *= abs(float(r @ n)) / length
    return min(score, 1.0)


def width_fit(pair: ContactPair, s: GripperParams) -> bool:
    """True iff the contact spread along the closing axis fits the opening W."""
    return abs(pair.y_i - pair.y_j) <= s.width
