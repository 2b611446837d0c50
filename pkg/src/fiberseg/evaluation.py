"""Voxelization of boundary fields, Dice overlap and per-method DSC summaries."""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyReportError, IncompatibleMasksError
from .phantom import BinaryMask


def voxelize(b, frames, ref):
    """Mask on ``ref``'s grid of voxels enclosed by the star-shaped boundary.

    Each voxel is assigned to the nearest plane origin (ties to the lower
    index); voxels before the first or past the last plane are outside.
    """
    centers = ref.voxel_centers().reshape(-1, 3)
    origins = np.stack([f.origin for f in frames])
    tangents = np.stack([f.tangent for f in frames])
    us = np.stack([f.u for f in frames])
    vs = np.stack([f.v for f in frames])
    inside = np.zeros(len(centers), dtype=bool)
    k = b.k
    step = 2.0 * np.pi / k
    radii_ext = np.concatenate([b.radius, b.radius[:, :1]], axis=1)
    chunk = 65536
    for lo in range(0, len(centers), chunk):
        x = centers[lo:lo + chunk]
        dist2 = np.sum((x[:, None, :] - origins[None, :, :]) ** 2, axis=-1)
        p = np.argmin(dist2, axis=1)
        rel = x - origins[p]
        along = np.sum(rel * tangents[p], axis=1)
        ok = np.ones(len(x), dtype=bool)
        ok &= ~((p == 0) & (along < 0))
        ok &= ~((p == len(frames) - 1) & (along > 0))
        a = np.sum(rel * us[p], axis=1)
        c = np.sum(rel * vs[p], axis=1)
        theta = np.mod(np.arctan2(c, a), 2.0 * np.pi)
        pos = theta / step
        r0 = np.minimum(np.floor(pos).astype(np.int64), k - 1)
        w = pos - r0
        limit = (1.0 - w) * radii_ext[p, r0] + w * radii_ext[p, r0 + 1]
        inside[lo:lo + chunk] = ok & (np.hypot(a, c) <= limit)
    return BinaryMask(ref.dims, ref.spacing, ref.origin, inside.reshape(ref.dims))


def crop_between(mask, region_a, region_b):
    """Restrict a mask to voxels between two include planes (a -> b side)."""
    centers = mask.voxel_centers()
    toward_b = region_b.origin - region_a.origin
    sa = np.sign(region_a.normal @ toward_b) or 1.0
    sb = np.sign(region_b.normal @ -toward_b) or 1.0
    ha = (centers - region_a.origin) @ region_a.normal * sa
    hb = (centers - region_b.origin) @ region_b.normal * sb
    return BinaryMask(mask.dims, mask.spacing, mask.origin, mask.data & (ha >= 0) & (hb >= 0))


def dsc(a, b):
    """Dice coefficient; two empty masks count as identical."""
    if not a.same_grid(b):
        raise IncompatibleMasksError("masks live on different grids")
    na = int(a.data.sum())
    nb = int(b.data.sum())
    if na == 0 and nb == 0:
        return 1.0
    return 2.0 * int(np.sum(a.data & b.data)) / (na + nb)


@dataclass
class EvalReport:
    records: list
    aggregates: dict = field(default_factory=dict)
    std_convention: str = "population"

    def to_dict(self):
        rounded = {m: {k: (round(v, 3) if k != "count" else v) for k, v in agg.items()}
                   for m, agg in self.aggregates.items()}
        return {"records": self.records, "aggregates": rounded,
                "std_convention": self.std_convention}

    def table(self):
        methods = list(self.aggregates)
        rows = [("min DSC(%)", "min"), ("max DSC(%)", "max"),
                ("average DSC(%)", "average"), ("standard deviation", "std")]
        head = ["", *(f"{m}-based approach" for m in methods)]
        body = [[label, *(f"{self.aggregates[m][key]:.3f}" for m in methods)] for label, key in rows]
        widths = [max(len(r[i]) for r in [head, *body]) for i in range(len(head))]
        fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                                  for i, (c, w) in enumerate(zip(r, widths)))
        return "\n".join(fmt(r) for r in [head, *body]) + "\n"


def aggregate(records):
    """Per-method min/max/mean/population std of DSC, in percent."""
    if not records:
        raise EmptyReportError("no evaluation records")
    by_method = {}
    for rec in records:
        by_method.setdefault(rec["method"], []).append(100.0 * float(rec["dsc"]))
    aggregates = {}
    for method in sorted(by_method):
        vals = sorted(by_method[method])
        mean = math.fsum(vals) / len(vals)
        var = math.fsum((v - mean) ** 2 for v in vals) / len(vals)
        aggregates[method] = {"min": vals[0], "max": vals[-1], "average": mean,
                              "std": math.sqrt(var), "count": len(vals)}
    return EvalReport(list(records), aggregates)
