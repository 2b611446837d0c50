"""Bundle centerline and rotation-minimizing plane frames along it."""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTangentError, EmptyBundleError, InvalidParameterError


@dataclass(frozen=True)
class PlaneFrame:
    origin: np.ndarray
    tangent: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("origin", "tangent", "u", "v")}

    @classmethod
    def from_dict(cls, d):
        return cls(*(np.asarray(d[k], dtype=float) for k in ("origin", "tangent", "u", "v")))


def arc_lengths(points):
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def resample(points, count):
    """``count`` points at equal arc-length spacing, end points kept exactly."""
    points = np.asarray(points, dtype=float)
    if count < 2:
        raise InvalidParameterError("need at least 2 samples")
    if len(points) < 2:
        raise InvalidParameterError("polyline needs at least 2 points")
    s = arc_lengths(points)
    total = s[-1]
    if total <= 0:
        raise InvalidParameterError("polyline has zero length")
    targets = np.linspace(0.0, total, count)
    idx = np.clip(np.searchsorted(s, targets, side="right") - 1, 0, len(points) - 2)
    seg = s[idx + 1] - s[idx]
    frac = np.where(seg > 0, (targets - s[idx]) / np.where(seg > 0, seg, 1.0), 0.0)
    out = points[idx] + frac[:, None] * (points[idx + 1] - points[idx])
    out[0] = points[0]
    out[-1] = points[-1]
    return out


def compute_centerline(fibers, samples_per_fiber=50):
    """Point-wise mean of the arc-length-resampled fibers."""
    if len(fibers) == 0:
        raise EmptyBundleError("cannot average an empty bundle")
    stack = np.stack([resample(f, samples_per_fiber) for f in fibers])
    # sorting makes the sum independent of fiber order
    return np.sort(stack, axis=0).mean(axis=0)


def sample_centerline(points, n):
    """Resample the centerline at ``n`` equally spaced arc-length positions."""
    if n < 2:
        raise InvalidParameterError(f"n must be >= 2, got {n}")
    return resample(points, n)


def _reference(tangent):
    ref = np.array([1.0, 0.0, 0.0])
    if abs(tangent @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = ref - (ref @ tangent) * tangent
    return u / np.linalg.norm(u)


def forward_tangents(points):
    diff = np.diff(points, axis=0)
    norms = np.linalg.norm(diff, axis=1)
    if np.any(norms <= 1e-12):
        i = int(np.argmin(norms))
        raise DegenerateTangentError(f"centerline samples {i} and {i + 1} coincide")
    t = diff / norms[:, None]
    return np.vstack([t, t[-1:]])


def double_reflection(points, tangents, u0):
    """Propagate ``u0`` along the curve by the double-reflection method."""
    us = [u0]
    for i in range(len(points) - 1):
        r = us[-1]
        v1 = points[i + 1] - points[i]
        c1 = v1 @ v1
        r_l = r - (2.0 / c1) * (v1 @ r) * v1
        t_l = tangents[i] - (2.0 / c1) * (v1 @ tangents[i]) * v1
        v2 = tangents[i + 1] - t_l
        c2 = v2 @ v2
        r_next = r_l if c2 <= 1e-30 else r_l - (2.0 / c2) * (v2 @ r_l) * v2
        t = tangents[i + 1]
        r_next = r_next - (r_next @ t) * t
        us.append(r_next / np.linalg.norm(r_next))
    return np.array(us)


def build_frames(samples):
    """Twist-minimized plane frames at each centerline sample."""
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2:
        raise InvalidParameterError("need at least 2 centerline samples")
    tangents = forward_tangents(samples)
    us = double_reflection(samples, tangents, _reference(tangents[0]))
    return [PlaneFrame(samples[i].copy(), tangents[i], us[i], np.cross(tangents[i], us[i]))
            for i in range(len(samples))]


def frames_to_json(frames):
    return [f.to_dict() for f in frames]


def frames_from_json(data):
    return [PlaneFrame.from_dict(d) for d in data]
