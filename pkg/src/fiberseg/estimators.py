"""scikit-learn style estimators wrapping the pipeline stages.

``BundleGridBuilder`` turns a tensor volume plus include regions into an
:class:`~fiberseg.raygrid.EvalGrid`; the two segmenters map a grid to a
:class:`~fiberseg.ray_seg.BoundaryField`. All hyper-parameters live in
``__init__`` so ``get_params``/``set_params``/``clone`` work as usual.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_grid, check_regions, check_volume
from .centerline import build_frames, compute_centerline, sample_centerline
from .graph_seg import (CostParams, SmoothnessParams, build_graph, bundle_mean_fa,
                        extract_boundary, min_cut)
from .ray_seg import (RayThresholds, detect_boundary, in_plane_correction,
                      intra_plane_correction)
from .raygrid import GridParams, build_grid, window_size
from .tracking import TrackingParams, restrict_and_crop, seed_points, track_fibers


class BundleGridBuilder(TransformerMixin, BaseEstimator):
    """Track, crop and average a bundle, then lay the ray lattice around it.

    ``fit(volume, regions)`` learns the bundle (``fibers_``, ``centerline_``,
    ``frames_``, ``fa_avg_``); ``transform(volume)`` samples the lattice.
    ``regions`` is a mapping with ``"seed"``, ``"a"`` and ``"b"``
    :class:`~fiberseg.tracking.PlanarRegion` entries.
    """

    def __init__(self, step_size=0.5, fa_stop=0.15, angle_stop=45.0, max_steps=2000,
                 seed_density=4.0, samples_per_fiber=50, n=30, k=36, m=40, d=0.5):
        self.step_size = step_size
        self.fa_stop = fa_stop
        self.angle_stop = angle_stop
        self.max_steps = max_steps
        self.seed_density = seed_density
        self.samples_per_fiber = samples_per_fiber
        self.n = n
        self.k = k
        self.m = m
        self.d = d

    def _tracking_params(self):
        return TrackingParams(self.step_size, self.fa_stop, self.angle_stop,
                              int(self.max_steps), self.seed_density)

    def fit(self, X, y=None, regions=None):
        vol = check_volume(X)
        regions = check_regions(regions if regions is not None else y)
        params = self._tracking_params()
        seeds = seed_points(regions["seed"], params.seed_density)
        tracked = track_fibers(vol, seeds, params)
        self.fibers_ = restrict_and_crop(tracked, regions["a"], regions["b"])
        self.centerline_ = compute_centerline(self.fibers_, int(self.samples_per_fiber))
        self.samples_ = sample_centerline(self.centerline_, int(self.n))
        self.frames_ = build_frames(self.samples_)
        self.fa_avg_ = bundle_mean_fa(self.fibers_, vol)
        self.n_seeds_ = len(seeds)
        return self

    def transform(self, X):
        check_is_fitted(self, "frames_")
        vol = check_volume(X)
        gp = GridParams(int(self.n), int(self.k), int(self.m), float(self.d))
        return build_grid(vol, self.frames_, gp)

    def fit_transform(self, X, y=None, regions=None):
        return self.fit(X, y, regions=regions).transform(X)


class RayBoundarySegmenter(BaseEstimator):
    """Windowed threshold walk along each ray, with optional corrections.

    ``r=None`` derives the window from the grid's voxel spacing at fit time.
    """

    def __init__(self, t_fa=0.2, t_alpha_c=40.0, t_alpha_n=30.0, r=None,
                 in_plane=True, intra_plane=True, max_ratio=1.5):
        self.t_fa = t_fa
        self.t_alpha_c = t_alpha_c
        self.t_alpha_n = t_alpha_n
        self.r = r
        self.in_plane = in_plane
        self.intra_plane = intra_plane
        self.max_ratio = max_ratio

    def fit(self, X, y=None):
        grid = check_grid(X)
        self.window_ = int(self.r) if self.r is not None else window_size(grid.voxel_spacing,
                                                                          grid.params.d)
        self.thresholds_ = RayThresholds(self.t_fa, self.t_alpha_c, self.t_alpha_n, self.window_)
        return self

    def predict(self, X):
        check_is_fitted(self, "thresholds_")
        grid = check_grid(X)
        field = detect_boundary(grid, self.thresholds_)
        self.raw_boundary_ = field
        if self.in_plane:
            field = in_plane_correction(field, self.max_ratio)
        if self.intra_plane:
            field = intra_plane_correction(field, self.max_ratio)
        return field

    def fit_predict(self, X, y=None):
        return self.fit(X, y).predict(X)


class GraphBoundarySegmenter(BaseEstimator):
    """Optimal column surface via s-t min-cut on FA-weighted terminal arcs.

    ``fa_avg=None`` requires the bundle mean FA to be passed to ``fit``; when
    neither is available the mean FA of the innermost lattice points is used.
    """

    def __init__(self, delta_ray=1, delta_plane=1, lambda_weight=1.0, fa_avg=None):
        self.delta_ray = delta_ray
        self.delta_plane = delta_plane
        self.lambda_weight = lambda_weight
        self.fa_avg = fa_avg

    def fit(self, X, y=None, fa_avg=None):
        grid = check_grid(X)
        if self.fa_avg is not None:
            fa_avg = self.fa_avg
        if fa_avg is None:
            fa_avg = float(np.mean(grid.fa[:, :, 0]))
        self.fa_avg_ = float(fa_avg)
        self.smoothness_ = SmoothnessParams(int(self.delta_ray), int(self.delta_plane))
        self.cost_ = CostParams(self.fa_avg_, float(self.lambda_weight))
        return self

    def predict(self, X):
        check_is_fitted(self, "cost_")
        grid = check_grid(X)
        self.network_ = build_graph(grid, self.smoothness_, self.cost_)
        self.source_set_, self.flow_value_ = min_cut(self.network_)
        return extract_boundary(self.network_, self.source_set_)

    def fit_predict(self, X, y=None, fa_avg=None):
        return self.fit(X, y, fa_avg=fa_avg).predict(X)


__all__ = ["BundleGridBuilder", "RayBoundarySegmenter", "GraphBoundarySegmenter",
           "bundle_mean_fa"]
