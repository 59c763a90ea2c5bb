"""riemsnake: adaptive-resolution active contours on an image-derived metric.

The pipeline: compute the gradient structure tensor of a grayscale image,
derive per-pixel contour strength and curvature, assemble a Riemannian metric
that expands space around strong curved contours, then evolve a polygonal
snake whose edges are kept at a fixed Riemannian length. Vertex density thus
follows the geometry of the image content instead of its pixel count, and the
model splits or merges its curves when parts of it collide.
"""

from .imageops import (
    NoiseSpec,
    add_gaussian_noise,
    bilinear_sample,
    gaussian_blur,
    gen_disk,
    gen_ellipse,
    gradient,
    read_pgm,
    write_pgm,
)
from .tensorfeat import (
    ContourFeatures,
    EstimatorParams,
    compute_features,
    contour_features,
    eigen_decompose,
    naive_curvature,
    structure_tensor,
)
from .metric import (
    MetricField,
    MetricParams,
    build_metric,
    identity_metric,
    metric_at,
    riemannian_edge_length,
    riemannian_vertex_distance,
)
from .snake import (
    ConvergenceReport,
    Curve,
    ImageForceContext,
    ModelParams,
    SnakeModel,
    TopologyError,
    detect_collisions,
    evolve,
    init_circle,
    init_rect,
    resample,
    resolve_collisions,
    step,
)
from .quadtree import Quadtree
from .svgout import model_to_svg, write_svg
from .experiments import DEFAULT_CONFIG, segment_image

__version__ = "0.1.0"
