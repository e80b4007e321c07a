"""Point samplers over an axis-aligned domain box."""

import numpy as np


def random_directions(rng, count, n):
    d = rng.standard_normal((count, n))
    norms = np.linalg.norm(d, axis=1)
    while np.any(norms == 0):
        zero = norms == 0
        d[zero] = rng.standard_normal((int(zero.sum()), n))
        norms = np.linalg.norm(d, axis=1)
    return d / norms[:, None]


def ray_exit(box, directions):
    """Largest t with t*u inside ``box`` for each unit row u (box must contain 0)."""
    lo, hi = box[:, 0], box[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hi = np.where(directions > 0, hi / directions, np.inf)
        t_lo = np.where(directions < 0, lo / directions, np.inf)
    return np.minimum(t_hi, t_lo).min(axis=1)


def contains_origin(box):
    return bool(np.all(box[:, 0] <= 0) and np.all(box[:, 1] >= 0))


def uniform_box(rng, box, count):
    lo, hi = box[:, 0], box[:, 1]
    return lo + (hi - lo) * rng.random((count, box.shape[0]))


def sphere_shells(rng, box, count):
    """Points on spheres of uniformly random radius, clipped to the box.

    Directions are uniform on the unit sphere and each radius is a uniform
    fraction of the distance to the box boundary along that direction, so the
    ratio |f(x)|/||x|| is probed evenly over directions.
    """
    box = np.asarray(box, dtype=float)
    if not contains_origin(box):
        return uniform_box(rng, box, count)
    u = random_directions(rng, count, box.shape[0])
    t = ray_exit(box, u) * (1.0 - rng.random(count))  # in (0, t_max]
    return u * t[:, None]


def certification_points(box, count, seed):
    """Half uniform in the box, half along random rays at log-spaced radii.

    The log-spaced half runs from 1e-6 of the box extent up to the boundary so
    both tiny and large inputs are exercised.
    """
    box = np.asarray(box, dtype=float)
    rng = np.random.default_rng(seed)
    n_uniform = count - count // 2
    pts = [uniform_box(rng, box, n_uniform)]
    n_rays = count // 2
    if n_rays:
        if contains_origin(box):
            u = random_directions(rng, n_rays, box.shape[0])
            frac = np.logspace(-6, 0, n_rays)
            rng.shuffle(frac)
            pts.append(u * (ray_exit(box, u) * frac)[:, None])
        else:
            pts.append(uniform_box(rng, box, n_rays))
    return np.vstack(pts)
