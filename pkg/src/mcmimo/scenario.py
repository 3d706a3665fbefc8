"""Multi-cell geometry, user drops and long-term fading.

The network is the center hexagonal cell plus its first ring of six
co-channel interferers.  With frequency reuse 1 the ring sits at the
adjacent-cell distance sqrt(3)*R; with reuse 3 the nearest co-channel
cells move out to 3*R (the standard sqrt(3*RF)*R co-channel spacing).
Users are uniform inside their own hexagon outside a small exclusion
disc around the BS.

Long-term gains combine a power-law path loss referenced to 1 km with
log-normal shadowing of 8 dB per link.  Shadowing splits into a
per-user component shared by all BSs and an independent per-link part
(correlation 0.5 by default); the per-link deviation stays at the
nominal sigma either way.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

NUM_CELLS = 7
DEFAULT_EXCLUSION_RADIUS_M = 100.0
DEFAULT_REF_DISTANCE_M = 1000.0
DEFAULT_SHADOW_CORRELATION = 0.5


@dataclass(eq=False)
class Layout:
    """Base-station geometry of the co-channel cluster."""

    reuse_factor: int
    cell_radius: float
    bs_positions: np.ndarray  # (NUM_CELLS, 2), center cell first

    @property
    def num_cells(self):
        return self.bs_positions.shape[0]

    @property
    def co_channel_distance(self):
        return math.sqrt(3.0 * self.reuse_factor) * self.cell_radius


@dataclass(eq=False)
class UserDrop:
    """User coordinates, ``positions[j, k]`` = user k of cell j."""

    positions: np.ndarray  # (L, K, 2)

    @property
    def num_users(self):
        return self.positions.shape[1]


@dataclass
class FrameConfig:
    """TDD frame and bandwidth bookkeeping used by the rate map."""

    bandwidth_hz: float = 20e6
    symbols_total: int = 11
    symbols_downlink: int = 4
    cp_fraction: float = 0.07
    carrier_hz: float = 1.9e9
    coherence_time_s: float = 500e-6

    def __post_init__(self):
        if not 0.0 < self.cp_fraction < 1.0:
            raise ValueError(f"cp_fraction must lie in (0, 1), got {self.cp_fraction}")
        if not 0 < self.symbols_downlink < self.symbols_total:
            raise ValueError("need 0 < symbols_downlink < symbols_total")


def n_smooth(cp_fraction):
    """Number of whole subcarriers per coherence band, floor((1-cp)/cp)."""
    if not 0.0 < cp_fraction < 1.0:
        raise ValueError(f"cp_fraction must lie in (0, 1), got {cp_fraction}")
    return math.floor((1.0 - cp_fraction) / cp_fraction)


def n_smooth_raw(cp_fraction):
    """Unrounded coherence-band-to-subcarrier ratio (1-cp)/cp."""
    if not 0.0 < cp_fraction < 1.0:
        raise ValueError(f"cp_fraction must lie in (0, 1), got {cp_fraction}")
    return (1.0 - cp_fraction) / cp_fraction


def n_smooth_nominal(cp_fraction):
    """Rounded 1/cp convention, e.g. 14 subcarriers for a 7% cyclic prefix.

    Informational only; the metrics never consume this value.
    """
    if not 0.0 < cp_fraction < 1.0:
        raise ValueError(f"cp_fraction must lie in (0, 1), got {cp_fraction}")
    return int(round(1.0 / cp_fraction))


def generate_layout(reuse_factor, radius_m):
    """Center BS at the origin plus six co-channel neighbors.

    Neighbors sit at angles 30 + 60*i degrees and distance
    sqrt(3*reuse_factor)*radius.
    """
    if reuse_factor not in (1, 3):
        raise ValueError(f"unsupported reuse factor {reuse_factor}; expected 1 or 3")
    if radius_m <= 0:
        raise ValueError(f"cell radius must be positive, got {radius_m}")
    spacing = math.sqrt(3.0 * reuse_factor) * radius_m
    pos = np.zeros((NUM_CELLS, 2))
    for i in range(6):
        ang = math.radians(30.0 + 60.0 * i)
        pos[i + 1] = (spacing * math.cos(ang), spacing * math.sin(ang))
    return Layout(reuse_factor=reuse_factor, cell_radius=radius_m, bs_positions=pos)


# Outward normals of the three hexagon edge axes (vertices at 0, 60, ... deg).
_HEX_NORMALS = np.array(
    [
        [math.cos(math.radians(a)), math.sin(math.radians(a))]
        for a in (30.0, 90.0, 150.0)
    ]
)


def in_hexagon(points, radius):
    """Membership test for the origin-centered hexagon with vertex at 0 deg."""
    apothem = math.sqrt(3.0) / 2.0 * radius
    proj = np.abs(points @ _HEX_NORMALS.T)
    return proj.max(axis=-1) <= apothem


def drop_users(layout, num_users, rng, exclusion_radius_m=DEFAULT_EXCLUSION_RADIUS_M):
    """Drop ``num_users`` per cell, uniform over hexagon minus exclusion disc.

    Rejection sampling from the bounding square; same seed reproduces the
    same drop bit for bit.
    """
    if num_users < 1:
        raise ValueError("need at least one user per cell")
    radius = layout.cell_radius
    if exclusion_radius_m >= math.sqrt(3.0) / 2.0 * radius:
        raise ValueError("exclusion radius must be smaller than the cell apothem")
    L = layout.num_cells
    out = np.empty((L, num_users, 2))
    for j in range(L):
        got = 0
        while got < num_users:
            cand = rng.uniform(-radius, radius, size=(2 * num_users + 8, 2))
            ok = in_hexagon(cand, radius) & (
                np.hypot(cand[:, 0], cand[:, 1]) >= exclusion_radius_m
            )
            cand = cand[ok]
            take = min(num_users - got, cand.shape[0])
            out[j, got : got + take] = cand[:take]
            got += take
        out[j] += layout.bs_positions[j]
    return UserDrop(positions=out)


def compute_beta(
    layout,
    drop,
    path_loss_exponent=3.8,
    shadow_sigma_db=8.0,
    rng=None,
    ref_distance_m=DEFAULT_REF_DISTANCE_M,
    shadow_correlation=DEFAULT_SHADOW_CORRELATION,
):
    """Long-term gain tensor ``beta[l, k, j]`` from BS l to user k of cell j.

    ``beta = z * (d / d0)**(-lambda)`` with log-normal shadowing ``z`` of
    ``shadow_sigma_db`` standard deviation per link and path loss
    referenced to ``d0 = ref_distance_m``.  ``shadow_correlation`` is the
    fraction of the shadowing variance carried by a per-user component
    common to all BSs (0 gives fully independent links); the per-link
    marginal deviation is ``shadow_sigma_db`` regardless.
    """
    if path_loss_exponent <= 2.0:
        raise ValueError("path loss exponent must exceed 2")
    if shadow_sigma_db < 0.0:
        raise ValueError("shadowing deviation cannot be negative")
    if not 0.0 <= shadow_correlation <= 1.0:
        raise ValueError("shadow correlation must lie in [0, 1]")
    if shadow_sigma_db > 0.0 and rng is None:
        raise ValueError("shadowing requires an rng")
    pos = drop.positions  # (L, K, 2)
    bs = layout.bs_positions  # (L, 2)
    diff = pos[None, :, :, :] - bs[:, None, None, :]
    d = np.hypot(diff[..., 0], diff[..., 1])  # (l, j, k)
    d = d.transpose(0, 2, 1)  # (l, k, j)
    if np.any(d <= 0.0):
        raise ValueError("coincident BS and user position")
    beta = (d / ref_distance_m) ** (-path_loss_exponent)
    if rng is not None:
        per_user = rng.normal(0.0, shadow_sigma_db, size=(1,) + beta.shape[1:])
        per_link = rng.normal(0.0, shadow_sigma_db, size=beta.shape)
        shadow_db = (
            math.sqrt(shadow_correlation) * per_user
            + math.sqrt(1.0 - shadow_correlation) * per_link
        )
        beta = beta * 10.0 ** (shadow_db / 10.0)
    return beta


def load_scenario_config(path):
    """Read a ``key = value`` scenario file.

    Recognized keys: reuse_factor, radius_m, K, lambda, shadow_sigma_db,
    seed.  Lines starting with ``#`` are comments.
    """
    converters = {
        "reuse_factor": int,
        "radius_m": float,
        "K": int,
        "lambda": float,
        "shadow_sigma_db": float,
        "seed": int,
    }
    cfg = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in converters:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            cfg[key] = converters[key](value)
    return cfg


def save_scenario_config(path, cfg):
    with open(path, "w") as fh:
        for key, value in cfg.items():
            fh.write(f"{key} = {value}\n")


def write_drop_csv(path, layout, drop):
    """Scatter dump (cell, user, x, y); BS rows use user index -1."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "user", "x", "y"])
        for j, (x, y) in enumerate(layout.bs_positions):
            writer.writerow([j, -1, f"{x:.3f}", f"{y:.3f}"])
        for j in range(drop.positions.shape[0]):
            for k in range(drop.positions.shape[1]):
                x, y = drop.positions[j, k]
                writer.writerow([j, k, f"{x:.3f}", f"{y:.3f}"])
