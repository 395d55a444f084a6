"""
Módulo de geometría del cilindro.

Este módulo define la métrica del cilindro, las paredes de ley de potencia,
la malla de discretización y las regiones de la red de sitios sobre las que
se restringe el desorden.
"""

import math
from typing import Dict, Tuple, Union

import numpy as np
from loguru import logger

from .errors import InputError
from .models import Grid, ModelConfig, RegionSpec, Side
from config.settings import ERROR_MESSAGES


ArrayLike = Union[float, np.ndarray]

# Nombres canónicos de las regiones
REGION_NAMES = ("Lambda", "Lambda_l", "Lambda_r", "Lambda_b", "Lambda_1", "Lambda_2")

# Tolerancia para decidir si un entero cae en un intervalo real
_SITE_TOL = 1e-9


def star_distance(p, q, L: float) -> ArrayLike:
    """
    Distancia geodésica en el cilindro, ínfimo sobre los períodos en y.

    Args:
        p: Punto (x, y) o arreglo (..., 2)
        q: Punto (x, y) o arreglo (..., 2)
        L: Período en y

    Returns:
        Distancia no negativa (escalar o arreglo)

    Raises:
        InputError: Si L no es positivo o hay coordenadas no finitas
    """
    if not L > 0:
        raise InputError(f"El período debe ser positivo: L={L}")

    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise InputError(ERROR_MESSAGES['non_finite'].format((p.tolist(), q.tolist())))

    dx = p[..., 0] - q[..., 0]
    dy = p[..., 1] - q[..., 1]
    dy = dy - L * np.round(dy / L)
    distance = np.hypot(dx, dy)
    return float(distance) if np.ndim(distance) == 0 else distance


def wall_potential(x: ArrayLike, side, cfg: ModelConfig) -> ArrayLike:
    """
    Pared de ley de potencia fuera de la muestra.

    U_ℓ(x) = c_ℓ|x + L/2|^{m_ℓ} para x < −L/2 y cero en otro caso;
    la pared derecha es la imagen especular con (c_r, m_r).

    Args:
        x: Coordenada(s)
        side: Lado de la pared
        cfg: Configuración del modelo

    Returns:
        Energía potencial en x
    """
    side = Side.parse(side)
    values = np.asarray(x, dtype=float)
    half = 0.5 * cfg.L

    if side == Side.LEFT:
        depth = np.clip(-half - values, 0.0, None)
        wall = cfg.wall_left
    else:
        depth = np.clip(values - half, 0.0, None)
        wall = cfg.wall_right

    potential = wall.c * depth ** wall.m
    return float(potential) if np.ndim(potential) == 0 else potential


def build_grid(cfg: ModelConfig) -> Grid:
    """
    Construye la malla del cilindro a partir de la configuración.

    Args:
        cfg: Configuración del modelo

    Returns:
        Grid: Malla con x Dirichlet y y periódico de período L
    """
    spec = cfg.resolved_grid()
    x = np.linspace(spec.x_min, spec.x_max, spec.n_x)
    grid = Grid(x=x, n_y=spec.n_y, period=float(cfg.L))
    logger.debug(f"Malla {grid.n_x}×{grid.n_y} (h_x={grid.h_x:.4f}, h_y={grid.h_y:.4f})")
    return grid


def y_site_range(L: int) -> Tuple[int, int]:
    """Índices m extremos con −L/2 ≤ m < L/2."""
    m_lo = int(math.ceil(-0.5 * L - _SITE_TOL))
    m_hi = int(math.ceil(0.5 * L - _SITE_TOL)) - 1
    return m_lo, m_hi


def wrap_site_index(m: np.ndarray, L: int) -> np.ndarray:
    """Representante de m módulo L dentro del rango de sitios."""
    m_lo, _ = y_site_range(L)
    return np.mod(np.asarray(m, dtype=int) - m_lo, L) + m_lo


def region_bounds(cfg: ModelConfig) -> Dict[str, Tuple[float, float]]:
    """
    Intervalos en n de cada región (la coordenada m recorre todo el círculo).

    Args:
        cfg: Configuración del modelo

    Returns:
        Dict[str, Tuple[float, float]]: Intervalo cerrado [n_lo, n_hi] por región
    """
    half = 0.5 * cfg.L
    D = cfg.D
    inner = D / 4.0 - 1.0
    return {
        'Lambda': (-half, half),
        'Lambda_l': (-half, -half + 0.75 * D + 1.0),
        'Lambda_r': (half - 0.75 * D - 1.0, half),
        'Lambda_b': (-half + inner, half - inner),
        'Lambda_2': (-half, -half + inner),
    }


def _sites_in(n_lo: float, n_hi: float, L: int) -> Tuple[Tuple[int, int], ...]:
    """Sitios enteros con n ∈ [n_lo, n_hi] y todas las m del círculo."""
    half = 0.5 * L
    lo = int(math.ceil(max(n_lo, -half) - _SITE_TOL))
    hi = int(math.floor(min(n_hi, half) + _SITE_TOL))
    m_lo, m_hi = y_site_range(L)
    return tuple((n, m) for n in range(lo, hi + 1) for m in range(m_lo, m_hi + 1))


def build_regions(cfg: ModelConfig) -> Dict[str, RegionSpec]:
    """
    Construye las regiones Λ, Λ_ℓ, Λ_r, Λ_b, Λ_1 y Λ_2.

    Λ_1 = Λ_ℓ \\ Λ_2, de modo que Λ_1 ∪ Λ_2 = Λ_ℓ con intersección vacía.

    Args:
        cfg: Configuración del modelo

    Returns:
        Dict[str, RegionSpec]: Regiones por nombre
    """
    bounds = region_bounds(cfg)
    regions = {
        name: RegionSpec(name=name, sites=_sites_in(lo, hi, cfg.L))
        for name, (lo, hi) in bounds.items()
    }

    lambda_2 = set(regions['Lambda_2'].sites)
    regions['Lambda_1'] = RegionSpec(
        name='Lambda_1',
        sites=tuple(site for site in regions['Lambda_l'].sites if site not in lambda_2),
    )

    sizes = ", ".join(f"{name}={regions[name].size}" for name in REGION_NAMES)
    logger.debug(f"Regiones para L={cfg.L}, D={cfg.D}: {sizes}")
    return regions


def boundary_layer_mask(grid: Grid, cfg: ModelConfig, width: float) -> np.ndarray:
    """
    Máscara en x de las capas junto a las fronteras truncadas de la malla.

    Args:
        grid: Malla
        cfg: Configuración del modelo
        width: Ancho de cada capa en longitudes magnéticas

    Returns:
        np.ndarray: Máscara booleana sobre grid.x
    """
    layer = width * cfg.magnetic_length
    return (grid.x <= grid.x[0] + layer) | (grid.x >= grid.x[-1] - layer)
