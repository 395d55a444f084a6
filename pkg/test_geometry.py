"""
Pruebas de la geometría del cilindro: métrica, paredes, malla y regiones.
"""

import sys
import os
sys.path.append('src')
sys.path.append('config')

import math

import numpy as np
import pytest

from src.errors import InputError
from src.geometry import build_grid, build_regions, star_distance, wall_potential, wrap_site_index
from src.models import ModelConfig, Side
from config.settings import PHYSICS_DEFAULTS


def test_star_distance_examples():
    """Prueba los casos de referencia de la distancia del cilindro."""
    print("=== PRUEBA: Distancia en el cilindro ===")

    assert star_distance((0, 0), (0, 0), 10) == 0.0
    assert abs(star_distance((0, -4.9), (0, 4.9), 10) - 0.2) < 1e-12
    assert abs(star_distance((3, 0), (0, 4), 100) - 5.0) < 1e-12

    print("✅ Identidad, envoltura en y y triángulo 3-4-5 correctos")


def test_star_distance_is_metric():
    """Prueba simetría, desigualdad triangular y cota por la distancia euclídea."""
    print("\n=== PRUEBA: Propiedades métricas ===")

    rng = np.random.default_rng(7)
    L = 16.0
    for _ in range(200):
        p, q, r = rng.uniform(-20, 20, size=(3, 2))
        d_pq = star_distance(p, q, L)
        assert d_pq >= 0.0
        assert abs(d_pq - star_distance(q, p, L)) < 1e-12
        assert d_pq <= star_distance(p, r, L) + star_distance(r, q, L) + 1e-12
        assert d_pq <= math.dist(p, q) + 1e-12

    # Puntos que difieren en un período son el mismo punto
    assert star_distance((1.0, 2.0), (1.0, 2.0 + L), L) < 1e-12

    print("✅ 200 ternas aleatorias cumplen los axiomas de métrica")


def test_star_distance_rejects_non_finite():
    """Prueba que las coordenadas no finitas se rechazan."""
    print("\n=== PRUEBA: Coordenadas no finitas ===")

    with pytest.raises(InputError):
        star_distance((float('nan'), 0.0), (0.0, 0.0), 10)
    with pytest.raises(InputError):
        star_distance((0.0, 0.0), (0.0, 0.0), 0)

    print("✅ Error de entrada para NaN y período nulo")


def test_wall_potential_values():
    """Prueba la pared izquierda de ley de potencia."""
    print("\n=== PRUEBA: Potencial de pared ===")

    cfg = ModelConfig(L=16, wall_left={'c': 1.0, 'm': 2.0})
    assert wall_potential(-8.0, Side.LEFT, cfg) == 0.0
    assert wall_potential(0.0, Side.LEFT, cfg) == 0.0
    assert abs(wall_potential(-10.0, Side.LEFT, cfg) - 4.0) < 1e-12

    # La pared derecha es la imagen especular con sus propios parámetros
    right = cfg.wall_right
    assert abs(wall_potential(10.0, 'r', cfg) - right.c * 2.0 ** right.m) < 1e-12
    assert wall_potential(-10.0, 'r', cfg) == 0.0

    print("✅ U_ℓ(−L/2) = 0, U_ℓ(0) = 0, U_ℓ(−L/2 − 2) = 4")


def test_grid_resolves_magnetic_length():
    """Prueba que la malla derivada resuelve la longitud magnética."""
    print("\n=== PRUEBA: Malla del cilindro ===")

    cfg = ModelConfig()
    grid = build_grid(cfg)
    max_spacing = PHYSICS_DEFAULTS.MAX_SPACING * cfg.magnetic_length + 1e-12

    assert grid.h_x <= max_spacing
    assert grid.h_y <= max_spacing
    assert grid.period == cfg.L
    assert grid.x[0] < -0.5 * cfg.L - PHYSICS_DEFAULTS.DECAY_PAD * cfg.magnetic_length
    assert grid.x[-1] > 0.5 * cfg.L + PHYSICS_DEFAULTS.DECAY_PAD * cfg.magnetic_length
    assert grid.size == grid.n_x * grid.n_y

    print(f"✅ Malla {grid.n_x}×{grid.n_y} con h_x={grid.h_x:.3f}, h_y={grid.h_y:.3f}")


def test_regions_partition():
    """Prueba las regiones de sitios y la partición Λ_ℓ = Λ_1 ∪ Λ_2."""
    print("\n=== PRUEBA: Regiones de la red ===")

    cfg = ModelConfig(L=16)
    regions = build_regions(cfg)

    # n ∈ [−8, 8] y m ∈ [−8, 7]
    assert regions['Lambda'].size == 17 * 16
    m_values = {m for _, m in regions['Lambda'].sites}
    assert min(m_values) == -8 and max(m_values) == 7

    left = set(regions['Lambda_l'].sites)
    first = set(regions['Lambda_1'].sites)
    second = set(regions['Lambda_2'].sites)
    assert first | second == left
    assert not first & second

    full = set(regions['Lambda'].sites)
    for name in ('Lambda_l', 'Lambda_r', 'Lambda_b'):
        assert set(regions[name].sites) <= full

    print(f"✅ |Λ|={regions['Lambda'].size}, |Λ_ℓ|={len(left)}, |Λ_1|={len(first)}, |Λ_2|={len(second)}")


def test_wrap_site_index():
    """Prueba la reducción de índices m módulo L."""
    print("\n=== PRUEBA: Envoltura de índices ===")

    wrapped = wrap_site_index(np.array([-8, 7, 8, -9, 24]), 16)
    assert wrapped.tolist() == [-8, 7, -8, 7, -8]

    print("✅ m = L/2 se identifica con m = −L/2")


if __name__ == "__main__":
    test_star_distance_examples()
    test_star_distance_is_metric()
    test_star_distance_rejects_non_finite()
    test_wall_potential_values()
    test_grid_resolves_magnetic_length()
    test_regions_partition()
    test_wrap_site_index()
    print("\n✅ Todas las pruebas de geometría pasaron")
