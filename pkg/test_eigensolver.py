"""
Pruebas de los solvers de ventana, las ramas de fibra y los proyectores.
"""

import sys
import os
sys.path.append('src')
sys.path.append('config')

import math

import numpy as np
import pytest
import scipy.linalg
from scipy.optimize import brentq

from src.eigensolver import (branch_spacing, default_branch_range, fiber_eigenvalue, fiber_state,
                             projector_defect, solve_branch, solve_window, spectral_projector,
                             subspace_distance)
from src.disorder import sample_disorder
from src.errors import DegeneracyError, InputError, PreconditionError
from src.geometry import build_grid, build_regions
from src.models import (EigenPair, Grid, ModelConfig, OperatorTag, OperatorVariant, ProjectorFrame,
                        Side, SolverOptions, WindowSpectrum)
from src.observables import average_velocity
from src.operators import assemble, from_potential


# Desplazamiento de los niveles de Landau por la discretización con h = 0.2
LEVEL_TOLERANCE = 5e-3


def test_free_operator_has_no_physical_states_in_window():
    """Prueba que H_L no tiene autovalores físicos en Δ."""
    print("=== PRUEBA: H_L en la ventana objetivo ===")

    cfg = ModelConfig()
    operator = assemble(OperatorVariant(OperatorTag.LANDAU), cfg)
    spectrum = solve_window(operator, cfg.window)

    assert spectrum.count == 0
    assert spectrum.metadata['method'] == 'shift-invert'

    print(f"✅ 0 pares físicos ({len(spectrum.artifacts)} artefactos de frontera descartados)")


def test_window_rejects_bad_arguments():
    """Prueba ventanas vacías y métodos desconocidos."""
    print("\n=== PRUEBA: Argumentos de la ventana ===")

    cfg = ModelConfig()
    operator = assemble(OperatorVariant(OperatorTag.LANDAU), cfg)
    with pytest.raises(InputError):
        solve_window(operator, (1.2, 0.8))
    with pytest.raises(InputError):
        solve_window(operator, cfg.window, method="lanczos")

    # Primer gap de H_L con V0 = 0.05: (0.55, 1.45)
    with pytest.raises(PreconditionError):
        solve_window(operator, (0.52, 0.9))
    with pytest.raises(PreconditionError):
        solve_window(operator, (1.1, 1.5))
    assert operator.gap_region == (0.5 * cfg.B + cfg.V0, 1.5 * cfg.B - cfg.V0)

    print("✅ Errores para ventana vacía, método desconocido y ventana fuera del gap")


def test_bulk_level_of_branch():
    """Prueba que la rama izquierda vale B/2 lejos de la pared."""
    print("\n=== PRUEBA: Nivel de bulk de la rama ===")

    cfg = ModelConfig()
    grid = build_grid(cfg)
    energy = fiber_eigenvalue(Side.LEFT, 0, 0.0, cfg, grid)
    assert abs(energy - 0.5 * cfg.B) < LEVEL_TOLERANCE

    second = fiber_eigenvalue(Side.LEFT, 1, 0.0, cfg, grid)
    assert abs(second - 1.5 * cfg.B) < 3 * LEVEL_TOLERANCE

    print(f"✅ ε_0(0) = {energy:.5f}, ε_1(0) = {second:.5f}")


def test_branch_monotonicity():
    """Prueba que la rama izquierda decrece y la derecha crece con m."""
    print("\n=== PRUEBA: Monotonía de las ramas ===")

    cfg = ModelConfig()
    grid = build_grid(cfg)

    left = solve_branch(Side.LEFT, 0, default_branch_range(cfg, Side.LEFT), cfg, grid=grid)
    right = solve_branch(Side.RIGHT, 0, default_branch_range(cfg, Side.RIGHT), cfg, grid=grid)

    assert np.all(np.diff(left.energies) <= 1e-9)
    assert np.all(np.diff(right.energies) >= -1e-9)
    assert left.energies[0] > cfg.window[1]
    assert right.energies[-1] > cfg.window[1]
    assert np.all(left.derivatives[left.within(cfg.window)] < 0)
    assert np.all(right.derivatives[right.within(cfg.window)] > 0)
    assert branch_spacing(left, cfg.window) > 0

    frame = left.to_frame()
    assert list(frame.columns) == ['m', 'k', 'epsilon', 'd_epsilon']

    print(f"✅ {left.within(cfg.window).sum()} puntos izquierdos y "
          f"{right.within(cfg.window).sum()} derechos en Δ con la velocidad correcta")


def test_hellmann_feynman_on_fiber_states():
    """Prueba que J del estado de fibra coincide con la derivada de la rama."""
    print("\n=== PRUEBA: Hellmann–Feynman ===")

    cfg = ModelConfig()
    grid = build_grid(cfg)
    operator = assemble(OperatorVariant(OperatorTag.LEFT_CLEAN), cfg, grid=grid)
    branch = solve_branch(Side.LEFT, 0, default_branch_range(cfg, Side.LEFT), cfg, grid=grid)

    checked = 0
    for index in np.flatnonzero(branch.within(cfg.window)):
        energy, psi = fiber_state(Side.LEFT, 0, branch.k[index], cfg, grid)
        residual = np.linalg.norm(operator.matrix @ psi - energy * psi)
        assert residual < 1e-9
        assert abs(energy - branch.energies[index]) < 1e-10

        J = average_velocity(psi, operator)
        assert J < 0
        assert abs(J - branch.derivatives[index]) < 1e-6
        checked += 1

    assert checked > 0

    # Lejos de la pared la velocidad se anula
    _, bulk = fiber_state(Side.LEFT, 0, 0.0, cfg, grid)
    assert abs(average_velocity(bulk, operator)) < 1e-8

    print(f"✅ {checked} estados de borde con J = ∂_k ε y residuo < 1e-9")


def test_empty_branch_range():
    """Prueba el rechazo de un rango de momentos vacío."""
    print("\n=== PRUEBA: Rango vacío ===")

    with pytest.raises(InputError):
        solve_branch(Side.LEFT, 0, [], ModelConfig())

    print("✅ Error de entrada para m_range vacío")


def _synthetic_spectrum(energies, size=6):
    pairs = [EigenPair(E=energy, psi=np.eye(size, dtype=complex)[:, i], residual=0.0)
             for i, energy in enumerate(energies)]
    return WindowSpectrum(pairs=pairs, window=(0.8, 1.2))


def test_spectral_projector_isolation():
    """Prueba rango, aislamiento y discos vacíos del proyector."""
    print("\n=== PRUEBA: Proyectores espectrales ===")

    spectrum = _synthetic_spectrum([0.9, 1.0, 1.1])
    single = spectral_projector(None, [1.0], 0.01, spectrum=spectrum)
    assert single.rank == 1
    assert np.allclose(single.energies, [1.0])
    assert projector_defect(single) < 1e-12

    # Autovector sin normalizar: P = VV* deja de ser idempotente
    scaled = WindowSpectrum(pairs=[EigenPair(E=1.0, psi=1.001 * np.eye(6, dtype=complex)[:, 0], residual=0.0)],
                            window=(0.8, 1.2))
    loose = spectral_projector(None, [1.0], 0.01, spectrum=scaled)
    expected = 1.001 ** 2 * (1.001 ** 2 - 1.0)
    assert abs(projector_defect(loose) - expected) < 1e-12
    assert abs(np.linalg.norm(loose.frame) - 1.0) < 1e-12

    pair = spectral_projector(None, [0.9, 1.1], 0.01, spectrum=spectrum)
    assert pair.rank == 2

    crowded = _synthetic_spectrum([0.9, 1.0, 1.015])
    with pytest.raises(DegeneracyError):
        spectral_projector(None, [1.0], 0.01, spectrum=crowded)

    with pytest.raises(InputError):
        spectral_projector(None, [1.05], 0.01, spectrum=spectrum)

    print("✅ Rango 1 y 2, anillo ocupado y disco vacío detectados")


def test_subspace_distance():
    """Prueba que la distancia es el seno del ángulo principal."""
    print("\n=== PRUEBA: Distancia entre subespacios ===")

    angle = 0.3
    first = np.zeros((4, 1), dtype=complex)
    first[0, 0] = 1.0
    second = np.zeros((4, 1), dtype=complex)
    second[0, 0] = math.cos(angle)
    second[1, 0] = math.sin(angle)

    frame_a = ProjectorFrame(frame=first, energies=np.array([1.0]), centers=np.array([1.0]), radius=0.01)
    frame_b = ProjectorFrame(frame=second, energies=np.array([1.0]), centers=np.array([1.0]), radius=0.01)
    assert abs(subspace_distance(frame_a, frame_b) - math.sin(angle)) < 1e-12
    assert subspace_distance(frame_a, frame_a) < 1e-12

    wide = ProjectorFrame(frame=np.eye(4, 2, dtype=complex), energies=np.array([1.0, 1.0]),
                          centers=np.array([1.0]), radius=0.01)
    assert subspace_distance(frame_a, wide) == 1.0

    print(f"✅ ‖P − Q‖ = sin({angle}) y 1 con rangos distintos")


def test_landau_levels_and_count():
    """Prueba los niveles (n + ½)B de H_L, el corrimiento constante y el conteo del nivel más bajo."""
    print("\n=== PRUEBA: Niveles de Landau ===")

    B, L = 1.0, 8
    grid = Grid(x=np.linspace(-9.2, 9.2, 93), n_y=40, period=float(L))
    landau = from_potential(grid, B, np.zeros(grid.size))
    energies = scipy.linalg.eigvalsh(landau.matrix.toarray())

    assert abs(energies[0] - 0.5 * B) < 0.01 * 0.5 * B
    assert np.min(np.abs(energies - 1.5 * B)) < 0.01 * 1.5 * B

    # Centros de guía 2πm/(LB): los de la muestra están en el nivel, los de fuera de la malla no
    centers = 2.0 * math.pi * np.arange(-grid.n_y // 2, grid.n_y // 2) / (L * B)
    inside = int(np.count_nonzero(np.abs(centers) <= 0.5 * L))
    in_box = int(np.count_nonzero(np.abs(centers) < grid.x[-1]))
    lowest = int(np.count_nonzero(np.abs(energies - 0.5 * B) < LEVEL_TOLERANCE))
    assert inside <= lowest <= in_box
    assert abs(inside - B * L ** 2 / (2.0 * math.pi)) <= 1.0

    shifted = from_potential(grid, B, np.full(grid.size, 0.3))
    shifted_energies = scipy.linalg.eigvalsh(shifted.matrix.toarray())
    assert np.max(np.abs(shifted_energies - (energies + 0.3))) < 1e-10

    print(f"✅ E_0 = {energies[0]:.5f}, {lowest} estados en B/2 (BL²/2π = {B * L ** 2 / (2.0 * math.pi):.2f})")


def test_sparse_matches_dense_oracle():
    """Prueba que shift-invert coincide con la diagonalización densa sobre H_ω."""
    print("\n=== PRUEBA: Oráculo denso ===")

    cfg = ModelConfig(L=8, strip_width=4, grid={'n_x': 93, 'n_y': 40, 'x_min': -9.2, 'x_max': 9.2})
    grid = build_grid(cfg)
    regions = build_regions(cfg)
    field = sample_disorder(cfg, regions['Lambda'], 20240601)
    operator = assemble(OperatorVariant(OperatorTag.FULL, with_flux=True), cfg, field, grid, regions)
    assert operator.size < SolverOptions().dense_threshold

    window = (0.6, 1.4)
    dense = solve_window(operator, window, method="dense")
    shifted = solve_window(operator, window, method="sparse")

    assert dense.metadata['method'] == 'dense'
    assert shifted.metadata['method'] == 'shift-invert'
    assert dense.count == shifted.count
    assert dense.count > 0
    assert np.max(np.abs(dense.energies - shifted.energies)) < 1e-8
    assert np.max(scipy.linalg.subspace_angles(dense.vectors(), shifted.vectors())) < 1e-6
    assert all(pair.residual <= shifted.metadata['tol_eig'] for pair in shifted.pairs)

    print(f"✅ {dense.count} autovalores en ({window[0]}, {window[1]}) con ambos métodos")


def _aligned_spacing(L):
    """L·(mínima separación de ε_0^ℓ en Δ_ε) con un punto de la rama en el borde inferior de Δ_ε."""
    cfg = ModelConfig(L=L)
    grid = build_grid(cfg)
    target = cfg.gap_window[0] + 1e-6
    k_star = brentq(lambda k: fiber_eigenvalue(Side.LEFT, 0, k, cfg, grid) - target,
                    -0.5 * L * cfg.B - 3.0, 0.0)
    flux = (k_star * L) % (2.0 * math.pi)
    branch = solve_branch(Side.LEFT, 0, default_branch_range(cfg, Side.LEFT, flux), cfg, flux=flux, grid=grid)
    assert np.min(np.abs(branch.k - k_star)) < 1e-9
    return L * branch_spacing(branch, cfg.gap_window)


def test_branch_spacing_stable_across_sizes():
    """Prueba que L·(separación mínima en Δ_ε) no cambia más de 30 % entre L = 16 y L = 25."""
    print("\n=== PRUEBA: Separación de la rama contra L ===")

    small = _aligned_spacing(16)
    large = _aligned_spacing(25)
    assert small > 0.0 and large > 0.0
    assert abs(large / small - 1.0) <= 0.3

    print(f"✅ L·Δε = {small:.4f} (L=16) y {large:.4f} (L=25)")


if __name__ == "__main__":
    test_free_operator_has_no_physical_states_in_window()
    test_window_rejects_bad_arguments()
    test_bulk_level_of_branch()
    test_branch_monotonicity()
    test_hellmann_feynman_on_fiber_states()
    test_empty_branch_range()
    test_spectral_projector_isolation()
    test_subspace_distance()
    test_landau_levels_and_count()
    test_sparse_matches_dense_oracle()
    test_branch_spacing_stable_across_sizes()
    print("\n✅ Todas las pruebas de solvers pasaron")
