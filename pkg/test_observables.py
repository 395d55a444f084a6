"""
Pruebas de los observables de borde, la cota de velocidad y el sondeo del núcleo.
"""

import sys
import os
sys.path.append('src')
sys.path.append('config')

import math

import numpy as np
import pytest

from src.decoupling import build_cutoffs
from src.eigensolver import default_branch_range, fiber_state, solve_branch
from src.errors import InputError, SingularResolventError
from src.geometry import build_grid
from src.models import (Classification, EigenPair, ModelConfig, OperatorTag, OperatorVariant, Side,
                        SpectralBranch)
from src.observables import (EXPONENTIAL_RATE, classify_state, edge_observable, kernel_decay_probe,
                             localization_profile, velocity_lower_bound)
from src.operators import assemble


def _linear_branch(slope=-0.3):
    """Rama sintética con ε = 1 − 0.05m y derivada constante."""
    m = np.arange(-10, 11)
    return SpectralBranch(
        side=Side.LEFT,
        n=0,
        m=m,
        k=2.0 * math.pi * m / 16,
        energies=1.0 - 0.05 * m,
        derivatives=np.full(m.size, slope),
        flux=0.0,
        L=16,
    )


def test_velocity_bound_without_disorder():
    """Prueba que con V0 = 0 la cota es la velocidad de la rama."""
    print("=== PRUEBA: Cota de velocidad sin desorden ===")

    bound = velocity_lower_bound(1.0, _linear_branch(), ModelConfig(V0=0.0))
    assert bound.m_bar == 0
    assert bound.correction == 0.0
    assert bound.second_order == 0.0
    assert abs(bound.value - 0.3) < 1e-15

    print("✅ Cota = |J_{E_{0,m̄}}| = 0.3")


def test_velocity_bound_terms():
    """Prueba los términos de segundo orden y de corrección."""
    print("\n=== PRUEBA: Términos de la cota ===")

    cfg = ModelConfig(V0=0.02, B=1.0, delta=0.2, epsilon=0.1)
    bound = velocity_lower_bound(1.0, _linear_branch(), cfg)

    # Fuera de 𝒜 = [−3, 3] la energía más cercana está a 0.2
    expected_second = 0.02 ** 2 * (1.0 / 0.3 ** 2 + 1.0 / 0.2 ** 2)
    assert abs(bound.second_order - expected_second) < 1e-12
    assert abs(bound.correction - 0.2 * math.sqrt(2.04)) < 1e-12
    assert abs(bound.correction - 0.2857) < 1e-4
    assert abs(bound.value - max(bound.leading - bound.correction, 0.0)) < 1e-15
    assert bound.value > 0.0

    print(f"✅ Corrección {bound.correction:.4f}, cota {bound.value:.5f}")


def test_velocity_bound_coverage():
    """Prueba que la tabla debe cubrir m̄ ± (a + 1)."""
    print("\n=== PRUEBA: Cobertura de la rama ===")

    with pytest.raises(InputError):
        velocity_lower_bound(1.49, _linear_branch(), ModelConfig())
    with pytest.raises(InputError):
        velocity_lower_bound(0.51, _linear_branch(), ModelConfig())

    print("✅ Error de entrada cerca de los extremos de la tabla")


def test_classify_state():
    """Prueba la clasificación por masa y signo de la velocidad."""
    print("\n=== PRUEBA: Clasificación de estados ===")

    assert classify_state(-0.3, (0.9, 0.1, 0.0), 1.0) == Classification.LEFT_EDGE
    assert classify_state(0.3, (0.0, 0.1, 0.9), 1.0) == Classification.RIGHT_EDGE
    assert classify_state(0.01, (0.9, 0.1, 0.0), 1.0) == Classification.AMBIGUOUS
    assert classify_state(-0.3, (0.2, 0.7, 0.1), 1.0) == Classification.AMBIGUOUS
    assert classify_state(0.3, (0.9, 0.1, 0.0), 1.0) == Classification.AMBIGUOUS

    print("✅ Bordes, velocidad pequeña, masa central y signo contradictorio")


def test_localization_profile():
    """Prueba las masas de un vector concentrado en la franja izquierda."""
    print("\n=== PRUEBA: Perfil de localización ===")

    cfg = ModelConfig()
    grid = build_grid(cfg)
    cutoffs = build_cutoffs(cfg, grid)

    psi = np.zeros((grid.n_x, grid.n_y), dtype=complex)
    psi[grid.x <= -7.0, :] = 1.0
    psi = psi.ravel() / np.linalg.norm(psi)

    left, bulk, right = localization_profile(psi, cutoffs, grid)
    assert abs(left - 1.0) < 1e-12
    assert bulk == 0.0 and right == 0.0

    with pytest.raises(InputError):
        localization_profile(psi[:-1], cutoffs, grid)

    print("✅ Masa (1, 0, 0) en la franja izquierda")


def test_edge_observable_of_wall_state():
    """Prueba que un estado de la pared izquierda se clasifica como borde izquierdo."""
    print("\n=== PRUEBA: Observable de borde ===")

    cfg = ModelConfig()
    grid = build_grid(cfg)
    operator = assemble(OperatorVariant(OperatorTag.LEFT_CLEAN), cfg, grid=grid)
    cutoffs = build_cutoffs(cfg, grid)
    branch = solve_branch(Side.LEFT, 0, default_branch_range(cfg, Side.LEFT), cfg, grid=grid)

    index = int(np.flatnonzero(branch.within(cfg.window))[0])
    energy, psi = fiber_state(Side.LEFT, 0, branch.k[index], cfg, grid)
    observable = edge_observable(EigenPair(E=energy, psi=psi, residual=0.0), operator, cutoffs)

    assert observable.classification == Classification.LEFT_EDGE
    assert observable.J < 0
    assert abs(observable.total_mass - 1.0) < 1e-12
    assert observable.as_row()['class'] == 'left-edge'

    print(f"✅ E={energy:.4f}, J={observable.J:.4f}, masa izquierda {observable.mass_left:.4f}")


def test_kernel_decay_probe():
    """Prueba la tasa efectiva y la envolvente del núcleo libre en z = B."""
    print("\n=== PRUEBA: Decaimiento del núcleo ===")

    cfg = ModelConfig()
    fit = kernel_decay_probe(complex(cfg.B, 0.0), cfg)

    assert fit.effective_rate >= EXPONENTIAL_RATE * math.sqrt(cfg.B)
    assert fit.violations == 0
    assert fit.envelope.gaussian_rate == 0.125 * cfg.B
    assert {'r', 'kernel', 'envelope'} <= set(fit.samples.columns)
    assert np.all(np.diff(fit.samples['r'].to_numpy()) >= 0)

    print(f"✅ Tasa efectiva {fit.effective_rate:.3f} ≥ {EXPONENTIAL_RATE}, sin violaciones")


def test_kernel_probe_rejects_bad_energies():
    """Prueba las energías fuera de la banda y demasiado cerca de un nivel."""
    print("\n=== PRUEBA: Energías inválidas del núcleo ===")

    cfg = ModelConfig()
    with pytest.raises(InputError):
        kernel_decay_probe(0.3, cfg)
    with pytest.raises(InputError):
        kernel_decay_probe(complex(1.0, 2.0), cfg)
    with pytest.raises(SingularResolventError):
        kernel_decay_probe(0.55, cfg)

    print("✅ Errores de entrada y de resolvente singular")


if __name__ == "__main__":
    test_velocity_bound_without_disorder()
    test_velocity_bound_terms()
    test_velocity_bound_coverage()
    test_classify_state()
    test_localization_profile()
    test_edge_observable_of_wall_state()
    test_kernel_decay_probe()
    test_kernel_probe_rejects_bad_energies()
    print("\n✅ Todas las pruebas de observables pasaron")
