"""
Pruebas de los cortes de franja y del operador de acoplamiento 𝒦(z).
"""

import sys
import os
sys.path.append('src')
sys.path.append('config')

import numpy as np
import pytest
import scipy.linalg

from src.campaigns.decoupling_sweep import campaign_energy, kappa_norm
from src.decoupling import (RAMP_FIRST_BOUND, RAMP_SECOND_BOUND, STRIP_VARIANTS, STRIPS, assemble_kappa,
                            build_cutoffs, check_resolvent_distance, constant_cutoffs, locality_defect,
                            operator_norm, resolvent_identity_residual, smoothstep)
from src.disorder import sample_disorder
from src.errors import GeometryError, PreconditionError, SingularResolventError
from src.geometry import build_grid, build_regions
from src.models import ExperimentOptions, Grid, ModelConfig, OperatorTag, OperatorVariant, SolverOptions
from src.operators import assemble, from_potential


def test_smoothstep_bounds():
    """Prueba los extremos y las cotas de la rampa quíntica."""
    print("=== PRUEBA: Rampa quíntica ===")

    t = np.linspace(-0.5, 1.5, 20001)
    value, first, second = smoothstep(t)

    assert value[0] == 0.0 and value[-1] == 1.0
    assert np.all(np.diff(value) >= 0)
    assert np.max(np.abs(first)) <= RAMP_FIRST_BOUND + 1e-12
    assert np.max(np.abs(first)) > RAMP_FIRST_BOUND - 1e-6
    assert np.max(np.abs(second)) <= RAMP_SECOND_BOUND + 1e-12

    print(f"✅ |S'| ≤ {RAMP_FIRST_BOUND}, |S''| ≤ {RAMP_SECOND_BOUND:.4f}")


def test_cutoff_plateaus():
    """Prueba las mesetas de los cortes suaves y la partición de los indicadores."""
    print("\n=== PRUEBA: Cortes de franja ===")

    cfg = ModelConfig(L=16)
    grid = Grid(x=np.linspace(-12.0, 12.0, 241), n_y=4, period=16.0)
    cutoffs = build_cutoffs(cfg, grid)
    x = grid.x

    # D = 4: J_ℓ = 1 hasta −5 y 0 desde −4; J_b = 1 para |x| ≤ 7 y 0 desde |x| ≥ 8
    assert np.all(np.abs(cutoffs.smooth['l'][x <= -5.0] - 1.0) < 1e-12)
    assert np.all(np.abs(cutoffs.smooth['l'][x >= -4.0]) < 1e-12)
    assert np.all(np.abs(cutoffs.smooth['r'][x >= 5.0] - 1.0) < 1e-12)
    assert np.all(np.abs(cutoffs.smooth['r'][x <= 4.0]) < 1e-12)
    assert np.all(np.abs(cutoffs.smooth['b'][np.abs(x) <= 7.0] - 1.0) < 1e-12)
    assert np.all(np.abs(cutoffs.smooth['b'][np.abs(x) >= 8.0]) < 1e-12)

    total = sum(cutoffs.sharp[strip] for strip in STRIPS)
    assert np.all(total == 1.0)
    for strip in STRIPS:
        assert np.all(np.abs(cutoffs.smooth[strip][cutoffs.sharp[strip] == 1.0] - 1.0) < 1e-12)

    print("✅ Mesetas correctas y J_i = 1 sobre el soporte de J̃_i")


def test_cutoff_overlap():
    """Prueba que franjas demasiado anchas se rechazan."""
    print("\n=== PRUEBA: Cortes solapados ===")

    cfg = ModelConfig(L=16, strip_width=10)
    with pytest.raises(GeometryError):
        build_cutoffs(cfg)

    print("✅ Error de geometría con 3D/2 + 2 ≥ L")


def _disordered(seed=20240601):
    cfg = ModelConfig()
    grid = build_grid(cfg)
    field = sample_disorder(cfg, build_regions(cfg)['Lambda'], seed)
    return cfg, grid, field


def test_resolvent_identity():
    """Prueba R(z)(1 − 𝒦(z)) = Σ_i J_i R_i(z) J̃_i y la localidad H J_i = H_i J_i."""
    print("\n=== PRUEBA: Identidad del resolvente ===")

    cfg, grid, field = _disordered()
    z = complex(cfg.B, 0.1)
    kappa = assemble_kappa(z, cfg, field, grid=grid)
    full = assemble(OperatorVariant(OperatorTag.FULL, with_flux=True), cfg, field, grid=grid)

    for strip in STRIPS:
        assert locality_defect(full, kappa.parts[strip], kappa.cutoffs.smooth[strip]) == 0.0

    residual = resolvent_identity_residual(kappa, full, seed=3)
    assert residual < 1e-8

    norm = operator_norm(kappa, rtol=1e-4, maxiter=200)
    assert np.isfinite(norm) and norm > 0.0

    print(f"✅ Residuo relativo {residual:.2e}, ‖𝒦(z)‖ ≈ {norm:.3e}")


def test_constant_cutoffs_give_zero_kappa():
    """Prueba que cortes constantes anulan 𝒦(z)."""
    print("\n=== PRUEBA: Cortes constantes ===")

    cfg, grid, field = _disordered()
    kappa = assemble_kappa(complex(cfg.B, 0.1), cfg, field, cutoffs=constant_cutoffs(grid),
                           grid=grid, check_distance=False)

    assert all(kappa.commutators[strip].nnz == 0 for strip in STRIPS)
    assert operator_norm(kappa) == 0.0

    print("✅ ‖𝒦(z)‖ = 0 sin transiciones")


def test_singular_resolvent():
    """Prueba el rechazo de z sobre un autovalor."""
    print("\n=== PRUEBA: Resolvente singular ===")

    grid = Grid(x=np.linspace(-2.0, 2.0, 9), n_y=4, period=4.0)
    operator = from_potential(grid, 1.0, np.zeros(grid.size))
    energies = scipy.linalg.eigvalsh(operator.matrix.toarray())
    solver = SolverOptions()

    with pytest.raises(SingularResolventError):
        check_resolvent_distance(complex(energies[3], 0.0), operator, solver)

    distance = check_resolvent_distance(complex(energies[3], 0.5), operator, solver)
    assert abs(distance - 0.5) < 1e-12

    print("✅ Error de resolvente singular a distancia nula")


def test_default_energy_stays_off_spectrum():
    """Prueba que el z por defecto queda a distancia ≥ |Im z| de σ(H_ℓ), σ(H_b) y σ(H_r)."""
    print("\n=== PRUEBA: Distancia al espectro en el z por defecto ===")

    cfg, grid, field = _disordered()
    regions = build_regions(cfg)
    experiments = ExperimentOptions()
    z = campaign_energy(experiments.z_list[0], experiments.z_imag, cfg)
    assert z.imag > 0.0

    # H_b no tiene paredes: sus estados de frontera Dirichlet cruzan el gap
    solver = SolverOptions()
    distances = {}
    for strip, tag in STRIP_VARIANTS.items():
        part = assemble(OperatorVariant(tag, with_flux=True), cfg, field, grid=grid, regions=regions)
        distances[strip] = check_resolvent_distance(z, part, solver)
        assert distances[strip] >= z.imag

    kappa = assemble_kappa(z, cfg, field, grid=grid)
    assert np.isfinite(operator_norm(kappa, rtol=1e-3, maxiter=100))

    print("✅ dist(z, σ(H_i)) = " + ", ".join(f"{strip}: {value:.3f}" for strip, value in distances.items()))


def test_kappa_norm_decreases_with_size():
    """Prueba que ‖𝒦(z)‖ baja de L = 16 a L = 25 con residuo de identidad pequeño."""
    print("\n=== PRUEBA: ‖𝒦(z)‖ contra L ===")

    experiments = ExperimentOptions()
    solver = SolverOptions(power_rtol=1e-4)
    seed = experiments.master_seed

    small = ModelConfig(L=16)
    large = ModelConfig(L=25)
    first = kappa_norm(campaign_energy(1.0, experiments.z_imag, small), small, seed, solver)
    second = kappa_norm(campaign_energy(1.0, experiments.z_imag, large), large, seed, solver,
                        with_residual=False)

    assert first['identity_residual'] < 1e-6
    assert 0.0 < second['norm'] < first['norm']

    with pytest.raises(PreconditionError):
        kappa_norm(complex(0.6, experiments.z_imag), small, seed, solver)

    print(f"✅ ‖𝒦‖: {first['norm']:.3e} (L=16) → {second['norm']:.3e} (L=25), "
          f"residuo {first['identity_residual']:.1e}")


if __name__ == "__main__":
    test_smoothstep_bounds()
    test_cutoff_plateaus()
    test_cutoff_overlap()
    test_resolvent_identity()
    test_constant_cutoffs_give_zero_kappa()
    test_singular_resolvent()
    test_default_energy_stays_off_spectrum()
    test_kappa_norm_decreases_with_size()
    print("\n✅ Todas las pruebas de desacoplamiento pasaron")
