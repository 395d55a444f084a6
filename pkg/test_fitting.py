"""
Pruebas de los ajustes de decaimiento y de los intervalos de Wilson.
"""

import sys
import os
sys.path.append('src')
sys.path.append('config')

import numpy as np
import pytest

from src.errors import InputError
from src.fitting import fit_decay, wilson_interval


def test_decreasing_fit():
    """Prueba el veredicto de decaimiento sobre una exponencial con ruido."""
    print("=== PRUEBA: Ajuste decreciente ===")

    sqrt_L = np.array([4.0, 5.0, 6.0, 7.0])
    noise = np.array([1.02, 0.97, 1.01, 0.99])
    fit = fit_decay(sqrt_L, np.exp(-2.0 * sqrt_L) * noise)

    assert fit.verdict == "decreasing"
    assert fit.passed and fit.monotone
    assert abs(fit.slope + 2.0) < 0.1
    assert fit.slope_interval[0] <= fit.slope <= fit.slope_interval[1]
    assert fit.to_row('max_displacement')['points'] == 4

    print(f"✅ Pendiente {fit.slope:.3f} con intervalo {fit.slope_interval}")


def test_exact_line_and_sorting():
    """Prueba que las abscisas se ordenan antes del ajuste."""
    print("\n=== PRUEBA: Orden de las abscisas ===")

    fit = fit_decay([3.0, 1.0, 2.0], np.exp(-np.array([3.0, 1.0, 2.0])))
    assert np.array_equal(fit.abscissa, [1.0, 2.0, 3.0])
    assert abs(fit.slope + 1.0) < 1e-12
    assert fit.verdict == "decreasing"
    assert np.max(np.abs(fit.residuals)) < 1e-12

    print("✅ Pendiente −1 exacta con abscisas desordenadas")


def test_floor_verdict():
    """Prueba el veredicto de piso cuando los valores caen bajo el piso numérico."""
    print("\n=== PRUEBA: Veredicto de piso ===")

    fit = fit_decay([4.0, 5.0, 6.0, 7.0], [1e-3, 1e-8, 1e-12, 1e-14], floor=1e-10)
    assert fit.verdict == "floor"
    assert fit.passed and fit.monotone

    print("✅ Menos de tres valores sobre el piso y el último en el piso")


def test_not_decreasing_verdict():
    """Prueba el veredicto cuando el valor no decrece."""
    print("\n=== PRUEBA: Veredicto no decreciente ===")

    fit = fit_decay([4.0, 5.0, 6.0, 7.0], [1e-3, 2e-3, 1e-3, 3e-3])
    assert fit.verdict == "not-decreasing"
    assert not fit.passed
    assert not fit.monotone

    print("✅ Pendiente positiva rechazada")


def test_fit_input_errors():
    """Prueba el rechazo de pocos puntos y longitudes distintas."""
    print("\n=== PRUEBA: Errores del ajuste ===")

    with pytest.raises(InputError):
        fit_decay([4.0, 5.0], [1e-3, 1e-4])
    with pytest.raises(InputError):
        fit_decay([4.0, 5.0, 6.0], [1e-3, 1e-4])

    print("✅ Errores de entrada con menos de tres puntos")


def test_wilson_interval():
    """Prueba los intervalos de Wilson en casos de referencia."""
    print("\n=== PRUEBA: Intervalo de Wilson ===")

    low, high = wilson_interval(0, 100, 0.95)
    assert low < 1e-12
    assert abs(high - 0.036994) < 1e-4

    low, high = wilson_interval(50, 100, 0.95)
    assert abs(low + high - 1.0) < 1e-12
    assert low < 0.5 < high

    assert wilson_interval(0, 0) == (0.0, 1.0)

    low, high = wilson_interval(100, 100, 0.95)
    assert high == 1.0 and low > 0.95

    print("✅ Extremos y simetría del intervalo")


if __name__ == "__main__":
    test_decreasing_fit()
    test_exact_line_and_sorting()
    test_floor_verdict()
    test_not_decreasing_verdict()
    test_fit_input_errors()
    test_wilson_interval()
    print("\n✅ Todas las pruebas de ajustes pasaron")
