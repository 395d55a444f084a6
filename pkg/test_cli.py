"""
Pruebas de la interfaz de línea de comandos y sus códigos de salida.
"""

import sys
import os
sys.path.append('src')
sys.path.append('config')

import io
import json
import tempfile
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
import pandas as pd

from src.campaigns.edge_report import solve_edge_realization
from src.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from src.eigensolver import default_branch_range, solve_branch
from src.models import ExperimentOptions, ModelConfig, Side, SolverOptions


def _run(argv):
    """Ejecuta la CLI capturando stdout y stderr."""
    stdout, stderr = io.StringIO(), io.StringIO()
    with redirect_stdout(stdout), redirect_stderr(stderr):
        code = main(argv)
    return code, stdout.getvalue(), stderr.getvalue()


def test_validate_config_window_violation():
    """Prueba que validate-config rechaza V0 = 0.3 con código 2."""
    print("=== PRUEBA: validate-config con ventana violada ===")

    code, _, stderr = _run(['--log-level', 'ERROR', '--set', 'model.V0=0.3', 'validate-config'])
    assert code == EXIT_USAGE
    assert "condición de ventana" in stderr

    print("✅ Código 2 y el error en stderr")


def test_validate_config_prints_effective():
    """Prueba la impresión de la configuración efectiva."""
    print("\n=== PRUEBA: Configuración efectiva ===")

    code, stdout, _ = _run(['--log-level', 'ERROR', '--seed', '11', 'validate-config', '--print-effective'])
    assert code == EXIT_OK
    assert "model.B = 1.0" in stdout
    assert "experiments.master_seed = 11" in stdout

    print("✅ Código 0 con model.B y la semilla de la bandera")


def test_usage_errors():
    """Prueba banderas desconocidas, --jobs inválido y --set mal formado."""
    print("\n=== PRUEBA: Errores de uso ===")

    assert _run(['--bogus', 'validate-config'])[0] == EXIT_USAGE
    assert _run([])[0] == EXIT_USAGE
    assert _run(['--jobs', '0', 'validate-config'])[0] == EXIT_USAGE
    assert _run(['--log-level', 'ERROR', '--set', 'sin_igual', 'branches'])[0] == EXIT_USAGE
    assert _run(['--log-level', 'ERROR', '--set', 'color=azul', 'branches'])[0] == EXIT_USAGE

    print("✅ Código 2 en todos los errores de uso")


def test_branches_command():
    """Prueba que branches escribe la rama, el resumen y el manifiesto."""
    print("\n=== PRUEBA: Subcomando branches ===")

    with tempfile.TemporaryDirectory() as temp_dir:
        code, _, _ = _run(['--log-level', 'ERROR', '--outdir', temp_dir, 'branches', '--side', 'l', '--n', '0'])
        assert code == EXIT_OK

        table = pd.read_csv(os.path.join(temp_dir, 'branches', 'l_n0.csv'))
        with open(os.path.join(temp_dir, 'manifest.json'), encoding='utf-8') as handle:
            manifest = json.load(handle)
        assert os.path.isfile(os.path.join(temp_dir, 'summary.csv'))

    assert list(table.columns) == ['m', 'k', 'epsilon', 'd_epsilon']
    assert np.all(np.diff(table['epsilon'].to_numpy()) <= 1e-9)
    assert 'branches/l_n0.csv' in manifest['files']
    assert manifest['command'] == 'branches'
    assert manifest['parameters']['side'] == 'l'

    cfg = ModelConfig()
    branch = solve_branch(Side.LEFT, 0, default_branch_range(cfg, Side.LEFT), cfg)
    assert table['m'].tolist() == branch.m.tolist()
    relative = np.abs(table['epsilon'].to_numpy() - branch.energies) / np.abs(branch.energies)
    assert relative.max() < 1e-11

    print(f"✅ {len(table)} puntos de rama con 12 dígitos significativos")


def test_edge_report_command():
    """Prueba que edge-report exporta los estados de una semilla igual que la biblioteca."""
    print("\n=== PRUEBA: Subcomando edge-report ===")

    seed = ExperimentOptions().master_seed
    with tempfile.TemporaryDirectory() as temp_dir:
        code, _, stderr = _run(['--log-level', 'ERROR', '--outdir', temp_dir,
                                'edge-report', '--L', '16', '--seeds', '1'])
        assert code in (EXIT_OK, EXIT_FAILED)
        assert 'edge_sides_agree' not in stderr and 'edge_coverage' not in stderr

        states = pd.read_csv(os.path.join(temp_dir, 'edge-report', f"L16_seed{seed}.csv"))
        with open(os.path.join(temp_dir, 'manifest.json'), encoding='utf-8') as handle:
            manifest = json.load(handle)

    assert {'E', 'J', 'class', 'matched_side'} <= set(states.columns)
    assert f"edge-report/L16_seed{seed}.csv" in manifest['files']
    assert manifest['parameters']['seeds'] == 1

    solution = solve_edge_realization(ModelConfig(), seed, SolverOptions(), ExperimentOptions())
    assert len(states) == solution.spectrum.count
    relative = np.abs(states['E'].to_numpy() - solution.spectrum.energies) / solution.spectrum.energies
    assert relative.max() < 1e-11
    assert set(states['matched_side']) <= {Side.LEFT.value, Side.RIGHT.value}

    print(f"✅ {len(states)} estados exportados y coincidentes con la biblioteca")


if __name__ == "__main__":
    test_validate_config_window_violation()
    test_validate_config_prints_effective()
    test_usage_errors()
    test_branches_command()
    test_edge_report_command()
    print("\n✅ Todas las pruebas de la CLI pasaron")
