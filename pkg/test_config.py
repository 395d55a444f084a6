"""
Pruebas de la lectura, precedencia y validación de configuraciones.
"""

import sys
import os
sys.path.append('src')
sys.path.append('config')

import tempfile

import pytest

from src.config_parser import ConfigParser, format_effective
from src.errors import ConfigError
from src.models import ExperimentOptions, RunConfig, SolverOptions, ValidationResult
from src.validators import ConfigValidator


SAMPLE_CONFIG = """
# Configuración de prueba
[model]
B = 1.0
V0 = 0.04   # amplitud del desorden
pared izquierda c = 2.0

[experiments]
L_list = 16, 25, 36
seeds = 5
semilla = 7

[io]
outdir = resultados
"""


def test_sections_and_aliases():
    """Prueba secciones, alias en español y prefijos."""
    print("=== PRUEBA: Secciones y alias ===")

    parser = ConfigParser()
    values = parser.parse_text(SAMPLE_CONFIG + "model.flux = 0.5\ncampo = 1.0\n")

    assert values['model.V0'] == '0.04'
    assert values['model.wall_left_c'] == '2.0'
    assert values['experiments.L_list'] == '16, 25, 36'
    assert values['experiments.master_seed'] == '7'
    assert values['io.outdir'] == 'resultados'
    assert values['model.flux'] == '0.5'

    config = parser.build(values, environ={})
    assert config.model.V0 == 0.04
    assert config.model.wall_left.c == 2.0
    assert config.model.wall_left.m == 2.0
    assert config.experiments.L_list == (16, 25, 36)
    assert config.experiments.seeds == 5

    print("✅ Claves canónicas resueltas desde secciones, alias y prefijos")


def test_unknown_keys():
    """Prueba que las claves desconocidas se lanzan o se acumulan."""
    print("\n=== PRUEBA: Claves desconocidas ===")

    parser = ConfigParser()
    with pytest.raises(ConfigError):
        parser.parse_text("[model]\ncolor = azul\n")
    with pytest.raises(ConfigError):
        parser.parse_text("[plots]\nB = 1\n")

    problems = []
    values = parser.parse_text("color = azul\nsin signo igual\nV0 = 0.02\n", problems)
    assert len(problems) == 2
    assert values == {'model.V0': '0.02'}

    print(f"✅ {len(problems)} problemas acumulados sin detener la lectura")


def test_precedence():
    """Prueba la precedencia banderas > entorno > archivo > defecto."""
    print("\n=== PRUEBA: Precedencia de fuentes ===")

    parser = ConfigParser()
    file_values = {'experiments.master_seed': '1', 'io.outdir': 'desde_archivo'}
    environ = {'EDGELAB_SEED': '2', 'EDGELAB_OUTDIR': 'desde_entorno'}

    assert parser.build(file_values, environ={}).experiments.master_seed == 1
    assert parser.build(file_values, environ=environ).experiments.master_seed == 2
    config = parser.build(file_values, flags={'experiments.master_seed': 3, 'outdir': None}, environ=environ)
    assert config.experiments.master_seed == 3
    assert config.io.outdir == 'desde_entorno'

    assert parser.build(environ={}).experiments.master_seed == 20240601

    print("✅ La semilla 3 de la bandera gana sobre el entorno y el archivo")


def test_window_condition():
    """Prueba que V0 + ε + δ ≥ B/2 se rechaza."""
    print("\n=== PRUEBA: Condición de ventana ===")

    parser = ConfigParser()
    with pytest.raises(ConfigError) as error:
        parser.build({'model.V0': '0.3'}, environ={})
    assert "condición de ventana" in str(error.value)

    print("✅ Error de configuración con V0 = 0.3")


def test_effective_round_trip():
    """Prueba que la configuración efectiva impresa se relee equivalente."""
    print("\n=== PRUEBA: Configuración efectiva ===")

    parser = ConfigParser()
    config = parser.build(parser.parse_text(SAMPLE_CONFIG), environ={})
    text = format_effective(config)
    assert "model.B = 1.0" in text
    assert text.startswith("# config_hash = ")

    reparsed = parser.build(parser.parse_text(text), environ={})
    assert reparsed.model.resolved_grid() == config.model.resolved_grid()
    assert reparsed.model.D == config.model.D
    assert reparsed.model.wall_left == config.model.wall_left
    assert reparsed.experiments == config.experiments
    assert reparsed.solver == config.solver

    print("✅ Malla, franja y campañas idénticas tras releer")


def test_validator_reports_all_problems():
    """Prueba errores y advertencias del validador sobre un archivo."""
    print("\n=== PRUEBA: Validador de configuración ===")

    validator = ConfigValidator()
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, 'run.cfg')
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write("[experiments]\nL_list = 16, 16, 25\nseeds = 5\n")
        result, config = validator.validate(path, environ={})

        assert config is not None
        assert not result.is_valid
        assert any("repetidos" in error for error in result.errors)
        assert any("realizaciones" in warning for warning in result.warnings)

        with open(path, 'w', encoding='utf-8') as handle:
            handle.write("[model]\nV0 = 0.3\n")
        result, config = validator.validate(path, environ={})
        assert config is None and not result.is_valid

        result, config = validator.validate(os.path.join(temp_dir, 'no_existe.cfg'), environ={})
        assert config is None and not result.is_valid

    result, config = validator.validate(environ={})
    assert result.is_valid
    assert result.errors == []
    assert set(vars(result)) == {'is_valid', 'errors', 'warnings'}

    print("✅ Tamaños repetidos, pocas semillas, ventana violada y archivo ausente")


def test_match_tolerance_follows_solver():
    """Prueba que el tope de emparejamiento es 10·tol_eig salvo que se fije a mano."""
    print("\n=== PRUEBA: Tolerancia de emparejamiento ===")

    default = RunConfig()
    assert default.experiments.match_tolerance == 10.0 * default.solver.tol_eig

    tight = RunConfig(solver={'tol_eig': 1e-9})
    assert abs(tight.experiments.match_tolerance - 1e-8) < 1e-20

    same = RunConfig(solver=SolverOptions(tol_eig=1e-10), experiments=ExperimentOptions(seeds=3))
    assert abs(same.experiments.match_tolerance - 1e-9) < 1e-21
    assert same.experiments.seeds == 3

    explicit = RunConfig(solver={'tol_eig': 1e-9}, experiments={'match_tolerance': 5e-7})
    assert explicit.experiments.match_tolerance == 5e-7

    parsed = ConfigParser().build({'solver.tol_eig': '1e-10'}, environ={})
    assert abs(parsed.experiments.match_tolerance - 1e-9) < 1e-21

    result = ConfigValidator().validate_config(
        RunConfig(solver={'tol_eig': 1e-6}, experiments={'match_tolerance': 1e-6}))
    assert any("tol_eig" in warning for warning in result.warnings)

    print("✅ match_tolerance = 10·tol_eig por defecto y explícita cuando se fija")


if __name__ == "__main__":
    test_sections_and_aliases()
    test_unknown_keys()
    test_precedence()
    test_window_condition()
    test_effective_round_trip()
    test_validator_reports_all_problems()
    test_match_tolerance_follows_solver()
    print("\n✅ Todas las pruebas de configuración pasaron")
