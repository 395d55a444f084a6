"""
Configuración global del laboratorio numérico de estados de borde.

Este módulo contiene todas las constantes y valores por defecto utilizados
en el laboratorio para mantener la consistencia y facilitar el mantenimiento.
Los archivos de configuración del usuario sólo sobrescriben estos valores.
"""

from typing import Dict, List, Tuple
from dataclasses import dataclass


@dataclass
class PhysicsDefaults:
    """Parámetros físicos y geométricos por defecto del cilindro."""

    # Campo magnético (unidades ħ = m = 1)
    B: float = 1.0

    # Circunferencia del cilindro y separación entre paredes
    L: int = 16

    # Cota de la amplitud del desorden
    V0: float = 0.05

    # Paredes asimétricas: (coeficiente c, exponente m)
    WALL_LEFT: Tuple[float, float] = (1.0, 2.0)
    WALL_RIGHT: Tuple[float, float] = (0.5, 4.0)

    # Flujo de Aharonov-Bohm a lo largo del eje
    FLUX: float = 0.0

    # Semiancho de la ventana Δ y margen ε de Δ_ε
    DELTA: float = 0.2
    EPSILON: float = 0.1

    # Densidad de los acoplamientos X_{n,m}
    DENSITY: str = "uniform"

    # Resolución máxima de la malla en unidades de la longitud magnética
    MAX_SPACING: float = 0.2

    # Margen de decaimiento de estados más allá de la muestra (longitudes magnéticas)
    DECAY_PAD: float = 5.0

    # Truncamiento de las paredes donde U >= WALL_CUTOFF * B
    WALL_CUTOFF: float = 50.0

    # Ancho mínimo de la franja de borde (unidades de red)
    MIN_STRIP_WIDTH: int = 4


@dataclass
class SolverSettings:
    """Tolerancias y límites de los solvers espectrales."""

    # Residuo máximo ‖Hψ − Eψ‖ aceptado
    TOL_EIG: float = 1e-8

    # Debajo de este número de incógnitas se diagonaliza en denso
    DENSE_THRESHOLD: int = 5000

    # Autovalores más cercanos que esto forman un mismo cluster
    DEGENERACY_TOL: float = 1e-9

    # Iteración de potencias para ‖𝒦(z)‖
    POWER_RTOL: float = 1e-6
    POWER_MAXITER: int = 500

    # Paso en k para las diferencias centradas con refinamiento de Richardson
    DERIVATIVE_STEP: float = 1e-3

    # Capa junto a las fronteras truncadas (longitudes magnéticas)
    BOUNDARY_LAYER: float = 4.0

    # Reintentos de factorización con shift desplazado
    MAX_SHIFT_RETRIES: int = 3

    # Distancia mínima entre z y los espectros de H_i
    MIN_RESOLVENT_DISTANCE: float = 1e-8


@dataclass
class ExperimentSettings:
    """Parámetros por defecto de las campañas numéricas."""

    # Tamaños de escritorio
    L_LIST: List[int] = None

    # Número de realizaciones de desorden y semilla maestra
    SEEDS: int = 20
    MASTER_SEED: int = 20240601

    # Ensamble de Wegner
    ENSEMBLE_SIZE: int = 400
    DELTA_BARS: List[float] = None

    # Tope de desplazamiento para el emparejamiento espectral, en múltiplos de tol_eig
    MATCH_TOLERANCE_FACTOR: float = 10.0

    # Vecindario 𝒜 = [m̄ − a, m̄ + a] de la cota de velocidad
    NEIGHBORHOOD: int = 3

    # Umbrales de clasificación ambigua
    AMBIGUOUS_VELOCITY: float = 0.05
    AMBIGUOUS_BULK_MASS: float = 0.5

    # Margen mínimo L·dist entre espectros izquierdo y derecho
    HYPOTHESIS_D0: float = 1e-3

    # Barrido de flujo
    FLUX_POINTS: int = 17

    # Partes reales de z para el barrido de desacoplamiento (en unidades de B)
    Z_LIST: List[float] = None

    # Parte imaginaria común de z; aleja z de los estados de frontera Dirichlet de R_b
    Z_IMAG: float = 0.1

    # Anchos de franja para el barrido de separación
    STRIP_WIDTHS: List[int] = None

    # Piso numérico de desplazamientos y distancias
    FLOOR: float = 1e-10

    # Nivel de confianza de intervalos y ajustes
    CONFIDENCE: float = 0.95

    def __post_init__(self):
        if self.L_LIST is None:
            self.L_LIST = [16, 25, 36, 49]
        if self.DELTA_BARS is None:
            self.DELTA_BARS = [1e-4, 2e-4, 4e-4]
        if self.Z_LIST is None:
            self.Z_LIST = [1.0]
        if self.STRIP_WIDTHS is None:
            self.STRIP_WIDTHS = [4, 5, 6, 7]


@dataclass
class IOSettings:
    """Configuración de persistencia de resultados."""

    # Directorio de salida por defecto
    OUTDIR: str = "results"

    # Variables de entorno que sobrescriben el archivo de configuración
    ENV_OUTDIR: str = "EDGELAB_OUTDIR"
    ENV_SEED: str = "EDGELAB_SEED"

    # Dígitos significativos de energías en CSV
    SIGNIFICANT_DIGITS: int = 12

    # Nivel y formato de los registros en la terminal
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function} - {message}"

    # Secciones válidas del archivo de configuración
    SECTIONS: List[str] = None

    def __post_init__(self):
        self.SECTIONS = ['model', 'solver', 'experiments', 'io']


# Instancias globales de configuración
PHYSICS_DEFAULTS = PhysicsDefaults()
SOLVER_SETTINGS = SolverSettings()
EXPERIMENT_SETTINGS = ExperimentSettings()
IO_SETTINGS = IOSettings()


# Diccionario de mensajes de error para consistencia
ERROR_MESSAGES: Dict[str, str] = {
    'config_file_not_found': 'Archivo de configuración no encontrado: {}',
    'config_syntax': 'Línea {} inválida en la configuración: "{}" (se espera clave = valor)',
    'unknown_key': 'Clave de configuración desconocida: {}',
    'invalid_config': 'Configuración inválida: {}',
    'window_condition': 'condición de ventana violada: V0 + epsilon + delta < B/2 (V0={}, epsilon={}, delta={}, B/2={})',
    'unknown_density': 'Densidad desconocida: {} (disponibles: {})',
    'non_finite': 'Coordenadas no finitas: {}',
    'missing_disorder': 'La variante {} requiere un campo de desorden',
    'grid_mismatch': 'El vector tiene {} entradas pero la malla tiene {}',
    'empty_range': 'El rango de índices m está vacío',
    'cutoff_overlap': 'Las transiciones de corte se solapan: D={} es demasiado pequeño para L={}',
    'singular_resolvent': 'z={} está a {:.3e} del espectro de {} (mínimo {:.1e})',
    'factorization_failed': 'Falló la factorización en el shift {} tras {} reintentos',
    'incomplete_spectrum': 'Espectro incompleto en ({}, {}): {} autovalores por inercia, {} encontrados',
    'degeneracy': 'Aislamiento violado: hay autovalores a {:.3e} de E={} (radio {:.1e})',
    'hypothesis_violation': 'Espectros izquierdo y derecho a {:.3e} (tolerancia {:.1e})',
    'branch_hit': 'El intervalo [{}, {}] contiene el autovalor de rama {}',
    'branch_coverage': 'La rama no cubre m̄ ± {} alrededor de E={}',
    'window_outside_gap': 'La ventana ({}, {}) no está contenida en el primer gap ({}, {})',
    'too_few_points': 'Se necesitan al menos {} tamaños para el ajuste, hay {}',
    'export_error': 'Error al exportar los resultados: {}',
}


# Diccionario de mensajes informativos
INFO_MESSAGES: Dict[str, str] = {
    'campaign_start': 'Iniciando campaña {} con {} tareas',
    'campaign_complete': 'Campaña {} completada en {:.2f} s',
    'window_solved': 'Ventana ({:.4f}, {:.4f}): {} autovalores ({} artefactos de frontera)',
    'export_success': 'Resultados exportados en {}',
    'config_valid': 'Configuración válida',
}


# Configuración consolidada para importación fácil
SETTINGS = {
    'physics_defaults': PHYSICS_DEFAULTS,
    'solver_settings': SOLVER_SETTINGS,
    'experiment_settings': EXPERIMENT_SETTINGS,
    'io_settings': IO_SETTINGS,
    'error_messages': ERROR_MESSAGES,
    'info_messages': INFO_MESSAGES
}
