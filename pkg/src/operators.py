"""
Módulo de ensamblado de operadores.

Este módulo discretiza ½p_x² + ½(p_y − Bx + Φ/L)² + U + V_ω sobre la malla del
cilindro con diferencias finitas de segundo orden: laplaciano de tres puntos en x
con Dirichlet en los extremos y diferencia covariante centrada en y, periódica.
Cada variante del modelo se ensambla como matriz hermítica dispersa.
"""

import hashlib
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy import sparse

from .disorder import disorder_on_grid, restrict_disorder
from .errors import ConfigError
from .geometry import build_grid, build_regions, wall_potential
from .models import (
    AssembledOperator,
    DisorderField,
    Grid,
    ModelConfig,
    OperatorTag,
    OperatorVariant,
    RegionSpec,
    Side,
)
from config.settings import ERROR_MESSAGES


# Paredes y región de desorden de cada variante
VARIANT_TABLE: Dict[OperatorTag, Tuple[Tuple[Side, ...], Optional[str]]] = {
    OperatorTag.LANDAU: ((), None),
    OperatorTag.LEFT_CLEAN: ((Side.LEFT,), None),
    OperatorTag.RIGHT_CLEAN: ((Side.RIGHT,), None),
    OperatorTag.LEFT: ((Side.LEFT,), 'Lambda_l'),
    OperatorTag.RIGHT: ((Side.RIGHT,), 'Lambda_r'),
    OperatorTag.BULK: ((), 'Lambda_b'),
    OperatorTag.FULL: ((Side.LEFT, Side.RIGHT), 'Lambda'),
    OperatorTag.AUX_1: ((), 'Lambda_1'),
    OperatorTag.AUX_2: ((Side.LEFT,), 'Lambda_2'),
}


def vector_potential(grid: Grid, B: float, flux_shift: float) -> np.ndarray:
    """a(x) = Bx − Φ/L en cada columna de la malla."""
    return B * grid.x - flux_shift


def _neighbors(grid: Grid) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Índices (fila, vecino y+1, vecino y−1) con x como índice lento."""
    j, l = np.meshgrid(np.arange(grid.n_x), np.arange(grid.n_y), indexing="ij")
    rows = (j * grid.n_y + l).ravel()
    up = (j * grid.n_y + (l + 1) % grid.n_y).ravel()
    down = (j * grid.n_y + (l - 1) % grid.n_y).ravel()
    return rows, up, down


def kinetic_x(grid: Grid) -> sparse.csr_matrix:
    """½p_x² con laplaciano de tres puntos y Dirichlet fuera de la malla."""
    n = grid.size
    coefficient = 0.5 / grid.h_x ** 2
    main = np.full(n, 2.0 * coefficient)
    side = np.full(n - grid.n_y, -coefficient)
    return sparse.diags([side, main, side], [-grid.n_y, 0, grid.n_y], format="csr", dtype=complex)


def kinetic_y(grid: Grid, B: float, flux_shift: float) -> sparse.csr_matrix:
    """
    ½(p_y − a)² con la diferencia covariante centrada.

    [ψ_l − ½e^{−iah}ψ_{l+1} − ½e^{iah}ψ_{l−1}]/h²; las fases conjugadas se
    calculan una sola vez, lo que hace la matriz exactamente hermítica.
    """
    rows, up, down = _neighbors(grid)
    a = np.repeat(vector_potential(grid, B, flux_shift), grid.n_y)
    coefficient = 1.0 / grid.h_y ** 2
    phase = np.exp(-1j * a * grid.h_y)

    data = np.concatenate([
        np.full(grid.size, coefficient, dtype=complex),
        -0.5 * coefficient * phase,
        -0.5 * coefficient * np.conj(phase),
    ])
    row_index = np.concatenate([rows, rows, rows])
    col_index = np.concatenate([rows, up, down])
    return sparse.coo_matrix((data, (row_index, col_index)), shape=(grid.size, grid.size)).tocsr()


def velocity_operator(grid: Grid, B: float, flux_shift: float) -> sparse.csr_matrix:
    """
    v_y = p_y − a discretizado como la derivada de ``kinetic_y`` respecto de Φ/L.

    Sobre una onda plana e^{iky} da sin((k − a)h)/h, por lo que el teorema de
    Hellmann–Feynman vale exactamente en la malla.
    """
    rows, up, down = _neighbors(grid)
    a = np.repeat(vector_potential(grid, B, flux_shift), grid.n_y)
    coefficient = 0.5 / grid.h_y
    phase = np.exp(-1j * a * grid.h_y)

    data = np.concatenate([-1j * coefficient * phase, np.conj(-1j * coefficient * phase)])
    row_index = np.concatenate([rows, rows])
    col_index = np.concatenate([up, down])
    return sparse.coo_matrix((data, (row_index, col_index)), shape=(grid.size, grid.size)).tocsr()


def discretize(grid: Grid, B: float, flux_shift: float, potential: np.ndarray) -> sparse.csr_matrix:
    """
    Matriz completa a partir de un potencial escalar ya evaluado en la malla.

    Args:
        grid: Malla
        B: Campo magnético
        flux_shift: Φ/L
        potential: Potencial aplanado (x como índice lento)

    Returns:
        sparse.csr_matrix: Matriz hermítica compleja
    """
    potential = np.asarray(potential, dtype=float)
    if potential.shape != (grid.size,):
        raise ConfigError(ERROR_MESSAGES['grid_mismatch'].format(potential.size, grid.size))

    matrix = kinetic_x(grid) + kinetic_y(grid, B, flux_shift) + sparse.diags(potential, 0, dtype=complex)
    matrix = matrix.tocsr()
    matrix.sort_indices()
    return matrix


def checksum(matrix: sparse.csr_matrix) -> str:
    """Huella SHA-256 del patrón y los valores de la matriz."""
    canonical = matrix.tocsr()
    canonical.sort_indices()
    digest = hashlib.sha256()
    for array in (canonical.indptr, canonical.indices, canonical.data):
        digest.update(np.ascontiguousarray(array).tobytes())
    return digest.hexdigest()[:16]


def wall_profile(cfg: ModelConfig, grid: Grid, sides: Tuple[Side, ...]) -> np.ndarray:
    """Suma de las paredes indicadas, aplanada sobre la malla."""
    profile = np.zeros(grid.n_x)
    for side in sides:
        profile = profile + wall_potential(grid.x, side, cfg)
    return np.repeat(profile, grid.n_y)


def variant_potential(
    variant: OperatorVariant,
    cfg: ModelConfig,
    field: Optional[DisorderField],
    grid: Grid,
    regions: Dict[str, RegionSpec],
) -> np.ndarray:
    """
    Potencial escalar de una variante: paredes más desorden restringido a su región.

    Raises:
        ConfigError: Si la variante requiere desorden y no se entregó campo
    """
    sides, region_name = VARIANT_TABLE[variant.tag]
    potential = wall_profile(cfg, grid, sides)

    if region_name is None:
        return potential
    if field is None:
        raise ConfigError(ERROR_MESSAGES['missing_disorder'].format(variant.label))

    restricted = restrict_disorder(field, regions[region_name])
    return potential + disorder_on_grid(restricted, grid)


def assemble(
    variant: OperatorVariant,
    cfg: ModelConfig,
    field: Optional[DisorderField] = None,
    grid: Optional[Grid] = None,
    regions: Optional[Dict[str, RegionSpec]] = None,
) -> AssembledOperator:
    """
    Ensambla una variante de operador como matriz hermítica dispersa.

    Args:
        variant: Variante (etiqueta y uso del flujo)
        cfg: Configuración del modelo
        field: Campo de desorden sobre Λ (requerido por variantes con desorden)
        grid: Malla (por defecto la de la configuración)
        regions: Regiones (por defecto las de la configuración)

    Returns:
        AssembledOperator: Operador ensamblado con su huella

    Raises:
        ConfigError: Si falta el campo de desorden
    """
    grid = grid if grid is not None else build_grid(cfg)
    regions = regions if regions is not None else build_regions(cfg)
    flux_shift = cfg.flux / cfg.L if variant.with_flux else 0.0

    potential = variant_potential(variant, cfg, field, grid, regions)
    matrix = discretize(grid, cfg.B, flux_shift, potential)
    operator = AssembledOperator(
        matrix=matrix,
        grid=grid,
        variant=variant,
        B=cfg.B,
        flux_shift=flux_shift,
        potential=potential,
        checksum=checksum(matrix),
        V0=cfg.V0,
    )
    logger.debug(f"Ensamblado {variant.label}: {grid.size} incógnitas, huella {operator.checksum}")
    return operator


def from_potential(
    grid: Grid,
    B: float,
    potential: np.ndarray,
    flux_shift: float = 0.0,
    tag: OperatorTag = OperatorTag.FULL,
    V0: float = 0.0,
) -> AssembledOperator:
    """Operador sobre una malla arbitraria con un potencial dado (oráculos y sondeos)."""
    matrix = discretize(grid, B, flux_shift, potential)
    return AssembledOperator(
        matrix=matrix,
        grid=grid,
        variant=OperatorVariant(tag=tag, with_flux=flux_shift != 0.0),
        B=B,
        flux_shift=flux_shift,
        potential=np.asarray(potential, dtype=float),
        checksum=checksum(matrix),
        V0=V0,
    )


def export_coo(operator: AssembledOperator, path) -> Path:
    """
    Exporta el operador en formato de lista de coordenadas (row, col, re, im).

    Args:
        operator: Operador ensamblado
        path: Ruta del archivo CSV

    Returns:
        Path: Ruta escrita
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coo = operator.matrix.tocoo()
    frame = pd.DataFrame({
        'row': coo.row,
        'col': coo.col,
        're': coo.data.real,
        'im': coo.data.imag,
    }).sort_values(['row', 'col'], kind="stable")
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Operador {operator.variant.label} exportado en {path} ({len(frame)} entradas)")
    return path
