"""
Módulo del campo de desorden de Anderson.

Este módulo muestrea los acoplamientos X_{n,m} con un generador basado en
contador, evalúa el potencial V_ω = Σ X_{n,m} V(x − n, y − m) con un bump C²
de soporte compacto y exporta/importa los campos como tablas (n, m, X).
"""

from pathlib import Path
from typing import Callable, Dict, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from .errors import ConfigError, InputError
from .geometry import star_distance, wrap_site_index, y_site_range
from .models import DisorderField, Grid, ModelConfig, RegionSpec
from config.settings import ERROR_MESSAGES


# Radio del soporte del bump
BUMP_RADIUS = 0.25

# Flujo aleatorio único de la red Λ: las subregiones nunca abren el suyo
LATTICE_STREAM = 0x4C414D42

# Desplazamiento para codificar índices negativos en la clave del generador
_SITE_OFFSET = 2 ** 31


def _uniform(rng: np.random.Generator) -> float:
    return rng.uniform(-1.0, 1.0)


def _triangular(rng: np.random.Generator) -> float:
    return rng.triangular(-1.0, 0.0, 1.0)


# Densidades disponibles: muestreador y ‖h‖∞
DENSITIES: Dict[str, Tuple[Callable[[np.random.Generator], float], float]] = {
    'uniform': (_uniform, 0.5),
    'triangular': (_triangular, 1.0),
}


def density_sup(density_id: str) -> float:
    """
    Retorna ‖h‖∞ de la densidad.

    Raises:
        ConfigError: Si la densidad no existe
    """
    if density_id not in DENSITIES:
        raise ConfigError(ERROR_MESSAGES['unknown_density'].format(density_id, ", ".join(DENSITIES)))
    return DENSITIES[density_id][1]


def bump_profile(r: np.ndarray, amplitude: float) -> np.ndarray:
    """
    Bump V(r) = a(1 − (4r)²)³ para r < 1/4 y cero fuera.

    Args:
        r: Distancia al centro del sitio
        amplitude: Altura a del bump

    Returns:
        np.ndarray: Valores del bump
    """
    r = np.asarray(r, dtype=float)
    inside = r < BUMP_RADIUS
    profile = np.where(inside, 1.0 - 16.0 * r * r, 0.0)
    return amplitude * profile ** 3


def site_generator(seed: int, site: Tuple[int, int]) -> np.random.Generator:
    """Generador Philox con clave (semilla, flujo de red, n, m)."""
    n, m = site
    sequence = np.random.SeedSequence(
        entropy=int(seed),
        spawn_key=(LATTICE_STREAM, int(n) + _SITE_OFFSET, int(m) + _SITE_OFFSET),
    )
    return np.random.Generator(np.random.Philox(sequence))


def sample_disorder(cfg: ModelConfig, region: RegionSpec, seed: int) -> DisorderField:
    """
    Muestrea un acoplamiento i.i.d. por sitio de la región.

    Cada valor depende sólo de (semilla, sitio), no del orden de iteración
    ni de la región, por lo que V_ω^α coincide bit a bit con V_ω|_{Λ_α}.

    Args:
        cfg: Configuración del modelo
        region: Región de sitios
        seed: Semilla maestra

    Returns:
        DisorderField: Campo de desorden sobre la región

    Raises:
        ConfigError: Si la densidad no existe
    """
    density_sup(cfg.density)
    sampler = DENSITIES[cfg.density][0]

    couplings = np.array(
        [sampler(site_generator(seed, site)) for site in region.sites],
        dtype=float,
    )
    logger.debug(f"Desorden {cfg.density} sobre {region.name}: {region.size} sitios (semilla {seed})")

    return DisorderField(
        seed=int(seed),
        region=region,
        couplings=couplings,
        density_id=cfg.density,
        amplitude=cfg.V0,
        period=cfg.L,
    )


def restrict_disorder(field: DisorderField, region: RegionSpec) -> DisorderField:
    """
    Restringe un campo a una subregión conservando los valores exactos.

    Raises:
        InputError: Si la subregión no está contenida en la región del campo
    """
    lookup = {site: index for index, site in enumerate(field.region.sites)}
    missing = [site for site in region.sites if site not in lookup]
    if missing:
        raise InputError(f"La región {region.name} no está contenida en {field.region.name}: {missing[:3]}")

    indices = np.array([lookup[site] for site in region.sites], dtype=int)
    return DisorderField(
        seed=field.seed,
        region=region,
        couplings=field.couplings[indices] if indices.size else np.zeros(0),
        density_id=field.density_id,
        amplitude=field.amplitude,
        period=field.period,
    )


def evaluate_disorder(field: DisorderField, p) -> float:
    """
    Evalúa V_ω en un punto con la coordenada y envuelta por la métrica del cilindro.

    A lo sumo un sitio contribuye porque los soportes tienen radio 1/4.

    Args:
        field: Campo de desorden
        p: Punto (x, y)

    Returns:
        float: Energía potencial en p
    """
    x, y = float(p[0]), float(p[1])
    n = int(np.rint(x))
    m = int(wrap_site_index(np.rint(y), field.period))

    couplings = field.as_dict()
    if (n, m) not in couplings:
        return 0.0

    r = star_distance((x, y), (n, m), field.period)
    return float(couplings[(n, m)] * bump_profile(r, field.amplitude))


def disorder_on_grid(field: DisorderField, grid: Grid) -> np.ndarray:
    """
    Evalúa V_ω en todos los puntos de la malla (x como índice lento).

    Args:
        field: Campo de desorden
        grid: Malla del cilindro

    Returns:
        np.ndarray: Potencial aplanado de tamaño n_x·n_y
    """
    values = np.zeros(grid.size, dtype=float)
    if field.region.size == 0:
        return values

    sites = np.array(field.region.sites, dtype=int)
    n_lo, n_hi = int(sites[:, 0].min()), int(sites[:, 0].max())
    m_lo, _ = y_site_range(field.period)

    # Tabla densa de acoplamientos; NaN marca sitios fuera de la región
    table = np.full((n_hi - n_lo + 1, field.period), np.nan)
    table[sites[:, 0] - n_lo, sites[:, 1] - m_lo] = field.couplings

    xx, yy = grid.mesh()
    n = np.rint(xx).astype(int)
    m_raw = np.rint(yy).astype(int)
    r = np.hypot(xx - n, yy - m_raw)
    m = wrap_site_index(m_raw, field.period)

    active = (r < BUMP_RADIUS) & (n >= n_lo) & (n <= n_hi)
    coupling = np.zeros(grid.size)
    coupling[active] = table[n[active] - n_lo, m[active] - m_lo]
    active &= ~np.isnan(coupling)

    values[active] = coupling[active] * bump_profile(r[active], field.amplitude)
    return values


def export_disorder(field: DisorderField, path) -> Path:
    """
    Exporta el campo como tabla (n, m, X) separada por comas.

    Args:
        field: Campo de desorden
        path: Ruta del archivo CSV

    Returns:
        Path: Ruta escrita
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    field.to_frame().to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Campo de desorden exportado en {path}")
    return path


def import_disorder(path, cfg: ModelConfig, seed: int, region_name: str = "Lambda") -> DisorderField:
    """
    Importa un campo exportado con ``export_disorder``.

    Args:
        path: Ruta del archivo CSV
        cfg: Configuración del modelo
        seed: Semilla con la que se generó
        region_name: Nombre de la región reconstruida

    Returns:
        DisorderField: Campo con los mismos acoplamientos

    Raises:
        InputError: Si faltan columnas o hay valores fuera de [−1, 1]
    """
    frame = pd.read_csv(path)
    missing = {'n', 'm', 'X'} - set(frame.columns)
    if missing:
        raise InputError(f"Faltan columnas en {path}: {sorted(missing)}")

    sites = tuple((int(n), int(m)) for n, m in zip(frame['n'], frame['m']))
    couplings = frame['X'].to_numpy(dtype=float)
    if couplings.size and np.max(np.abs(couplings)) > 1.0:
        raise InputError(f"Acoplamientos fuera de [−1, 1] en {path}")

    return DisorderField(
        seed=int(seed),
        region=RegionSpec(name=region_name, sites=sites),
        couplings=couplings,
        density_id=cfg.density,
        amplitude=cfg.V0,
        period=cfg.L,
    )
