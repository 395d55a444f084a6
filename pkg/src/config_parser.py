"""
Módulo de lectura de archivos de configuración planos.

Este módulo interpreta archivos ``clave = valor`` con secciones ``[model]``,
``[solver]``, ``[experiments]`` e ``[io]`` o con prefijos (``model.B = 1``),
resuelve alias de claves, aplica las sobrescrituras de entorno y de línea de
comandos y construye la configuración validada de la ejecución.
"""

import os
import re
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from loguru import logger
from pydantic import ValidationError

from .errors import ConfigError
from .models import RunConfig
from config.settings import ERROR_MESSAGES, IO_SETTINGS


# Claves de lista separadas por comas
LIST_KEYS = {
    'experiments.L_list': int,
    'experiments.delta_bars': float,
    'experiments.z_list': float,
    'experiments.strip_widths': int,
}

# Claves de pared y malla que se agrupan en submodelos
WALL_KEYS = ('wall_left', 'wall_right')
GRID_FIELDS = ('n_x', 'n_y', 'x_min', 'x_max')


class ConfigParser:
    """
    Intérprete de configuración con mapeo de alias.

    Cada clave canónica ``sección.campo`` acepta variantes en inglés y en
    español; las claves se normalizan antes de compararlas.
    """

    def __init__(self):
        """Inicializa el parser con el mapeo de alias."""
        self.key_mappings = self._create_key_mappings()
        self.alias_index = self._build_alias_index()

    def _create_key_mappings(self) -> Dict[str, List[str]]:
        """
        Crea mapeos de nombres de claves alternativos.

        Returns:
            Dict[str, List[str]]: Mapeo de clave canónica a variantes
        """
        return {
            # Modelo
            'model.B': ['b', 'campo', 'field', 'magnetic field', 'campo magnetico'],
            'model.L': ['l', 'size', 'tamano', 'circumference', 'circunferencia'],
            'model.V0': ['v0', 'disorder', 'desorden', 'amplitude', 'amplitud'],
            'model.wall_left_c': ['wall left c', 'c_l', 'cl', 'pared izquierda c'],
            'model.wall_left_m': ['wall left m', 'm_l', 'ml', 'pared izquierda m'],
            'model.wall_right_c': ['wall right c', 'c_r', 'cr', 'pared derecha c'],
            'model.wall_right_m': ['wall right m', 'm_r', 'mr', 'pared derecha m'],
            'model.flux': ['flux', 'phi', 'flujo'],
            'model.delta': ['delta', 'half width', 'semiancho'],
            'model.epsilon': ['epsilon', 'eps', 'gap margin', 'margen'],
            'model.density': ['density', 'densidad', 'h'],
            'model.strip_width': ['strip width', 'd', 'franja', 'ancho franja'],
            'model.grid_n_x': ['n_x', 'nx', 'grid nx'],
            'model.grid_n_y': ['n_y', 'ny', 'grid ny'],
            'model.grid_x_min': ['x_min', 'xmin'],
            'model.grid_x_max': ['x_max', 'xmax'],
            # Solver
            'solver.tol_eig': ['tol eig', 'tolerance', 'tolerancia'],
            'solver.dense_threshold': ['dense threshold', 'umbral denso'],
            'solver.degeneracy_tol': ['degeneracy tol', 'tolerancia degeneracion'],
            'solver.power_rtol': ['power rtol'],
            'solver.power_maxiter': ['power maxiter'],
            'solver.derivative_step': ['derivative step', 'paso derivada'],
            'solver.boundary_layer': ['boundary layer', 'capa frontera'],
            'solver.max_shift_retries': ['max shift retries', 'reintentos'],
            'solver.min_resolvent_distance': ['min resolvent distance'],
            # Campañas
            'experiments.L_list': ['l list', 'sizes', 'tamanos'],
            'experiments.seeds': ['seeds', 'semillas', 'realizations', 'realizaciones'],
            'experiments.master_seed': ['master seed', 'seed', 'semilla'],
            'experiments.ensemble_size': ['ensemble size', 'n', 'ensamble'],
            'experiments.delta_bars': ['delta bars', 'delta bar', 'semianchos'],
            'experiments.match_tolerance': ['match tolerance', 'tolerancia emparejamiento'],
            'experiments.neighborhood': ['neighborhood', 'vecindario', 'a'],
            'experiments.ambiguous_velocity': ['ambiguous velocity'],
            'experiments.ambiguous_bulk_mass': ['ambiguous bulk mass'],
            'experiments.hypothesis_d0': ['hypothesis d0', 'd0'],
            'experiments.flux_points': ['flux points', 'puntos flujo'],
            'experiments.z_list': ['z list', 'z'],
            'experiments.z_imag': ['z imag', 'im z'],
            'experiments.strip_widths': ['strip widths', 'anchos franja'],
            'experiments.floor': ['floor', 'piso'],
            'experiments.confidence': ['confidence', 'confianza'],
            # Persistencia
            'io.outdir': ['outdir', 'output', 'salida', 'directorio salida'],
            'io.significant_digits': ['significant digits', 'digitos'],
            'io.plot_data': ['plot data', 'datos grafica'],
            'io.figures': ['figures', 'figuras'],
        }

    def _normalize_text(self, text: str) -> str:
        """
        Normaliza una clave para comparación.

        Args:
            text: Texto a normalizar

        Returns:
            str: Texto en minúsculas, sin signos y con '_' por espacios
        """
        if not text:
            return ""

        normalized = re.sub(r'[^\w\s.]', '', str(text).lower().strip())
        normalized = re.sub(r'[\s_]+', '_', normalized)
        return normalized

    def _build_alias_index(self) -> Dict[str, str]:
        """Índice de alias normalizado → clave canónica."""
        index: Dict[str, str] = {}
        for canonical, aliases in self.key_mappings.items():
            section, field = canonical.split('.', 1)
            index[self._normalize_text(canonical)] = canonical
            for alias in [field] + aliases:
                normalized = self._normalize_text(alias)
                index.setdefault(f"{section}.{normalized}", canonical)
                index.setdefault(normalized, canonical)
        return index

    def resolve_key(self, key: str, section: Optional[str] = None) -> str:
        """
        Resuelve una clave (con o sin prefijo) a su forma canónica.

        Raises:
            ConfigError: Si la clave no corresponde a ninguna conocida
        """
        normalized = self._normalize_text(key)
        candidates = [normalized]
        if section and '.' not in normalized:
            candidates.insert(0, f"{section}.{normalized}")

        for candidate in candidates:
            if candidate in self.alias_index:
                return self.alias_index[candidate]

        logger.error(f"Clave desconocida: {key}")
        raise ConfigError(ERROR_MESSAGES['unknown_key'].format(key))

    def parse_text(self, text: str, problems: Optional[List[str]] = None) -> Dict[str, str]:
        """
        Interpreta el contenido de un archivo de configuración.

        Args:
            text: Contenido del archivo
            problems: Si se indica, los errores se acumulan aquí en lugar de lanzarse

        Returns:
            Dict[str, str]: Valores crudos por clave canónica

        Raises:
            ConfigError: Si una línea no tiene la forma clave = valor o la clave es desconocida
        """
        values: Dict[str, str] = {}
        section: Optional[str] = None

        for number, raw in enumerate(text.splitlines(), start=1):
            line = re.split(r'\s[#;]|^[#;]', raw, maxsplit=1)[0].strip()
            if not line:
                continue

            try:
                header = re.fullmatch(r'\[\s*([\w.]+)\s*\]', line)
                if header:
                    section = header.group(1).lower()
                    if section not in IO_SETTINGS.SECTIONS:
                        section = None
                        raise ConfigError(ERROR_MESSAGES['unknown_key'].format(f"[{header.group(1)}]"))
                    continue

                key, separator, value = (part.strip() for part in line.partition('='))
                if not separator or not key:
                    raise ConfigError(ERROR_MESSAGES['config_syntax'].format(number, raw.strip()))
                values[self.resolve_key(key, section)] = value
            except ConfigError as exc:
                if problems is None:
                    raise
                problems.append(str(exc))

        return values

    def parse_file(self, path, problems: Optional[List[str]] = None) -> Dict[str, str]:
        """
        Lee y procesa un archivo de configuración.

        Raises:
            ConfigError: Si el archivo no existe
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigError(ERROR_MESSAGES['config_file_not_found'].format(path))
        logger.debug(f"Leyendo configuración de {path}")
        return self.parse_text(path.read_text(encoding="utf-8"), problems)

    def environment_overrides(self, environ: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
        """Sobrescrituras desde las variables de entorno de salida y semilla."""
        environ = os.environ if environ is None else environ
        overrides = {}
        if environ.get(IO_SETTINGS.ENV_OUTDIR):
            overrides['io.outdir'] = environ[IO_SETTINGS.ENV_OUTDIR]
        if environ.get(IO_SETTINGS.ENV_SEED):
            overrides['experiments.master_seed'] = environ[IO_SETTINGS.ENV_SEED]
        return overrides

    def _coerce(self, key: str, value):
        """Convierte listas separadas por comas; el resto lo valida pydantic."""
        if key in LIST_KEYS and isinstance(value, str):
            cast = LIST_KEYS[key]
            items = [item.strip() for item in value.strip('[]() ').split(',') if item.strip()]
            try:
                return tuple(cast(float(item)) if cast is int else cast(item) for item in items)
            except ValueError as exc:
                raise ConfigError(ERROR_MESSAGES['invalid_config'].format(f"{key} = {value}")) from exc
        return value

    def _nest(self, values: Dict[str, object]) -> Dict[str, Dict]:
        """Agrupa claves planas en el diccionario anidado de RunConfig."""
        nested: Dict[str, Dict] = {section: {} for section in IO_SETTINGS.SECTIONS}
        walls: Dict[str, Dict[str, object]] = {}
        grid: Dict[str, object] = {}

        for key, value in values.items():
            section, field = key.split('.', 1)
            value = self._coerce(key, value)
            wall = next((name for name in WALL_KEYS if field.startswith(name + '_')), None)
            if wall:
                walls.setdefault(wall, {})[field[len(wall) + 1:]] = value
            elif field.startswith('grid_'):
                grid[field[len('grid_'):]] = value
            else:
                nested[section][field] = value

        defaults = RunConfig().model.model_dump()
        for wall, parts in walls.items():
            nested['model'][wall] = {**defaults[wall], **parts}

        if grid:
            missing = [name for name in GRID_FIELDS if name not in grid]
            if missing:
                raise ConfigError(ERROR_MESSAGES['invalid_config'].format(
                    f"la malla explícita requiere {', '.join('grid_' + name for name in missing)}"))
            nested['model']['grid'] = grid

        return {section: fields for section, fields in nested.items() if fields}

    def build(
        self,
        file_values: Optional[Dict[str, str]] = None,
        flags: Optional[Dict[str, object]] = None,
        environ: Optional[Mapping[str, str]] = None,
    ) -> RunConfig:
        """
        Construye la configuración efectiva.

        Precedencia: banderas > entorno > archivo > valores por defecto.

        Args:
            file_values: Valores crudos leídos del archivo
            flags: Sobrescrituras de línea de comandos (claves canónicas o alias)
            environ: Entorno (por defecto ``os.environ``)

        Returns:
            RunConfig: Configuración validada

        Raises:
            ConfigError: Si algún valor no supera la validación
        """
        merged: Dict[str, object] = dict(file_values or {})
        merged.update(self.environment_overrides(environ))
        for key, value in (flags or {}).items():
            if value is not None:
                merged[self.resolve_key(key)] = value

        try:
            config = RunConfig(**self._nest(merged))
        except ValidationError as exc:
            details = "; ".join(
                f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in exc.errors())
            logger.error(f"Configuración inválida: {details}")
            raise ConfigError(ERROR_MESSAGES['invalid_config'].format(details)) from exc

        logger.debug(f"Configuración efectiva {config.config_hash()}")
        return config

    def load(self, path=None, flags: Optional[Dict[str, object]] = None,
             environ: Optional[Mapping[str, str]] = None) -> RunConfig:
        """Lee el archivo (si se indica) y construye la configuración efectiva."""
        file_values = self.parse_file(path) if path else {}
        return self.build(file_values, flags, environ)


def effective_items(config: RunConfig) -> List[Tuple[str, object]]:
    """
    Configuración efectiva como pares planos ``sección.clave``.

    La malla y el ancho de franja se imprimen resueltos; releer la salida da
    una configuración físicamente equivalente.
    """
    items: List[Tuple[str, object]] = []
    dumped = config.model_dump(mode="json")
    resolved = config.model.resolved_grid().model_dump()

    for section in IO_SETTINGS.SECTIONS:
        for field, value in dumped[section].items():
            if field in WALL_KEYS:
                items.extend((f"{section}.{field}_{part}", value[part]) for part in ('c', 'm'))
            elif field == 'grid':
                items.extend((f"{section}.grid_{name}", resolved[name]) for name in GRID_FIELDS)
            elif field == 'strip_width' and value is None:
                items.append((f"{section}.strip_width", config.model.D))
            elif isinstance(value, list):
                items.append((f"{section}.{field}", ", ".join(str(item) for item in value)))
            else:
                items.append((f"{section}.{field}", value))
    return items


def format_effective(config: RunConfig) -> str:
    """Texto ``clave = valor`` de la configuración efectiva."""
    lines = [f"# config_hash = {config.config_hash()}"]
    lines.extend(f"{key} = {value}" for key, value in effective_items(config))
    return "\n".join(lines) + "\n"
