"""
Módulo de validación de configuraciones del laboratorio.

Este módulo reúne todas las comprobaciones de una configuración antes de
lanzar una campaña, de modo que ``validate-config`` liste todos los problemas
de una vez: errores que impiden ejecutar y advertencias que debilitan las
propiedades de aceptación.
"""

from typing import Dict, Mapping, Optional, Tuple

from loguru import logger

from .config_parser import ConfigParser
from .errors import ConfigError
from .models import RunConfig, ValidationResult
from config.settings import ERROR_MESSAGES, EXPERIMENT_SETTINGS, INFO_MESSAGES, PHYSICS_DEFAULTS


# Debajo de estos valores las campañas pierden poder estadístico
MIN_SEEDS = 20
MIN_ENSEMBLE = 100
MIN_SIZES = 3


class ConfigValidator:
    """
    Validador de configuraciones de ejecución.

    Los errores de sintaxis, claves desconocidas y valores fuera de rango se
    reportan como errores; las elecciones válidas pero débiles (pocos tamaños,
    ensambles chicos, paredes simétricas sin flujo) como advertencias.
    """

    def __init__(self, parser: Optional[ConfigParser] = None):
        """Inicializa el validador con el parser de configuración."""
        self.parser = parser or ConfigParser()
        self.min_strip_width = PHYSICS_DEFAULTS.MIN_STRIP_WIDTH

    def validate(
        self,
        path=None,
        flags: Optional[Dict[str, object]] = None,
        environ: Optional[Mapping[str, str]] = None,
    ) -> Tuple[ValidationResult, Optional[RunConfig]]:
        """
        Valida un archivo de configuración con sus sobrescrituras.

        Args:
            path: Archivo de configuración (opcional)
            flags: Sobrescrituras de línea de comandos
            environ: Entorno para las sobrescrituras

        Returns:
            Tuple[ValidationResult, Optional[RunConfig]]: Resultado y configuración
            efectiva (None si no pudo construirse)
        """
        result = ValidationResult(
            is_valid=True,
            errors=[],
            warnings=[]
        )

        problems = []
        try:
            file_values = self.parser.parse_file(path, problems) if path else {}
        except ConfigError as exc:
            result.add_error(str(exc))
            return result, None

        for problem in problems:
            result.add_error(problem)
        if not result.is_valid:
            return result, None

        try:
            config = self.parser.build(file_values, flags, environ)
        except ConfigError as exc:
            result.add_error(str(exc))
            return result, None

        checked = self.validate_config(config)
        checked.errors[:0] = result.errors
        checked.warnings[:0] = result.warnings
        checked.is_valid = checked.is_valid and result.is_valid
        if checked.is_valid:
            logger.info(INFO_MESSAGES['config_valid'])
        return checked, config

    def validate_config(self, config: RunConfig) -> ValidationResult:
        """
        Comprobaciones semánticas sobre una configuración ya construida.

        Args:
            config: Configuración validada por pydantic

        Returns:
            ValidationResult: Errores y advertencias
        """
        result = ValidationResult(
            is_valid=True,
            errors=[],
            warnings=[]
        )

        self._validate_geometry(config, result)
        self._validate_sizes(config, result)
        self._validate_strip_widths(config, result)
        self._validate_energies(config, result)
        self._validate_statistics(config, result)

        for warning in result.warnings:
            logger.warning(warning)
        return result

    def _cutoffs_fit(self, L: int, D: int) -> bool:
        """Las transiciones de corte caben en la muestra."""
        return 1.5 * D + 2.0 < L

    def _validate_geometry(self, config: RunConfig, result: ValidationResult) -> None:
        model = config.model
        if not self._cutoffs_fit(model.L, model.D):
            result.add_error(ERROR_MESSAGES['cutoff_overlap'].format(model.D, model.L))

        if model.wall_left == model.wall_right and model.flux == 0.0:
            result.add_warning(
                "Paredes simétricas sin flujo: los espectros izquierdo y derecho coinciden "
                "y el margen de no degeneración será nulo")

        if model.V0 == 0.0:
            result.add_warning("V0 = 0: se ejecuta el límite sin desorden")

    def _validate_sizes(self, config: RunConfig, result: ValidationResult) -> None:
        sizes = config.experiments.L_list
        if len(sizes) < MIN_SIZES:
            result.add_warning(
                f"Sólo {len(sizes)} tamaños en L_list: los ajustes de decaimiento necesitan {MIN_SIZES}")
        if len(set(sizes)) != len(sizes):
            result.add_error(f"L_list contiene tamaños repetidos: {list(sizes)}")
        if config.model.L not in sizes:
            result.add_warning(f"model.L = {config.model.L} no está en L_list {list(sizes)}")

        for L in sizes:
            try:
                sized = config.model.with_updates(L=L, grid=None)
            except ValueError as exc:
                result.add_error(f"L = {L} no admite una configuración válida: {exc}")
                continue
            if not self._cutoffs_fit(L, sized.D):
                result.add_error(ERROR_MESSAGES['cutoff_overlap'].format(sized.D, L))

    def _validate_strip_widths(self, config: RunConfig, result: ValidationResult) -> None:
        L = config.model.L
        for width in config.experiments.strip_widths:
            if width < self.min_strip_width:
                result.add_error(
                    f"Ancho de franja {width} menor que el mínimo {self.min_strip_width}")
            elif not self._cutoffs_fit(L, width):
                result.add_error(ERROR_MESSAGES['cutoff_overlap'].format(width, L))

    def _validate_energies(self, config: RunConfig, result: ValidationResult) -> None:
        model = config.model
        lo, hi = model.gap_window
        for z in config.experiments.z_list:
            energy = z * model.B
            if not lo < energy < hi:
                result.add_warning(
                    f"Re z = {energy:g} fuera de Δ_ε = ({lo:g}, {hi:g}); el barrido lo omitirá")
        if abs(config.experiments.z_imag) > 1.0:
            result.add_warning(f"|Im z| = {abs(config.experiments.z_imag):g} > 1")

        if any(delta_bar >= model.delta for delta_bar in config.experiments.delta_bars):
            result.add_error(
                f"Todos los δ̄ deben ser menores que δ = {model.delta}: {list(config.experiments.delta_bars)}")

    def _validate_statistics(self, config: RunConfig, result: ValidationResult) -> None:
        experiments = config.experiments
        if experiments.seeds < MIN_SEEDS:
            result.add_warning(
                f"{experiments.seeds} realizaciones: la dicotomía de signos se verifica con al menos {MIN_SEEDS}")
        if experiments.ensemble_size < MIN_ENSEMBLE:
            result.add_warning(
                f"Ensamble de Wegner de {experiments.ensemble_size}: el intervalo de Wilson será ancho")
        factor = EXPERIMENT_SETTINGS.MATCH_TOLERANCE_FACTOR
        if factor * config.solver.tol_eig > experiments.match_tolerance:
            result.add_warning(
                f"match_tolerance = {experiments.match_tolerance:g} es menor que {factor:g}·tol_eig")
