"""
Clase base para las campañas numéricas.
Contiene el flujo común: construir tareas, ejecutarlas en paralelo con orden
determinista, separar eventos excepcionales, reducir y evaluar propiedades.
"""

import math
import time
from typing import Any, Dict, List, Optional

import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from src.errors import (
    DegeneracyError,
    HypothesisViolationError,
    PreconditionError,
    SingularResolventError,
)
from src.exporter import ResultExporter
from src.models import CampaignOutcome, DecayFit, ExceptionalEvent, ModelConfig, RunConfig
from config.settings import INFO_MESSAGES


# Precondiciones cuya violación se cuenta como evento excepcional
EXCEPTIONAL_ERRORS = (
    HypothesisViolationError,
    PreconditionError,
    SingularResolventError,
    DegeneracyError,
)


def _execute(campaign: "BaseCampaign", task: Dict) -> Any:
    """Ejecuta una tarea y convierte las violaciones de precondición en eventos."""
    try:
        return campaign.run_task(task)
    except EXCEPTIONAL_ERRORS as exc:
        logger.warning(f"Evento excepcional en {campaign.name} {task.get('key')}: {exc}")
        return ExceptionalEvent(
            L=int(task.get('L', campaign.model.L)),
            seed=int(task.get('seed', -1)),
            reason=f"{type(exc).__name__}: {exc}",
        )


class BaseCampaign:
    """Clase base para ejecutar campañas de tareas independientes."""

    name = "campaign"

    # Ejes y logarítmicos en las figuras de decaimiento
    log_plots = False

    def __init__(self, config: RunConfig, n_jobs: int = 1):
        """
        Inicializa la campaña con la configuración efectiva.

        Args:
            config: Configuración completa de la ejecución
            n_jobs: Máximo de procesos de trabajo (joblib)
        """
        self.config = config
        self.model = config.model
        self.solver = config.solver
        self.experiments = config.experiments
        self.n_jobs = n_jobs
        self.exceptional: List[ExceptionalEvent] = []

    def model_for(self, L: int, **changes) -> ModelConfig:
        """
        Configuración del modelo para otro tamaño.

        La malla explícita y el ancho de franja explícito sólo valen para el
        tamaño configurado; en otros tamaños se derivan de L.
        """
        if L == self.model.L and not changes:
            return self.model
        updates = {'L': int(L)}
        if L != self.model.L:
            updates.update({'grid': None, 'strip_width': None})
        updates.update(changes)
        return self.model.with_updates(**updates)

    def record_exceptional(self, L: int, seed: int, reason: str) -> None:
        """Registra una realización excluida sin remuestrear."""
        logger.warning(f"Evento excepcional (L={L}, semilla={seed}): {reason}")
        self.exceptional.append(ExceptionalEvent(L=int(L), seed=int(seed), reason=reason))

    def run(self) -> CampaignOutcome:
        """
        Ejecuta la campaña completa.

        Returns:
            CampaignOutcome: Reporte, propiedades, eventos y tablas
        """
        start = time.perf_counter()
        self.exceptional = []

        # Paso 1: Construir tareas (ordenadas por clave)
        tasks = self.build_tasks()
        logger.info(INFO_MESSAGES['campaign_start'].format(self.name, len(tasks)))

        # Paso 2: Ejecutar tareas; joblib conserva el orden de entrada
        results = Parallel(n_jobs=self.n_jobs, prefer='processes')(
            delayed(_execute)(self, task) for task in tasks
        )

        # Paso 3: Separar eventos excepcionales
        completed = []
        for task, result in zip(tasks, results):
            if isinstance(result, ExceptionalEvent):
                self.exceptional.append(result)
            else:
                completed.append((task, result))

        # Paso 4: Reducir resultados en el reporte
        outcome = CampaignOutcome(name=self.name, report=None)
        outcome.report = self.reduce(completed, outcome)

        # Paso 5: Evaluar propiedades de aceptación
        outcome.properties = self.evaluate(outcome.report)
        outcome.exceptional = list(self.exceptional)
        outcome.elapsed = time.perf_counter() - start

        logger.info(INFO_MESSAGES['campaign_complete'].format(self.name, outcome.elapsed))
        if outcome.failed:
            logger.warning(f"Propiedades no cumplidas en {self.name}: {', '.join(outcome.failed)}")
        return outcome

    def build_tasks(self) -> List[Dict]:
        """
        Lista de tareas independientes con una clave 'key' estable.
        Debe ser implementado por las clases hijas.
        """
        raise NotImplementedError("Debe ser implementado por la clase hija")

    def run_task(self, task: Dict) -> Any:
        """
        Ejecuta una tarea; no modifica estado compartido.
        Debe ser implementado por las clases hijas.
        """
        raise NotImplementedError("Debe ser implementado por la clase hija")

    def reduce(self, completed: List, outcome: CampaignOutcome) -> Any:
        """
        Combina los resultados de las tareas en el reporte de la campaña.
        Debe ser implementado por las clases hijas.
        """
        raise NotImplementedError("Debe ser implementado por la clase hija")

    def evaluate(self, report: Any) -> Dict[str, bool]:
        """Propiedades de aceptación del reporte (ninguna por defecto)."""
        return {}

    def summary_rows(self, outcome: CampaignOutcome) -> List[Dict]:
        """Filas para summary.csv (por defecto sólo las propiedades)."""
        return property_rows(outcome)

    def plot_tables(self, outcome: CampaignOutcome) -> Dict[str, pd.DataFrame]:
        """Tablas para graficar, una serie por columna."""
        return {}

    def export(self, outcome: CampaignOutcome, exporter: ResultExporter, prefix: str = "") -> None:
        """
        Escribe tablas, datos de gráficas, eventos y resumen.

        Args:
            outcome: Resultado de ``run``
            exporter: Exportador del subcomando
            prefix: Subdirectorio para campañas secundarias del mismo subcomando
        """
        for key, table in outcome.tables.items():
            exporter.write_table(prefix + key, table)
        if outcome.exceptional:
            exporter.write_table(prefix + "exceptional", outcome.exceptional_frame())
        for name, table in self.plot_tables(outcome).items():
            exporter.write_plot_data(name, table, title=f"{self.name}: {name}", log_y=self.log_plots)
        exporter.add_summary(self.summary_rows(outcome))
        exporter.record_timing(self.name, outcome.elapsed)


def fit_row(name: str, fit: Optional[DecayFit]) -> Dict:
    """Fila de resumen de un ajuste (vacía si no hubo suficientes tamaños)."""
    if fit is None:
        return {'quantity': name, 'verdict': 'insufficient-data'}
    return {**fit.to_row(name), 'passed': fit.passed}


def property_rows(outcome: CampaignOutcome) -> List[Dict]:
    rows = [{'quantity': name, 'verdict': 'PASS' if passed else 'FAIL', 'passed': passed}
            for name, passed in sorted(outcome.properties.items())]
    if outcome.exceptional:
        rows.append({'quantity': 'exceptional_events', 'points': len(outcome.exceptional)})
    return rows


def sqrt_sizes(sizes) -> List[float]:
    """Abscisa común √L de todos los ajustes por tamaño."""
    return [math.sqrt(L) for L in sizes]
