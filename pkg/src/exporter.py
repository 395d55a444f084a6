"""
Módulo de exportación de resultados de las campañas.

Este módulo escribe las tablas por tarea (``<outdir>/<comando>/<tarea>.csv``),
el resumen de tasas ajustadas (``<outdir>/summary.csv``), las tablas para
graficar, las figuras HTML opcionales y el manifiesto ``manifest.json`` con
el inventario de archivos y sus huellas SHA-256.
"""

import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd
import plotly.graph_objects as go
from loguru import logger

from . import __version__
from .errors import ExportError
from .formatters import format_dataframe_significant
from .models import RunConfig, RunManifest
from config.settings import ERROR_MESSAGES, INFO_MESSAGES


# Paleta de las series en las figuras
SERIES_COLORS = ['#2E86AB', '#A23B72', '#F18F01', '#3B1F2B', '#44AF69', '#C73E1D']


def file_digest(path) -> str:
    """Huella SHA-256 del contenido de un archivo."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def task_key(**parts) -> str:
    """
    Clave de tarea estable para nombres de archivo.

    Examples:
        >>> task_key(L=16, seed=7)
        'L16_seed7'
    """
    return "_".join(f"{name}{value}" for name, value in parts.items())


class ResultExporter:
    """
    Exportador de los resultados de un subcomando.

    Attributes:
        outdir: Directorio raíz de salida
        command: Subcomando en ejecución
        manifest: Manifiesto que se completa al escribir cada archivo
    """

    def __init__(self, config: RunConfig, command: str, parameters: Optional[Dict] = None):
        """
        Inicializa el exportador y crea los directorios de salida.

        Args:
            config: Configuración efectiva
            command: Nombre del subcomando
            parameters: Parámetros específicos del subcomando
        """
        self.config = config
        self.command = command
        self.outdir = Path(config.io.outdir)
        self.digits = config.io.significant_digits
        self.plot_data = config.io.plot_data
        self.figures = config.io.figures
        self.summary_rows: List[Dict] = []
        self.manifest = RunManifest(
            config_hash=config.config_hash(),
            master_seed=config.experiments.master_seed,
            version=__version__,
            command=command,
            parameters=dict(parameters or {}),
            config=config.model_dump(mode="json"),
        )

        try:
            (self.outdir / command).mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"No se pudo crear {self.outdir / command}: {e}")
            raise ExportError(ERROR_MESSAGES['export_error'].format(e)) from e

    def register(self, path: Path) -> None:
        """Agrega un archivo escrito al inventario del manifiesto."""
        relative = path.relative_to(self.outdir).as_posix()
        self.manifest.files[relative] = file_digest(path)

    def _write_csv(self, df: pd.DataFrame, path: Path) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            format_dataframe_significant(df, digits=self.digits).to_csv(path, index=False, lineterminator="\n")
        except OSError as e:
            logger.error(f"Error al escribir {path}: {e}")
            raise ExportError(ERROR_MESSAGES['export_error'].format(e)) from e
        self.register(path)
        logger.debug(f"Tabla escrita: {path} ({len(df)} filas)")
        return path

    def write_table(self, key: str, df: pd.DataFrame) -> Path:
        """
        Escribe la tabla de una tarea en ``<outdir>/<comando>/<key>.csv``.

        Args:
            key: Clave de la tarea (ver ``task_key``)
            df: Tabla a escribir

        Returns:
            Path: Ruta del archivo escrito
        """
        return self._write_csv(df, self.outdir / self.command / f"{key}.csv")

    def write_plot_data(self, name: str, df: pd.DataFrame, title: Optional[str] = None,
                        log_y: bool = False) -> Optional[Path]:
        """
        Escribe una tabla para graficar (primera columna = eje x, una serie por columna).

        No hace nada si ``io.plot_data`` está desactivado. Con ``io.figures``
        se escribe además la figura HTML correspondiente.
        """
        if not self.plot_data:
            return None
        path = self._write_csv(df, self.outdir / self.command / "plot_data" / f"{name}.csv")
        if self.figures:
            self.write_figure(name, df, title or name, log_y=log_y)
        return path

    def write_figure(self, name: str, df: pd.DataFrame, title: str,
                     log_y: bool = False) -> Path:
        """Figura HTML estática con una traza por columna de la tabla."""
        x_column = df.columns[0]
        fig = go.Figure()

        for index, column in enumerate(df.columns[1:]):
            color = SERIES_COLORS[index % len(SERIES_COLORS)]
            fig.add_trace(go.Scatter(
                x=df[x_column],
                y=df[column],
                mode='lines+markers',
                name=str(column),
                line=dict(color=color, width=2),
                marker=dict(size=6, color=color)
            ))

        fig.update_layout(
            title=title,
            xaxis_title=str(x_column),
            yaxis_type='log' if log_y else 'linear',
            hovermode='x unified',
            legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1),
        )

        path = self.outdir / self.command / "figures" / f"{name}.html"
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.write_html(str(path), include_plotlyjs="cdn", full_html=True)
        except OSError as e:
            logger.error(f"Error al escribir la figura {path}: {e}")
            raise ExportError(ERROR_MESSAGES['export_error'].format(e)) from e
        self.register(path)
        return path

    def add_summary(self, rows: Sequence[Dict]) -> None:
        """Agrega filas de tasas ajustadas y propiedades al resumen."""
        for row in rows:
            self.summary_rows.append({'command': self.command, **row})

    def record_timing(self, stage: str, seconds: float) -> None:
        self.manifest.timings[stage] = float(seconds)

    def write_summary(self) -> Path:
        """
        Escribe ``<outdir>/summary.csv``.

        Las filas de otros subcomandos ya presentes en el archivo se conservan;
        las del subcomando actual se reemplazan.
        """
        path = self.outdir / "summary.csv"
        current = pd.DataFrame(self.summary_rows)
        if path.is_file():
            previous = pd.read_csv(path, dtype=str, keep_default_na=False)
            if 'command' in previous.columns:
                previous = previous[previous['command'] != self.command]
            current = format_dataframe_significant(current, digits=self.digits).astype(str)
            current = pd.concat([previous, current], ignore_index=True).fillna("")
        return self._write_csv(current, path)

    def finalize(self) -> Path:
        """
        Escribe el resumen y el manifiesto de la ejecución.

        Returns:
            Path: Ruta de ``manifest.json``
        """
        self.write_summary()
        path = self.outdir / "manifest.json"
        try:
            payload = json.dumps(asdict(self.manifest), indent=2, sort_keys=True, default=str)
            path.write_text(payload + "\n", encoding="utf-8")
        except (OSError, TypeError) as e:
            logger.error(f"Error al escribir el manifiesto: {e}")
            raise ExportError(ERROR_MESSAGES['export_error'].format(e)) from e

        logger.info(INFO_MESSAGES['export_success'].format(self.outdir))
        return path
