"""
Módulo de formateo de números y tablas de resultados.

Este módulo proporciona funciones para escribir energías, velocidades y
normas de manera consistente en todos los CSV y mensajes: dígitos
significativos fijos, punto decimal y ninguna dependencia del locale.
"""

import math
from typing import Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from config.settings import IO_SETTINGS


def format_significant(value: Union[float, int, None], digits: int = IO_SETTINGS.SIGNIFICANT_DIGITS) -> str:
    """
    Formatea un número con dígitos significativos fijos.

    Args:
        value: Valor numérico a formatear
        digits: Dígitos significativos (default: 12)

    Returns:
        String sin separadores de miles; 'nan', 'inf' o '-inf' para no finitos

    Examples:
        >>> format_significant(1.0 / 3.0)
        '0.333333333333'
        >>> format_significant(0.5, digits=3)
        '0.5'
        >>> format_significant(float('nan'))
        'nan'
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))

    numeric_value = float(value)
    if math.isnan(numeric_value):
        return "nan"
    if math.isinf(numeric_value):
        return "inf" if numeric_value > 0 else "-inf"
    return f"{numeric_value:.{digits}g}"


def format_complex(value: complex, digits: int = 6) -> str:
    """
    Formatea una energía compleja como ``re+imj``.

    Examples:
        >>> format_complex(1 + 0.01j)
        '1+0.01j'
    """
    value = complex(value)
    return f"{format_significant(value.real, digits)}{value.imag:+.{digits}g}j"


def format_dataframe_significant(df: pd.DataFrame,
                                 columns: Optional[Iterable[str]] = None,
                                 digits: int = IO_SETTINGS.SIGNIFICANT_DIGITS) -> pd.DataFrame:
    """
    Formatea columnas de punto flotante de un DataFrame.

    Args:
        df: DataFrame a formatear
        columns: Columnas a formatear (por defecto todas las de tipo float)
        digits: Dígitos significativos

    Returns:
        DataFrame con las columnas formateadas como texto
    """
    df_formatted = df.copy()
    if columns is None:
        columns = [name for name in df.columns if pd.api.types.is_float_dtype(df[name])]

    for col in columns:
        if col in df_formatted.columns:
            df_formatted[col] = df_formatted[col].apply(lambda value: format_significant(value, digits))

    return df_formatted


def format_seconds(seconds: float) -> str:
    """
    Formatea una duración de pared.

    Examples:
        >>> format_seconds(0.25)
        '0.25 s'
        >>> format_seconds(125.0)
        '2 min 5.0 s'
    """
    if seconds < 60.0:
        return f"{seconds:.2f} s"
    minutes, rest = divmod(seconds, 60.0)
    return f"{int(minutes)} min {rest:.1f} s"


def format_verdict(passed: bool) -> str:
    """Etiqueta de una propiedad de aceptación."""
    return "PASS" if passed else "FAIL"


def format_property_lines(properties: dict) -> List[str]:
    """
    Líneas de resumen ``propiedad: PASS/FAIL`` ordenadas por nombre.

    Examples:
        >>> format_property_lines({'wegner_bound': True})
        ['wegner_bound: PASS']
    """
    return [f"{name}: {format_verdict(passed)}" for name, passed in sorted(properties.items())]
