"""
Módulo de ajustes estadísticos de las campañas.

Este módulo ajusta log(valor) contra una abscisa (√L o D) con intervalo de
confianza t de Student para la pendiente y veredicto consciente del piso
numérico, y calcula intervalos de Wilson para probabilidades empíricas.
"""

import math
from typing import Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import stats

from .errors import InputError
from .models import DecayFit
from config.settings import ERROR_MESSAGES, EXPERIMENT_SETTINGS


# Mínimo de tamaños para un ajuste
MIN_POINTS = 3


def fit_decay(
    abscissa: Sequence[float],
    values: Sequence[float],
    floor: float = EXPERIMENT_SETTINGS.FLOOR,
    confidence: float = EXPERIMENT_SETTINGS.CONFIDENCE,
) -> DecayFit:
    """
    Ajuste por mínimos cuadrados de log(max(valor, piso)) contra la abscisa.

    Veredictos:
        'decreasing': el extremo superior del intervalo de la pendiente es negativo
        'floor': menos de tres valores sobre el piso y el último en el piso
        'not-decreasing': cualquier otro caso

    Args:
        abscissa: Abscisas (√L o anchos D)
        values: Ordenadas sin logaritmo
        floor: Piso numérico
        confidence: Nivel de confianza del intervalo

    Returns:
        DecayFit: Pendiente, intervalo, residuos y veredicto

    Raises:
        InputError: Si hay menos de tres puntos o longitudes distintas
    """
    x = np.asarray(abscissa, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape:
        raise InputError(f"Abscisas ({x.size}) y valores ({y.size}) con longitudes distintas")
    if x.size < MIN_POINTS:
        raise InputError(ERROR_MESSAGES['too_few_points'].format(MIN_POINTS, x.size))

    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    clipped = np.maximum(y, floor)
    logs = np.log(clipped)

    regression = stats.linregress(x, logs)
    dof = x.size - 2
    t_value = stats.t.ppf(0.5 * (1.0 + confidence), dof) if dof > 0 else float('inf')
    half_width = t_value * regression.stderr
    interval = (regression.slope - half_width, regression.slope + half_width)
    residuals = logs - (regression.intercept + regression.slope * x)

    monotone = bool(np.all((np.diff(clipped) < 0) | (clipped[1:] <= floor)))
    above = int(np.count_nonzero(y > floor))
    if above < MIN_POINTS and clipped[-1] <= floor:
        verdict = "floor"
    elif interval[1] < 0:
        verdict = "decreasing"
    else:
        verdict = "not-decreasing"

    logger.debug(f"Ajuste de decaimiento: pendiente {regression.slope:.4f} "
                 f"[{interval[0]:.4f}, {interval[1]:.4f}], veredicto {verdict}")
    return DecayFit(
        abscissa=x,
        ordinates=y,
        slope=float(regression.slope),
        intercept=float(regression.intercept),
        residuals=residuals,
        slope_interval=(float(interval[0]), float(interval[1])),
        verdict=verdict,
        monotone=monotone,
        floor=float(floor),
    )


def wilson_interval(hits: int, trials: int, confidence: float = EXPERIMENT_SETTINGS.CONFIDENCE) -> Tuple[float, float]:
    """
    Intervalo de Wilson para una proporción binomial.

    Args:
        hits: Éxitos observados
        trials: Ensayos
        confidence: Nivel de confianza bilateral

    Returns:
        Tuple[float, float]: (inferior, superior) dentro de [0, 1]
    """
    if trials == 0:
        return (0.0, 1.0)
    z = stats.norm.ppf(0.5 * (1.0 + confidence))
    p_hat = hits / trials
    denominator = 1.0 + z * z / trials
    center = (p_hat + z * z / (2.0 * trials)) / denominator
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4.0 * trials * trials)) / denominator
    return (max(0.0, center - half), min(1.0, center + half))
