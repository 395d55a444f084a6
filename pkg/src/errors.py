"""
Jerarquía de errores del laboratorio.

Cada error se construye con un mensaje de ``config.settings.ERROR_MESSAGES``
para que la CLI y los registros usen textos consistentes.
"""


class EdgeLabError(Exception):
    """Error base del laboratorio."""


class ConfigError(EdgeLabError, ValueError):
    """Configuración inválida o incompleta."""


class InputError(EdgeLabError, ValueError):
    """Argumentos inválidos para una operación."""


class GeometryError(EdgeLabError):
    """Regiones o cortes degenerados para el tamaño dado."""


class SolverError(EdgeLabError):
    """Falla de factorización o de convergencia."""


class IncompleteSpectrumError(SolverError):
    """El conteo por inercia no coincide con los autovalores encontrados."""


class SingularResolventError(EdgeLabError):
    """z demasiado cerca del espectro para invertir z − H."""


class DegeneracyError(EdgeLabError):
    """El conjunto de energías no está aislado del resto del espectro."""


class HypothesisViolationError(EdgeLabError):
    """Espectros izquierdo y derecho demasiado cercanos para emparejar."""


class PreconditionError(EdgeLabError):
    """Precondición de una campaña no satisfecha."""


class ExportError(EdgeLabError):
    """No se pudieron escribir los resultados."""
