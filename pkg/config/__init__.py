"""
Módulo de configuración del laboratorio de estados de borde.

Este paquete contiene todas las configuraciones y constantes
utilizadas por los solvers y las campañas.
"""

__version__ = "1.0.0"
