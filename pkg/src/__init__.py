"""
Módulo src del laboratorio numérico de estados de borde.

Este paquete contiene la geometría del cilindro, el ensamblado de
operadores, los solvers espectrales, los observables y las campañas.
"""

__version__ = "1.0.0"
