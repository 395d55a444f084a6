"""
Punto de entrada del laboratorio numérico de estados de borde.

Ejemplos:
    python app.py validate-config --config run.cfg --print-effective
    python app.py branches --side l --n 0
    python app.py --plot-data edge-report --L 16,25,36 --seeds 8
"""

import os
import sys

# Agregar la raíz del proyecto al path para importar src y config
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
