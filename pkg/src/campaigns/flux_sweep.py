"""
Campaña de barrido de flujo.

Con paredes simétricas los espectros izquierdo y derecho coinciden en Φ = 0;
el flujo axial los separa. Para cada Φ se tabulan las distancias entre ramas
izquierda y derecha dentro de Δ_ε: emparejamiento (m, −m), emparejamiento
desplazado (m, −m − 1) y la distancia mínima entre conjuntos, todas por L.
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from .base_campaign import BaseCampaign
from src.eigensolver import default_branch_range, solve_branch
from src.errors import PreconditionError
from src.geometry import build_grid
from src.models import CampaignOutcome, FluxSweepReport, Grid, ModelConfig, RunConfig, Side, SolverOptions


# Tolerancia de coincidencia de ramas en Φ = 0 y Φ = 2π
COINCIDENCE_TOL = 1e-8

# Factor mínimo de apertura del gap en Φ = π/2 respecto de Φ = 0
LIFTING_FACTOR = 10.0


def wall_branches(
    cfg: ModelConfig,
    flux: Optional[float] = None,
    solver: Optional[SolverOptions] = None,
    grid: Optional[Grid] = None,
) -> Dict[Side, object]:
    """Ramas ε_0 de ambas paredes sobre sus rangos de m por defecto."""
    flux = cfg.flux if flux is None else float(flux)
    grid = grid if grid is not None else build_grid(cfg)
    return {
        side: solve_branch(side, 0, default_branch_range(cfg, side, flux), cfg,
                           flux=flux, solver=solver, grid=grid)
        for side in (Side.LEFT, Side.RIGHT)
    }


def branch_gaps(branches: Dict[Side, object], window) -> Dict[str, float]:
    """
    Distancias entre ramas izquierda y derecha dentro de una ventana.

    Returns:
        Dict[str, float]: 'same_gap' (pares (m, −m)), 'shifted_gap'
        (pares (m, −m − 1)) y 'min_gap' (distancia entre conjuntos); NaN
        cuando no hay pares e infinito si algún lado no tiene puntos
    """
    left, right = branches[Side.LEFT], branches[Side.RIGHT]
    left_mask, right_mask = left.within(window), right.within(window)
    left_map = dict(zip(left.m[left_mask].tolist(), left.energies[left_mask]))
    right_map = dict(zip(right.m[right_mask].tolist(), right.energies[right_mask]))

    same = [abs(energy - right_map[-m]) for m, energy in left_map.items() if -m in right_map]
    shifted = [abs(energy - right_map[-m - 1]) for m, energy in left_map.items() if -m - 1 in right_map]

    if left_map and right_map:
        min_gap = float(np.min(np.abs(np.subtract.outer(
            np.fromiter(left_map.values(), dtype=float),
            np.fromiter(right_map.values(), dtype=float)))))
    else:
        min_gap = float('inf')

    return {
        'same_gap': float(min(same)) if same else float('nan'),
        'shifted_gap': float(min(shifted)) if shifted else float('nan'),
        'min_gap': min_gap,
    }


class FluxSweepCampaign(BaseCampaign):
    """Barrido de Φ ∈ [0, 2π] con paredes simétricas."""

    name = "flux-sweep"

    def __init__(self, config: RunConfig, n_jobs: int = 1,
                 flux_list: Optional[Sequence[float]] = None, symmetrize: bool = True):
        """
        Args:
            config: Configuración efectiva
            n_jobs: Máximo de procesos
            flux_list: Valores de Φ (por defecto ``flux_points`` puntos en [0, 2π])
            symmetrize: Copiar la pared izquierda a la derecha si difieren

        Raises:
            PreconditionError: Si las paredes difieren y no se permite simetrizar
        """
        super().__init__(config, n_jobs)
        if self.model.wall_left != self.model.wall_right:
            if not symmetrize:
                raise PreconditionError(
                    "El barrido de flujo requiere paredes simétricas (c_l, m_l) = (c_r, m_r)")
            logger.info("Simetrizando paredes para el barrido de flujo: pared derecha = pared izquierda")
            self.model = self.model.with_updates(wall_right=self.model.wall_left.model_dump())

        if flux_list is None:
            flux_list = np.linspace(0.0, 2.0 * math.pi, self.experiments.flux_points)
        self.flux_list = [float(phi) for phi in flux_list]
        self._energies: Dict[float, np.ndarray] = {}
        if any(phi < 0.0 or phi > 2.0 * math.pi + 1e-12 for phi in self.flux_list):
            raise PreconditionError(f"Los flujos deben estar en [0, 2π]: {self.flux_list}")

    def build_tasks(self) -> List[Dict]:
        return [{'key': f"phi{index:03d}", 'index': index, 'phi': phi, 'L': self.model.L}
                for index, phi in enumerate(self.flux_list)]

    def run_task(self, task: Dict) -> Dict:
        branches = wall_branches(self.model, task['phi'], self.solver)
        gaps = branch_gaps(branches, self.model.gap_window)
        left = branches[Side.LEFT]
        return {
            'phi': task['phi'],
            **gaps,
            'left_energies': np.sort(left.energies[left.within(self.model.gap_window)]),
        }

    def reduce(self, completed: List, outcome: CampaignOutcome) -> FluxSweepReport:
        L = self.model.L
        rows = [{
            'phi': result['phi'],
            'L_same_gap': L * result['same_gap'],
            'L_shifted_gap': L * result['shifted_gap'],
            'L_min_gap': L * result['min_gap'],
        } for _, result in completed]
        table = pd.DataFrame(rows, columns=['phi', 'L_same_gap', 'L_shifted_gap', 'L_min_gap'])
        self._energies = {result['phi']: result['left_energies'] for _, result in completed}

        finite = table[np.isfinite(table['L_min_gap'])]
        phi_star = float(finite.loc[finite['L_min_gap'].idxmax(), 'phi']) if len(finite) else float('nan')
        outcome.tables[f"L{L}"] = table
        logger.info(f"Barrido de flujo: Φ* = {phi_star:.4f}")
        return FluxSweepReport(table=table, phi_star=phi_star, L=L)

    def evaluate(self, report: FluxSweepReport) -> Dict[str, bool]:
        properties: Dict[str, bool] = {}
        table = report.table
        if table.empty:
            return properties

        at_zero = table[np.isclose(table['phi'], 0.0)]
        if len(at_zero):
            properties['flux_zero_coincidence'] = bool(
                at_zero['L_same_gap'].iloc[0] <= report.L * COINCIDENCE_TOL)

            quarter = table.iloc[int(np.argmin(np.abs(table['phi'] - 0.5 * math.pi)))]
            if not math.isclose(quarter['phi'], 0.0):
                properties['flux_lifting'] = bool(
                    quarter['L_min_gap'] > LIFTING_FACTOR * at_zero['L_min_gap'].iloc[0])

        full_turn = [phi for phi in self._energies if math.isclose(phi, 2.0 * math.pi)]
        zero = [phi for phi in self._energies if math.isclose(phi, 0.0, abs_tol=1e-15)]
        if full_turn and zero:
            a, b = self._energies[zero[0]], self._energies[full_turn[0]]
            properties['flux_periodicity'] = bool(
                a.shape == b.shape and (a.size == 0 or np.max(np.abs(a - b)) <= COINCIDENCE_TOL))
        return properties

    def plot_tables(self, outcome: CampaignOutcome) -> Dict[str, pd.DataFrame]:
        return {'gap_vs_flux': outcome.report.table}

    def summary_rows(self, outcome: CampaignOutcome) -> List[Dict]:
        rows = super().summary_rows(outcome)
        rows.append({'quantity': 'phi_star', 'value': outcome.report.phi_star})
        return rows


def run_flux_sweep(config: RunConfig, flux_list: Optional[Sequence[float]] = None,
                   n_jobs: int = 1, symmetrize: bool = True) -> CampaignOutcome:
    """Ejecuta el barrido de flujo y devuelve la tabla de gaps."""
    return FluxSweepCampaign(config, n_jobs, flux_list=flux_list, symmetrize=symmetrize).run()
