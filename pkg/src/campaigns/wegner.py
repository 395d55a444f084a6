"""
Campaña de Monte Carlo de la estimación de Wegner.

Para N realizaciones independientes de V_ω^α se mide la distancia de E al
espectro físico de H_α y se compara la frecuencia empírica de
dist(σ(H_α), E) < δ̄ con la cota ‖h‖∞ δ̄ (|E − E_{0,m̄}| − δ̄)⁻² V0² L⁴.
"""

from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from .base_campaign import BaseCampaign, property_rows
from src.disorder import density_sup, sample_disorder
from src.eigensolver import default_branch_range, solve_branch, solve_window
from src.errors import InputError, PreconditionError
from src.fitting import wilson_interval
from src.geometry import build_grid, build_regions
from src.models import (
    CampaignOutcome,
    ModelConfig,
    OperatorTag,
    OperatorVariant,
    RunConfig,
    Side,
    SpectralBranch,
    WegnerReport,
)
from src.operators import assemble
from config.settings import ERROR_MESSAGES


REGION_BY_SIDE = {Side.LEFT: 'Lambda_l', Side.RIGHT: 'Lambda_r'}
TAG_BY_SIDE = {Side.LEFT: OperatorTag.LEFT, Side.RIGHT: OperatorTag.RIGHT}

# Semiancho de la ventana de búsqueda en múltiplos del mayor δ̄
SEARCH_FACTOR = 4.0


def default_wegner_energy(branch: SpectralBranch, cfg: ModelConfig) -> float:
    """
    Punto medio entre los dos autovalores de rama que encierran B.

    Raises:
        PreconditionError: Si la rama no cruza B dentro de Δ
    """
    energies = np.sort(branch.energies)
    below = energies[energies < cfg.B]
    above = energies[energies > cfg.B]
    if below.size == 0 or above.size == 0:
        raise PreconditionError(f"La rama ε_0 no encierra E = B = {cfg.B}")
    energy = 0.5 * (below[-1] + above[0])
    lo, hi = cfg.window
    if not lo < energy < hi:
        raise PreconditionError(f"E = {energy:.6f} fuera de Δ = ({lo}, {hi})")
    return float(energy)


def wegner_bound(E: float, delta_bar: float, branch: SpectralBranch, cfg: ModelConfig) -> float:
    """
    ‖h‖∞ δ̄ dist(I, E_{0,m̄})⁻² V0² L⁴ con I = [E − δ̄, E + δ̄].

    Raises:
        PreconditionError: Si I contiene un autovalor de la rama
    """
    distances = np.abs(branch.energies - E)
    index = int(np.argmin(distances))
    gap = float(distances[index]) - delta_bar
    if gap <= 0.0:
        raise PreconditionError(ERROR_MESSAGES['branch_hit'].format(
            E - delta_bar, E + delta_bar, branch.energies[index]))
    return density_sup(cfg.density) * delta_bar * gap ** -2.0 * cfg.V0 ** 2 * cfg.L ** 4


class WegnerCampaign(BaseCampaign):
    """Ensamble de realizaciones de una pared con desorden."""

    name = "wegner"

    def __init__(self, config: RunConfig, n_jobs: int = 1, E: Optional[float] = None,
                 delta_bars: Optional[Sequence[float]] = None, N: Optional[int] = None, side="l"):
        """
        Args:
            config: Configuración efectiva
            n_jobs: Máximo de procesos
            E: Energía objetivo (por defecto el punto medio de rama alrededor de B)
            delta_bars: Semianchos δ̄
            N: Tamaño del ensamble
            side: Lado de la pared
        """
        super().__init__(config, n_jobs)
        self.side = Side.parse(side)
        self.delta_bars = sorted(float(value) for value in (delta_bars or self.experiments.delta_bars))
        self.N = int(N or self.experiments.ensemble_size)
        if self.N < 1 or not self.delta_bars or min(self.delta_bars) <= 0.0:
            raise InputError(f"Ensamble N={self.N} o δ̄={self.delta_bars} inválidos")

        self.branch = solve_branch(self.side, 0, default_branch_range(self.model, self.side),
                                   self.model, solver=self.solver)
        self.E = float(E) if E is not None else default_wegner_energy(self.branch, self.model)
        lo, hi = self.model.window
        if not lo < self.E < hi:
            raise PreconditionError(f"E = {self.E} fuera de Δ = ({lo}, {hi})")
        self.bounds = {delta_bar: wegner_bound(self.E, delta_bar, self.branch, self.model)
                       for delta_bar in self.delta_bars}
        self.radius = SEARCH_FACTOR * max(self.delta_bars)

    def build_tasks(self) -> List[Dict]:
        master = self.experiments.master_seed
        return [{'key': f"seed{master + index}", 'L': self.model.L, 'seed': master + index}
                for index in range(self.N)]

    def run_task(self, task: Dict) -> float:
        """Distancia de E al espectro físico de H_α (infinito si no hay autovalores cerca)."""
        cfg = self.model
        grid = build_grid(cfg)
        regions = build_regions(cfg)
        field = sample_disorder(cfg, regions[REGION_BY_SIDE[self.side]], task['seed'])
        op = assemble(OperatorVariant(TAG_BY_SIDE[self.side], with_flux=True), cfg, field, grid, regions)
        spectrum = solve_window(op, (self.E - self.radius, self.E + self.radius), solver=self.solver)
        if spectrum.count == 0:
            return float('inf')
        return float(np.min(np.abs(spectrum.energies - self.E)))

    def reduce(self, completed: List, outcome: CampaignOutcome) -> List[WegnerReport]:
        distances = np.array([distance for _, distance in completed], dtype=float)
        outcome.tables['distances'] = pd.DataFrame({
            'seed': [task['seed'] for task, _ in completed],
            'distance': distances,
        })

        reports = []
        for delta_bar in self.delta_bars:
            hits = int(np.count_nonzero(distances < delta_bar))
            trials = int(distances.size)
            reports.append(WegnerReport(
                E=self.E,
                delta_bar=delta_bar,
                N=trials,
                hits=hits,
                p_hat=hits / trials if trials else 0.0,
                interval=wilson_interval(hits, trials, self.experiments.confidence),
                bound=self.bounds[delta_bar],
                side=self.side,
            ))
            logger.info(f"Wegner δ̄={delta_bar:.1e}: p̂={reports[-1].p_hat:.4f}, cota={self.bounds[delta_bar]:.3e}")

        outcome.tables['report'] = pd.DataFrame([report.as_row() for report in reports])
        return reports

    def evaluate(self, report: List[WegnerReport]) -> Dict[str, bool]:
        return {f"wegner_bound_{item.delta_bar:g}": item.passed for item in report}

    def plot_tables(self, outcome: CampaignOutcome) -> Dict[str, pd.DataFrame]:
        frame = outcome.tables['report']
        return {'probability_vs_delta_bar': frame[['delta_bar', 'p_hat', 'p_hi', 'bound']]}

    def summary_rows(self, outcome: CampaignOutcome) -> List[Dict]:
        rows = [{'quantity': f"wegner_p_hat_{item.delta_bar:g}", 'value': item.p_hat,
                 'bound': item.bound, 'points': item.N} for item in outcome.report]
        return rows + property_rows(outcome)


def run_wegner(config: RunConfig, E: Optional[float] = None, delta_bars: Optional[Sequence[float]] = None,
               N: Optional[int] = None, side="l", n_jobs: int = 1) -> CampaignOutcome:
    """Ejecuta el ensamble de Wegner y compara p̂ con la cota."""
    return WegnerCampaign(config, n_jobs, E=E, delta_bars=delta_bars, N=N, side=side).run()
