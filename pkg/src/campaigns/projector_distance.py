"""
Campaña de distancia entre proyectores espectrales.

Para cada par emparejado (𝓔 ∈ σ(H_ω), E ∈ σ(H_α)) se construyen los
proyectores de ambos operadores sobre el disco centrado en E, se mide
‖P − P_α‖ por ángulos principales y se verifica la transferencia de
velocidad |J_𝓔 − J_E| ≤ 4(3B + 2V0)^{1/2}‖P − P_α‖.
"""

from typing import Dict, List, Optional, Sequence

import pandas as pd
from loguru import logger

from .base_campaign import BaseCampaign, fit_row, property_rows, sqrt_sizes
from .edge_report import EdgeSolution, solve_edge_realization
from src.eigensolver import projector_defect, spectral_projector, subspace_distance
from src.errors import DegeneracyError, InputError
from src.fitting import MIN_POINTS, fit_decay
from src.models import CampaignOutcome, DecayFit, RunConfig
from src.observables import velocity_transfer_bound


# Radio mínimo del disco en múltiplos de la tolerancia de degeneración
RADIUS_FLOOR_FACTOR = 10.0

# Tope de ‖P² − P‖ sobre los autovectores del solver
IDEMPOTENCE_TOL = 1e-10

PAIR_COLUMNS = ['L', 'seed', 'side', 'E_full', 'E_single', 'displacement', 'radius', 'distance',
                'rank_full', 'rank_single', 'defect', 'J_full', 'J_single', 'velocity_displacement',
                'transfer_bound', 'transfer_holds']


class ProjectorCampaign(BaseCampaign):
    """Distancias ‖P − P_α‖ sobre L_list × semillas."""

    name = "projector"
    log_plots = True

    def __init__(self, config: RunConfig, n_jobs: int = 1, L_list: Optional[Sequence[int]] = None,
                 seeds: Optional[Sequence[int]] = None):
        super().__init__(config, n_jobs)
        self.L_list = sorted(int(L) for L in (L_list or self.experiments.L_list))
        self.seeds = list(seeds) if seeds is not None else self.experiments.seed_list()
        self.fit: Optional[DecayFit] = None

    def build_tasks(self) -> List[Dict]:
        return [{'key': f"L{L}_seed{seed}", 'L': L, 'seed': seed, 'cfg': self.model_for(L)}
                for L in self.L_list for seed in self.seeds]

    def run_task(self, task: Dict) -> pd.DataFrame:
        solution = solve_edge_realization(task['cfg'], task['seed'], self.solver, self.experiments)
        return self._pair_rows(solution)

    def _pair_rows(self, solution: EdgeSolution) -> pd.DataFrame:
        cfg = solution.cfg
        floor = self.experiments.floor
        rows = []
        for i, side, j, displacement in solution.pairs:
            center = solution.single_spectra[side].pairs[j].E
            radius = max(2.0 * displacement, RADIUS_FLOOR_FACTOR * self.solver.degeneracy_tol)
            try:
                frame_full = spectral_projector(solution.full, [center], radius, spectrum=solution.spectrum)
                frame_single = spectral_projector(solution.singles[side], [center], radius,
                                                  spectrum=solution.single_spectra[side])
            except (DegeneracyError, InputError) as exc:
                logger.warning(f"Par excluido en L={cfg.L}, semilla {solution.seed}, E={center:.8f}: {exc}")
                continue

            distance = subspace_distance(frame_full, frame_single)
            velocity_displacement = abs(solution.observables[i].J - solution.single_observables[side][j].J)
            bound = velocity_transfer_bound(frame_full, frame_single, cfg)
            rows.append({
                'L': cfg.L,
                'seed': solution.seed,
                'side': side.value,
                'E_full': solution.observables[i].E,
                'E_single': center,
                'displacement': displacement,
                'radius': radius,
                'distance': distance,
                'rank_full': frame_full.rank,
                'rank_single': frame_single.rank,
                'defect': max(projector_defect(frame_full), projector_defect(frame_single)),
                'J_full': solution.observables[i].J,
                'J_single': solution.single_observables[side][j].J,
                'velocity_displacement': velocity_displacement,
                'transfer_bound': bound,
                'transfer_holds': velocity_displacement <= bound + floor,
            })
        return pd.DataFrame(rows, columns=PAIR_COLUMNS)

    def reduce(self, completed: List, outcome: CampaignOutcome) -> pd.DataFrame:
        frames = []
        for task, table in completed:
            outcome.tables[task['key']] = table
            frames.append(table)
        pairs = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=PAIR_COLUMNS)

        per_size = pairs.groupby('L').agg(max_distance=('distance', 'max'),
                                          pairs=('distance', 'size')).reset_index()
        per_size['sqrt_L'] = sqrt_sizes(per_size['L'])
        outcome.tables['per_size'] = per_size

        if len(per_size) >= MIN_POINTS:
            self.fit = fit_decay(per_size['sqrt_L'], per_size['max_distance'],
                                 floor=self.experiments.floor, confidence=self.experiments.confidence)
        return pairs

    def evaluate(self, report: pd.DataFrame) -> Dict[str, bool]:
        if report.empty:
            return {}
        close = report[report['distance'] < 1.0]
        properties = {
            'projector_rank_equal': bool((close['rank_full'] == close['rank_single']).all()),
            'velocity_transfer_holds': bool(report['transfer_holds'].astype(bool).all()),
            'projector_idempotent': bool((report['defect'] <= IDEMPOTENCE_TOL).all()),
        }
        if self.fit is not None:
            properties['projector_decay'] = self.fit.passed
        return properties

    def plot_tables(self, outcome: CampaignOutcome) -> Dict[str, pd.DataFrame]:
        per_size = outcome.tables.get('per_size')
        if per_size is None or per_size.empty:
            return {}
        return {'projector_distance_vs_sqrtL': per_size[['sqrt_L', 'max_distance']]}

    def summary_rows(self, outcome: CampaignOutcome) -> List[Dict]:
        return [fit_row('projector_max_distance', self.fit)] + property_rows(outcome)


def run_projector_distance(config: RunConfig, seeds: Optional[Sequence[int]] = None,
                           L_list: Optional[Sequence[int]] = None, n_jobs: int = 1) -> CampaignOutcome:
    """Ajusta log‖P − P_α‖ contra √L sobre los pares emparejados."""
    return ProjectorCampaign(config, n_jobs, L_list=L_list, seeds=seeds).run()
