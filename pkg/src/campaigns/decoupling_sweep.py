"""
Campañas de desacoplamiento geométrico.

``DecouplingCampaign`` mide ‖𝒦(z)‖ por iteración de potencias para cada
(z, L, semilla) y ajusta su decaimiento contra √L. ``SeparationCampaign``
fija L y barre el ancho de franja D para sondear cuánta separación entre
paredes basta; ese barrido se reporta sin afirmarse.
"""

from typing import Dict, List, Optional, Sequence

import pandas as pd
from loguru import logger

from .base_campaign import BaseCampaign, fit_row, property_rows, sqrt_sizes
from src.decoupling import assemble_kappa, build_cutoffs, operator_norm, resolvent_identity_residual
from src.disorder import sample_disorder
from src.errors import GeometryError, PreconditionError
from src.fitting import MIN_POINTS, fit_decay
from src.geometry import build_grid, build_regions
from src.models import CampaignOutcome, DecayFit, ModelConfig, OperatorTag, OperatorVariant, RunConfig
from src.operators import assemble


def campaign_energy(z_real: float, z_imag: float, cfg: ModelConfig) -> complex:
    """z en unidades de B: Re z = z_real·B, Im z = z_imag."""
    return complex(z_real * cfg.B, z_imag)


def kappa_norm(z: complex, cfg: ModelConfig, seed: int, solver, with_residual: bool = True) -> Dict:
    """
    ‖𝒦(z)‖ para una realización, con el residuo de la identidad del resolvente.

    Raises:
        PreconditionError: Si Re z está fuera de Δ_ε
        SingularResolventError: Si z está demasiado cerca de algún σ(H_i)
    """
    lo, hi = cfg.gap_window
    if not lo < z.real < hi:
        raise PreconditionError(f"Re z = {z.real:.4f} fuera de Δ_ε = ({lo:.4f}, {hi:.4f})")

    grid = build_grid(cfg)
    regions = build_regions(cfg)
    field = sample_disorder(cfg, regions['Lambda'], seed)
    kappa = assemble_kappa(z, cfg, field, cutoffs=build_cutoffs(cfg, grid), solver=solver, grid=grid)
    norm = operator_norm(kappa, rtol=solver.power_rtol, maxiter=solver.power_maxiter, seed=seed)

    residual = float('nan')
    if with_residual:
        full = assemble(OperatorVariant(OperatorTag.FULL, with_flux=True), cfg, field, grid, regions)
        residual = resolvent_identity_residual(kappa, full, seed=seed)
    return {'norm': norm, 'identity_residual': residual}


def _decay_table(frame: pd.DataFrame, abscissa: str) -> pd.DataFrame:
    """Máximo y media de ‖𝒦‖ sobre semillas por valor de la abscisa."""
    grouped = frame.groupby(['z', abscissa])['norm']
    table = grouped.agg(['max', 'mean', 'count']).reset_index()
    return table.rename(columns={'max': 'max_norm', 'mean': 'mean_norm', 'count': 'seeds'})


class DecouplingCampaign(BaseCampaign):
    """Barrido de ‖𝒦(z)‖ sobre z × L × semillas."""

    name = "decouple"
    log_plots = True

    def __init__(self, config: RunConfig, n_jobs: int = 1, z_list: Optional[Sequence[float]] = None,
                 L_list: Optional[Sequence[int]] = None, seeds: Optional[Sequence[int]] = None):
        super().__init__(config, n_jobs)
        self.z_list = [float(z) for z in (z_list or self.experiments.z_list)]
        self.L_list = sorted(int(L) for L in (L_list or self.experiments.L_list))
        self.seeds = list(seeds) if seeds is not None else self.experiments.seed_list()
        self.fits: Dict[float, Optional[DecayFit]] = {}

    def build_tasks(self) -> List[Dict]:
        return [
            {'key': f"z{z:g}_L{L}_seed{seed}", 'z': z, 'L': L, 'seed': seed, 'cfg': self.model_for(L)}
            for z in self.z_list for L in self.L_list for seed in self.seeds
        ]

    def run_task(self, task: Dict) -> Dict:
        cfg = task['cfg']
        z = campaign_energy(task['z'], self.experiments.z_imag, cfg)
        return kappa_norm(z, cfg, task['seed'], self.solver)

    def reduce(self, completed: List, outcome: CampaignOutcome) -> pd.DataFrame:
        frame = pd.DataFrame([
            {'z': task['z'], 'L': task['L'], 'seed': task['seed'], **result}
            for task, result in completed
        ], columns=['z', 'L', 'seed', 'norm', 'identity_residual'])
        outcome.tables['norms'] = frame

        table = _decay_table(frame, 'L')
        table['sqrt_L'] = sqrt_sizes(table['L'])
        outcome.tables['per_size'] = table

        self.fits = {}
        for z in self.z_list:
            chunk = table[table['z'] == z].sort_values('L')
            if len(chunk) >= MIN_POINTS:
                self.fits[z] = fit_decay(chunk['sqrt_L'], chunk['max_norm'],
                                         floor=self.experiments.floor, confidence=self.experiments.confidence)
            else:
                logger.warning(f"z={z:g}: sólo {len(chunk)} tamaños con ‖𝒦‖, no se ajusta")
                self.fits[z] = None
        return table

    def evaluate(self, report: pd.DataFrame) -> Dict[str, bool]:
        return {f"kappa_decay_z{z:g}": fit.passed for z, fit in self.fits.items() if fit is not None}

    def plot_tables(self, outcome: CampaignOutcome) -> Dict[str, pd.DataFrame]:
        table = outcome.report
        if table.empty:
            return {}
        wide = table.pivot(index='sqrt_L', columns='z', values='max_norm')
        wide.columns = [f"norm_z{z:g}" for z in wide.columns]
        return {'kappa_norm_vs_sqrtL': wide.reset_index()}

    def summary_rows(self, outcome: CampaignOutcome) -> List[Dict]:
        rows = [fit_row(f"kappa_norm_z{z:g}", fit) for z, fit in self.fits.items()]
        return rows + property_rows(outcome)


class SeparationCampaign(BaseCampaign):
    """Barrido de ‖𝒦(z)‖ contra el ancho de franja D a circunferencia fija."""

    name = "separation"
    log_plots = True

    def __init__(self, config: RunConfig, n_jobs: int = 1, strip_widths: Optional[Sequence[int]] = None,
                 z: Optional[float] = None, seeds: Optional[Sequence[int]] = None):
        super().__init__(config, n_jobs)
        self.strip_widths = sorted(int(D) for D in (strip_widths or self.experiments.strip_widths))
        self.z = float(z if z is not None else self.experiments.z_list[0])
        self.seeds = list(seeds) if seeds is not None else self.experiments.seed_list()
        self.fit: Optional[DecayFit] = None

    def build_tasks(self) -> List[Dict]:
        tasks = []
        for D in self.strip_widths:
            try:
                cfg = self.model_for(self.model.L, strip_width=D)
                build_cutoffs(cfg, build_grid(cfg))
            except (ValueError, GeometryError) as exc:
                self.record_exceptional(self.model.L, -1, f"D={D} no admisible: {exc}")
                continue
            tasks.extend({'key': f"D{D}_seed{seed}", 'D': D, 'L': self.model.L, 'seed': seed, 'cfg': cfg}
                         for seed in self.seeds)
        return tasks

    def run_task(self, task: Dict) -> Dict:
        cfg = task['cfg']
        return kappa_norm(campaign_energy(self.z, self.experiments.z_imag, cfg), cfg, task['seed'],
                          self.solver, with_residual=False)

    def reduce(self, completed: List, outcome: CampaignOutcome) -> pd.DataFrame:
        frame = pd.DataFrame([
            {'z': self.z, 'D': task['D'], 'seed': task['seed'], **result}
            for task, result in completed
        ], columns=['z', 'D', 'seed', 'norm', 'identity_residual'])
        outcome.tables['norms'] = frame

        table = _decay_table(frame, 'D')
        outcome.tables['per_width'] = table
        if len(table) >= MIN_POINTS:
            self.fit = fit_decay(table['D'], table['max_norm'],
                                 floor=self.experiments.floor, confidence=self.experiments.confidence)
            logger.info(f"Separación L={self.model.L}: pendiente {self.fit.slope:.4f} por unidad de D")
        return table

    def plot_tables(self, outcome: CampaignOutcome) -> Dict[str, pd.DataFrame]:
        table = outcome.report
        return {'kappa_norm_vs_D': table[['D', 'max_norm', 'mean_norm']]} if not table.empty else {}

    def summary_rows(self, outcome: CampaignOutcome) -> List[Dict]:
        return [fit_row('kappa_norm_vs_D', self.fit)] + property_rows(outcome)


def run_decoupling_sweep(config: RunConfig, z_list: Optional[Sequence[float]] = None,
                         L_list: Optional[Sequence[int]] = None, seeds: Optional[Sequence[int]] = None,
                         n_jobs: int = 1) -> CampaignOutcome:
    """Ajusta log‖𝒦(z)‖ contra √L para cada z."""
    return DecouplingCampaign(config, n_jobs, z_list=z_list, L_list=L_list, seeds=seeds).run()


def run_separation_sweep(config: RunConfig, strip_widths: Optional[Sequence[int]] = None,
                         z: Optional[float] = None, seeds: Optional[Sequence[int]] = None,
                         n_jobs: int = 1) -> CampaignOutcome:
    """Ajusta log‖𝒦(z)‖ contra D a L fijo (reportado, no afirmado)."""
    return SeparationCampaign(config, n_jobs, strip_widths=strip_widths, z=z, seeds=seeds).run()
