"""
Campaña de decaimiento del núcleo del resolvente libre.

Para cada z de la lista se resuelve una columna de (z − H_L)⁻¹ y se compara
|K(r)| con la envolvente gaussiana e^{−Br²/8}. Se afirma que la tasa efectiva
supera √B/16 y que no hay puntos por encima de la envolvente.
"""

import math
from typing import Dict, List, Optional, Sequence

import pandas as pd

from .base_campaign import BaseCampaign, property_rows
from .decoupling_sweep import campaign_energy
from src.models import CampaignOutcome, KernelDecayFit, RunConfig
from src.observables import EXPONENTIAL_RATE, kernel_decay_probe


class KernelDecayCampaign(BaseCampaign):
    """Sondeo del núcleo para cada z de la lista."""

    name = "kernel-decay"
    log_plots = True

    def __init__(self, config: RunConfig, n_jobs: int = 1, z_list: Optional[Sequence[float]] = None):
        super().__init__(config, n_jobs)
        self.z_list = [float(z) for z in (z_list or self.experiments.z_list)]

    def build_tasks(self) -> List[Dict]:
        return [{'key': f"z{z:g}", 'z': z, 'L': self.model.L} for z in self.z_list]

    def run_task(self, task: Dict) -> KernelDecayFit:
        z = campaign_energy(task['z'], self.experiments.z_imag, self.model)
        return kernel_decay_probe(z, self.model, solver=self.solver)

    def reduce(self, completed: List, outcome: CampaignOutcome) -> pd.DataFrame:
        rows = []
        for task, fit in completed:
            outcome.tables[f"samples_{task['key']}"] = fit.samples
            rows.append({
                'z': task['z'],
                'z_real': fit.z.real,
                'z_imag': fit.z.imag,
                'gaussian_rate': fit.gaussian_rate,
                'exponential_rate': fit.exponential_rate,
                'effective_rate': fit.effective_rate,
                'envelope_gaussian_rate': fit.envelope.gaussian_rate,
                'prefactor': fit.envelope.prefactor,
                'violations': fit.violations,
                'derivative_violations': fit.derivative_violations,
            })
        table = pd.DataFrame(rows, columns=[
            'z', 'z_real', 'z_imag', 'gaussian_rate', 'exponential_rate', 'effective_rate',
            'envelope_gaussian_rate', 'prefactor', 'violations', 'derivative_violations'])
        outcome.tables['rates'] = table
        return table

    def evaluate(self, report: pd.DataFrame) -> Dict[str, bool]:
        if report.empty:
            return {}
        threshold = EXPONENTIAL_RATE * math.sqrt(self.model.B)
        return {
            'kernel_rate': bool((report['effective_rate'] >= threshold).all()),
            'kernel_envelope': bool((report['violations'] == 0).all()),
        }

    def plot_tables(self, outcome: CampaignOutcome) -> Dict[str, pd.DataFrame]:
        tables = {}
        for z in self.z_list:
            samples = outcome.tables.get(f"samples_z{z:g}")
            if samples is not None and not samples.empty:
                tables[f"kernel_vs_r_z{z:g}"] = samples[['r', 'kernel', 'envelope']]
        return tables

    def summary_rows(self, outcome: CampaignOutcome) -> List[Dict]:
        rows = [{'quantity': f"kernel_effective_rate_z{row.z:g}", 'value': row.effective_rate,
                 'bound': EXPONENTIAL_RATE * math.sqrt(self.model.B)}
                for row in outcome.report.itertuples()]
        return rows + property_rows(outcome)


def run_kernel_decay(config: RunConfig, z_list: Optional[Sequence[float]] = None,
                     n_jobs: int = 1) -> CampaignOutcome:
    """Ajusta el decaimiento de |R_0(x, x′; z)| para cada z."""
    return KernelDecayCampaign(config, n_jobs, z_list=z_list).run()
