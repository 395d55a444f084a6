"""
Pruebas de ejecución completa de cada campaña a L = 16 con exportación.
"""

import sys
import os
sys.path.append('src')
sys.path.append('config')

import json
import math
import tempfile

import numpy as np
import pandas as pd

from src.campaigns.decoupling_sweep import DecouplingCampaign, SeparationCampaign
from src.campaigns.edge_report import EdgeReportCampaign
from src.campaigns.flux_sweep import FluxSweepCampaign
from src.campaigns.kernel_decay import KernelDecayCampaign
from src.campaigns.wegner import WegnerCampaign
from src.exporter import ResultExporter
from src.models import IOOptions, RunConfig


SEED = 20240601


def _export(campaign, outcome, temp_dir):
    """Exporta un resultado y devuelve el manifiesto leído."""
    exporter = ResultExporter(campaign.config, campaign.name, {'seed': SEED})
    campaign.export(outcome, exporter)
    manifest_path = exporter.finalize()
    with open(manifest_path, encoding='utf-8') as handle:
        return json.load(handle)


def _table(temp_dir, command, key):
    return pd.read_csv(os.path.join(temp_dir, command, f"{key}.csv"))


def test_edge_report_run():
    """Prueba el reporte de bordes de una semilla de punta a punta."""
    print("=== PRUEBA: Campaña edge-report ===")

    with tempfile.TemporaryDirectory() as temp_dir:
        config = RunConfig(io=IOOptions(outdir=temp_dir))
        campaign = EdgeReportCampaign(config, n_jobs=1, L_list=[16], seeds=[SEED])
        outcome = campaign.run()

        assert outcome.exceptional == []
        assert outcome.properties['edge_sides_agree']
        assert outcome.properties['edge_coverage']
        assert len(outcome.report.pairs) > 0

        manifest = _export(campaign, outcome, temp_dir)
        states = _table(temp_dir, 'edge-report', f"L16_seed{SEED}")
        assert {'E', 'J', 'class', 'matched_side', 'displacement'} <= set(states.columns)
        assert len(states) == len(outcome.report.pairs)
        assert f"edge-report/L16_seed{SEED}.csv" in manifest['files']

    print(f"✅ {len(outcome.report.pairs)} pares exportados")


def test_flux_sweep_run():
    """Prueba el barrido de flujo con paredes simetrizadas en Φ ∈ {0, π/2, 2π}."""
    print("\n=== PRUEBA: Campaña flux-sweep ===")

    with tempfile.TemporaryDirectory() as temp_dir:
        config = RunConfig(io=IOOptions(outdir=temp_dir))
        campaign = FluxSweepCampaign(config, n_jobs=1, flux_list=[0.0, 0.5 * math.pi, 2.0 * math.pi])
        outcome = campaign.run()

        assert campaign.model.wall_right == campaign.model.wall_left
        assert outcome.properties == {
            'flux_zero_coincidence': True,
            'flux_lifting': True,
            'flux_periodicity': True,
        }
        assert abs(outcome.report.phi_star - 0.5 * math.pi) < 1e-12

        _export(campaign, outcome, temp_dir)
        table = _table(temp_dir, 'flux-sweep', 'L16')
        assert list(table.columns) == ['phi', 'L_same_gap', 'L_shifted_gap', 'L_min_gap']
        assert len(table) == 3

    print(f"✅ Φ* = {outcome.report.phi_star:.4f}")


def test_wegner_run():
    """Prueba un ensamble de Wegner de dos realizaciones."""
    print("\n=== PRUEBA: Campaña wegner ===")

    with tempfile.TemporaryDirectory() as temp_dir:
        config = RunConfig(io=IOOptions(outdir=temp_dir))
        campaign = WegnerCampaign(config, n_jobs=1, delta_bars=[1e-4], N=2)
        outcome = campaign.run()

        assert len(outcome.report) == 1
        report = outcome.report[0]
        assert report.N == 2 and 0 <= report.hits <= 2
        assert 'wegner_bound_0.0001' in outcome.properties

        _export(campaign, outcome, temp_dir)
        distances = _table(temp_dir, 'wegner', 'distances')
        assert list(distances.columns) == ['seed', 'distance']
        assert list(distances['seed']) == [config.experiments.master_seed, config.experiments.master_seed + 1]
        assert 'p_hat' in _table(temp_dir, 'wegner', 'report').columns

    print(f"✅ p̂ = {report.p_hat:.2f} con cota {report.bound:.3e}")


def test_decoupling_runs():
    """Prueba ‖𝒦(z)‖ por tamaño y por ancho de franja con una semilla."""
    print("\n=== PRUEBA: Campañas de desacoplamiento ===")

    with tempfile.TemporaryDirectory() as temp_dir:
        config = RunConfig(solver={'power_rtol': 1e-4}, io=IOOptions(outdir=temp_dir))
        campaign = DecouplingCampaign(config, n_jobs=1, z_list=[1.0], L_list=[16], seeds=[SEED])
        outcome = campaign.run()

        norms = outcome.tables['norms']
        assert list(norms.columns) == ['z', 'L', 'seed', 'norm', 'identity_residual']
        assert len(norms) == 1
        assert np.isfinite(norms['norm'].iloc[0]) and norms['norm'].iloc[0] > 0.0
        assert norms['identity_residual'].iloc[0] < 1e-6
        # Un solo tamaño no alcanza para ajustar
        assert campaign.fits == {1.0: None} and outcome.properties == {}

        _export(campaign, outcome, temp_dir)
        per_size = _table(temp_dir, 'decouple', 'per_size')
        assert {'z', 'L', 'max_norm', 'mean_norm', 'seeds', 'sqrt_L'} <= set(per_size.columns)

        separation = SeparationCampaign(config, n_jobs=1, strip_widths=[4], seeds=[SEED])
        widths = separation.run()
        assert list(widths.report['D']) == [4]
        assert widths.exceptional == []

    print(f"✅ ‖𝒦(z)‖ = {norms['norm'].iloc[0]:.3e} a L = 16")


def test_kernel_decay_run():
    """Prueba el decaimiento del núcleo libre en el z por defecto."""
    print("\n=== PRUEBA: Campaña kernel-decay ===")

    with tempfile.TemporaryDirectory() as temp_dir:
        config = RunConfig(io=IOOptions(outdir=temp_dir))
        campaign = KernelDecayCampaign(config, n_jobs=1, z_list=[1.0])
        outcome = campaign.run()

        rates = outcome.report
        assert len(rates) == 1
        assert rates['z_imag'].iloc[0] == config.experiments.z_imag
        assert set(outcome.properties) == {'kernel_rate', 'kernel_envelope'}

        _export(campaign, outcome, temp_dir)
        samples = _table(temp_dir, 'kernel-decay', 'samples_z1')
        assert {'r', 'kernel', 'envelope'} <= set(samples.columns)

    print(f"✅ Tasa efectiva {rates['effective_rate'].iloc[0]:.3f}")


if __name__ == "__main__":
    test_edge_report_run()
    test_flux_sweep_run()
    test_wegner_run()
    test_decoupling_runs()
    test_kernel_decay_run()
    print("\n✅ Todas las pruebas de ejecución de campañas pasaron")
