"""
Campañas numéricas sobre el cilindro con paredes.
"""

from .base_campaign import BaseCampaign
from .decoupling_sweep import DecouplingCampaign, SeparationCampaign, run_decoupling_sweep, run_separation_sweep
from .edge_report import EdgeReportCampaign, run_edge_report
from .flux_sweep import FluxSweepCampaign, run_flux_sweep
from .kernel_decay import KernelDecayCampaign, run_kernel_decay
from .projector_distance import ProjectorCampaign, run_projector_distance
from .wegner import WegnerCampaign, run_wegner

__all__ = [
    'BaseCampaign',
    'DecouplingCampaign',
    'SeparationCampaign',
    'EdgeReportCampaign',
    'FluxSweepCampaign',
    'KernelDecayCampaign',
    'ProjectorCampaign',
    'WegnerCampaign',
    'run_decoupling_sweep',
    'run_separation_sweep',
    'run_edge_report',
    'run_flux_sweep',
    'run_kernel_decay',
    'run_projector_distance',
    'run_wegner',
]
