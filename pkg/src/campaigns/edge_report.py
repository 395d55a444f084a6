"""
Campaña de reporte de estados de borde.

Para cada tamaño L y semilla se resuelven σ(H_ω)∩Δ, σ(H_ℓ)∩Δ y σ(H_r)∩Δ con
el mismo desorden restringido, se emparejan los autovalores de H_ω con los
de una pared y se comparan velocidades y lados. El desplazamiento máximo
por tamaño se ajusta contra √L.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy.optimize import linear_sum_assignment

from .base_campaign import BaseCampaign, fit_row, property_rows, sqrt_sizes
from .flux_sweep import branch_gaps, wall_branches
from src.decoupling import build_cutoffs
from src.disorder import sample_disorder
from src.eigensolver import solve_window
from src.errors import HypothesisViolationError, InputError
from src.fitting import MIN_POINTS, fit_decay
from src.geometry import build_grid, build_regions
from src.models import (
    AssembledOperator,
    CampaignOutcome,
    Classification,
    EdgeObservable,
    ExperimentOptions,
    MatchedPair,
    MatchReport,
    ModelConfig,
    OperatorTag,
    OperatorVariant,
    RunConfig,
    Side,
    SolverOptions,
    UnmatchedState,
    WindowSpectrum,
)
from src.observables import edge_observable, velocity_lower_bound
from src.operators import assemble
from config.settings import ERROR_MESSAGES


SINGLE_WALL_TAGS = {Side.LEFT: OperatorTag.LEFT, Side.RIGHT: OperatorTag.RIGHT}

# Holgura numérica de la comparación |J| ≥ cota
BOUND_SLACK = 1e-8

# Fracción mínima de semillas con desplazamiento decreciente en L
SEED_MONOTONE_FRACTION = 0.9


def hypothesis_margin(cfg: ModelConfig, solver: Optional[SolverOptions] = None,
                      branches: Optional[Dict] = None) -> float:
    """
    L · dist(σ(H_ℓ⁰)∩Δ_ε, σ(H_r⁰)∩Δ_ε) calculado sobre las ramas ε_0.

    Returns:
        float: Margen (infinito si algún lado no tiene puntos en Δ_ε)
    """
    branches = branches if branches is not None else wall_branches(cfg, cfg.flux, solver)
    return cfg.L * branch_gaps(branches, cfg.gap_window)['min_gap']


def check_hypothesis(cfg: ModelConfig, experiments: ExperimentOptions,
                     solver: Optional[SolverOptions] = None, branches: Optional[Dict] = None) -> float:
    """
    Verifica el margen de no degeneración entre paredes.

    Raises:
        HypothesisViolationError: Si el margen es menor que ``hypothesis_d0``
    """
    margin = hypothesis_margin(cfg, solver, branches)
    if margin < experiments.hypothesis_d0:
        logger.error(f"Margen L·dist = {margin:.3e} menor que d0 = {experiments.hypothesis_d0:.1e}")
        raise HypothesisViolationError(ERROR_MESSAGES['hypothesis_violation'].format(
            margin / cfg.L, experiments.hypothesis_d0 / cfg.L))
    logger.debug(f"Margen de no degeneración L={cfg.L}: {margin:.4e}")
    return margin


def match_spectra(
    full: np.ndarray,
    candidates: np.ndarray,
    tolerance: float,
) -> Tuple[List[Tuple[int, int, float]], List[int], List[int]]:
    """
    Emparejamiento de mínimo desplazamiento entre dos listas de energías.

    Primero se aceptan los vecinos más cercanos mutuos con desplazamiento
    ≤ tolerancia; los restantes se asignan minimizando el desplazamiento total
    (algoritmo húngaro), aceptando sólo pares dentro de la tolerancia.

    Returns:
        Tuple: (pares (i, j, desplazamiento), índices de ``full`` sin pareja,
        índices de ``candidates`` sin pareja)
    """
    full = np.asarray(full, dtype=float)
    candidates = np.asarray(candidates, dtype=float)
    if full.size == 0 or candidates.size == 0:
        return [], list(range(full.size)), list(range(candidates.size))

    cost = np.abs(np.subtract.outer(full, candidates))
    nearest_candidate = np.argmin(cost, axis=1)
    nearest_full = np.argmin(cost, axis=0)

    pairs: List[Tuple[int, int, float]] = []
    for i, j in enumerate(nearest_candidate):
        if nearest_full[j] == i and cost[i, j] <= tolerance:
            pairs.append((i, int(j), float(cost[i, j])))

    used_full = {i for i, _, _ in pairs}
    used_candidates = {j for _, j, _ in pairs}
    rest_full = [i for i in range(full.size) if i not in used_full]
    rest_candidates = [j for j in range(candidates.size) if j not in used_candidates]

    if rest_full and rest_candidates:
        sub = cost[np.ix_(rest_full, rest_candidates)]
        rows, cols = linear_sum_assignment(sub)
        for r, c in zip(rows, cols):
            if sub[r, c] <= tolerance:
                pairs.append((rest_full[r], rest_candidates[c], float(sub[r, c])))

    pairs.sort()
    used_full = {i for i, _, _ in pairs}
    used_candidates = {j for _, j, _ in pairs}
    return (
        pairs,
        [i for i in range(full.size) if i not in used_full],
        [j for j in range(candidates.size) if j not in used_candidates],
    )


@dataclass
class EdgeSolution:
    """
    Espectros y observables de una realización (uso interno de las campañas).

    Attributes:
        cfg: Modelo del tamaño resuelto
        seed: Semilla del desorden
        full: H_ω ensamblado
        singles: H_ℓ y H_r ensamblados
        spectrum: σ(H_ω)∩Δ
        single_spectra: σ(H_α)∩Δ por lado
        observables: Observables de los estados de H_ω
        single_observables: Observables de los estados de H_α
        pairs: (índice en H_ω, lado, índice en H_α, desplazamiento)
        unmatched: Estados sin pareja
    """

    cfg: ModelConfig
    seed: int
    full: AssembledOperator
    singles: Dict[Side, AssembledOperator]
    spectrum: WindowSpectrum
    single_spectra: Dict[Side, WindowSpectrum]
    observables: List[EdgeObservable]
    single_observables: Dict[Side, List[EdgeObservable]]
    pairs: List[Tuple[int, Side, int, float]] = field(default_factory=list)
    unmatched: List[UnmatchedState] = field(default_factory=list)

    def matched_pairs(self) -> List[MatchedPair]:
        result = []
        for i, side, j, displacement in self.pairs:
            full_state = self.observables[i]
            single_state = self.single_observables[side][j]
            result.append(MatchedPair(
                L=self.cfg.L,
                seed=self.seed,
                energy_full=full_state.E,
                energy_single=single_state.E,
                side=side,
                displacement=displacement,
                velocity_full=full_state.J,
                velocity_single=single_state.J,
                classification=full_state.classification,
            ))
        return result

    def states_frame(self) -> pd.DataFrame:
        """Una fila por autoestado de H_ω con su pareja, si existe."""
        partner = {i: (side, j, displacement) for i, side, j, displacement in self.pairs}
        rows = []
        for i, state in enumerate(self.observables):
            row = {'L': self.cfg.L, 'seed': self.seed, **state.as_row(),
                   'residual': self.spectrum.pairs[i].residual,
                   'matched_side': '', 'E_single': np.nan, 'J_single': np.nan, 'displacement': np.nan}
            if i in partner:
                side, j, displacement = partner[i]
                single = self.single_observables[side][j]
                row.update({'matched_side': side.value, 'E_single': single.E,
                            'J_single': single.J, 'displacement': displacement})
            rows.append(row)
        return pd.DataFrame(rows)


def solve_edge_realization(
    cfg: ModelConfig,
    seed: int,
    solver: SolverOptions,
    experiments: ExperimentOptions,
) -> EdgeSolution:
    """
    Resuelve H_ω, H_ℓ y H_r de una realización y empareja sus espectros en Δ.

    Raises:
        HypothesisViolationError: Si σ(H_ℓ)∩Δ y σ(H_r)∩Δ se acercan más que la tolerancia
    """
    grid = build_grid(cfg)
    regions = build_regions(cfg)
    cutoffs = build_cutoffs(cfg, grid)
    field_full = sample_disorder(cfg, regions['Lambda'], seed)

    full = assemble(OperatorVariant(OperatorTag.FULL, with_flux=True), cfg, field_full, grid, regions)
    singles = {
        side: assemble(OperatorVariant(tag, with_flux=True), cfg, field_full, grid, regions)
        for side, tag in SINGLE_WALL_TAGS.items()
    }

    spectrum = solve_window(full, cfg.window, solver=solver)
    single_spectra = {side: solve_window(op, cfg.window, solver=solver) for side, op in singles.items()}

    observables = [edge_observable(pair, full, cutoffs, experiments) for pair in spectrum.pairs]
    single_observables = {
        side: [edge_observable(pair, singles[side], cutoffs, experiments) for pair in single_spectra[side].pairs]
        for side in singles
    }

    left = single_spectra[Side.LEFT].energies
    right = single_spectra[Side.RIGHT].energies
    if left.size and right.size:
        closest = float(np.min(np.abs(np.subtract.outer(left, right))))
        if closest <= experiments.match_tolerance:
            raise HypothesisViolationError(ERROR_MESSAGES['hypothesis_violation'].format(
                closest, experiments.match_tolerance))

    candidates = np.concatenate([left, right])
    sides = [Side.LEFT] * left.size + [Side.RIGHT] * right.size
    offsets = {Side.LEFT: 0, Side.RIGHT: left.size}
    pairs, lonely_full, lonely_candidates = match_spectra(
        spectrum.energies, candidates, experiments.match_tolerance)

    solution = EdgeSolution(
        cfg=cfg,
        seed=seed,
        full=full,
        singles=singles,
        spectrum=spectrum,
        single_spectra=single_spectra,
        observables=observables,
        single_observables=single_observables,
    )
    solution.pairs = [(i, sides[j], j - offsets[sides[j]], displacement) for i, j, displacement in pairs]

    def nearest(energy: float, others: np.ndarray) -> float:
        return float(np.min(np.abs(others - energy))) if others.size else float('inf')

    solution.unmatched = (
        [UnmatchedState(L=cfg.L, seed=seed, energy=float(spectrum.energies[i]), source=OperatorTag.FULL.value,
                        nearest_distance=nearest(spectrum.energies[i], candidates)) for i in lonely_full]
        + [UnmatchedState(L=cfg.L, seed=seed, energy=float(candidates[j]),
                          source=SINGLE_WALL_TAGS[sides[j]].value,
                          nearest_distance=nearest(candidates[j], spectrum.energies)) for j in lonely_candidates]
    )

    logger.debug(f"L={cfg.L}, semilla {seed}: {spectrum.count} estados, {len(pairs)} pares, "
                 f"{len(solution.unmatched)} sin pareja")
    return solution


class EdgeReportCampaign(BaseCampaign):
    """Emparejamiento espectral y dicotomía de velocidades por tamaño y semilla."""

    name = "edge-report"

    def __init__(self, config: RunConfig, n_jobs: int = 1,
                 L_list: Optional[List[int]] = None, seeds: Optional[List[int]] = None):
        super().__init__(config, n_jobs)
        self.L_list = sorted(int(L) for L in (L_list or self.experiments.L_list))
        self.seeds = list(seeds) if seeds is not None else self.experiments.seed_list()
        self.bound_rows: List[Dict] = []
        self.seed_monotone_fraction: Optional[float] = None

    def build_tasks(self) -> List[Dict]:
        tasks = []
        for L in self.L_list:
            cfg = self.model_for(L)
            branches = wall_branches(cfg, cfg.flux, self.solver)
            try:
                check_hypothesis(cfg, self.experiments, self.solver, branches)
            except HypothesisViolationError as exc:
                self.record_exceptional(L, -1, f"HypothesisViolationError: {exc}")
                continue
            for seed in self.seeds:
                tasks.append({'key': f"L{L}_seed{seed}", 'L': L, 'seed': seed,
                              'cfg': cfg, 'branches': branches})
        return tasks

    def run_task(self, task: Dict) -> Dict:
        solution = solve_edge_realization(task['cfg'], task['seed'], self.solver, self.experiments)
        return {
            'pairs': solution.matched_pairs(),
            'unmatched': solution.unmatched,
            'states': solution.states_frame(),
            'bounds': self._velocity_bounds(solution, task['branches']),
        }

    def _velocity_bounds(self, solution: EdgeSolution, branches: Dict) -> pd.DataFrame:
        """Cota inferior de velocidad para cada estado de una pared en Δ."""
        rows = []
        for side, states in solution.single_observables.items():
            for state in states:
                try:
                    bound = velocity_lower_bound(state.E, branches[side], solution.cfg,
                                                 self.experiments.neighborhood)
                except InputError as exc:
                    logger.warning(f"Cota de velocidad omitida en E={state.E:.6f}: {exc}")
                    continue
                rows.append({
                    'L': solution.cfg.L,
                    'seed': solution.seed,
                    'side': side.value,
                    'E': state.E,
                    'J': state.J,
                    'bound': bound.value,
                    'leading': bound.leading,
                    'second_order': bound.second_order,
                    'correction': bound.correction,
                    'm_bar': bound.m_bar,
                    'holds': abs(state.J) >= bound.value - BOUND_SLACK,
                })
        return pd.DataFrame(rows, columns=['L', 'seed', 'side', 'E', 'J', 'bound', 'leading',
                                           'second_order', 'correction', 'm_bar', 'holds'])

    def reduce(self, completed: List, outcome: CampaignOutcome) -> MatchReport:
        report = MatchReport()
        bounds = []
        for task, result in completed:
            report.pairs.extend(result['pairs'])
            report.unmatched.extend(result['unmatched'])
            report.observables.extend(result['states'].to_dict('records'))
            outcome.tables[task['key']] = result['states']
            if not result['bounds'].empty:
                outcome.tables[f"{task['key']}_velocity_bound"] = result['bounds']
                bounds.append(result['bounds'])
        self.bound_rows = pd.concat(bounds, ignore_index=True).to_dict('records') if bounds else []

        summary = report.per_size_summary()
        fitted = summary.dropna(subset=['max_displacement'])
        if len(fitted) >= MIN_POINTS:
            report.fit = fit_decay(sqrt_sizes(fitted['L']), fitted['max_displacement'],
                                   floor=self.experiments.floor, confidence=self.experiments.confidence)
        self.seed_monotone_fraction = self._seed_monotone_fraction(report)
        outcome.tables['per_size'] = summary
        report.exceptional = list(self.exceptional)
        return report

    def _seed_monotone_fraction(self, report: MatchReport) -> Optional[float]:
        """Fracción de semillas cuyo desplazamiento máximo no crece con L."""
        frame = report.pairs_frame()
        if frame.empty or frame['L'].nunique() < 2:
            return None
        floor = self.experiments.floor
        per_seed = frame.groupby(['seed', 'L'])['displacement'].max().unstack('L').sort_index(axis=1)
        monotone = 0
        for _, values in per_seed.iterrows():
            series = np.maximum(values.dropna().to_numpy(), floor)
            monotone += int(np.all(np.diff(series) <= 0.0))
        return monotone / len(per_seed)

    def evaluate(self, report: MatchReport) -> Dict[str, bool]:
        properties = {
            'edge_sides_agree': all(pair.side_agrees for pair in report.pairs),
            'edge_no_ambiguous': all(row['class'] != Classification.AMBIGUOUS.value
                                     for row in report.observables),
            'edge_coverage': not report.unmatched,
        }
        if self.bound_rows:
            properties['velocity_bound_holds'] = all(row['holds'] for row in self.bound_rows)
        if report.fit is not None:
            properties['edge_displacement_decay'] = report.fit.passed
        if self.seed_monotone_fraction is not None:
            properties['edge_seed_monotone'] = self.seed_monotone_fraction >= SEED_MONOTONE_FRACTION
        return properties

    def plot_tables(self, outcome: CampaignOutcome) -> Dict[str, pd.DataFrame]:
        summary = outcome.report.per_size_summary()
        return {
            'displacement_vs_sqrtL': pd.DataFrame({
                'sqrt_L': sqrt_sizes(summary['L']),
                'max_displacement': summary['max_displacement'],
                'max_velocity_displacement': summary['max_velocity_displacement'],
            }),
            'velocity_vs_energy': outcome.report.pairs_frame()[['E_full', 'J_full']],
        }

    def summary_rows(self, outcome: CampaignOutcome) -> List[Dict]:
        pairs = outcome.report.pairs_frame()
        rows = [fit_row('edge_max_displacement', outcome.report.fit)]
        if not pairs.empty:
            rows.append({'quantity': 'edge_min_abs_J', 'value': float(pairs['J_full'].abs().min())})
        if self.seed_monotone_fraction is not None:
            rows.append({'quantity': 'edge_seed_monotone_fraction', 'value': self.seed_monotone_fraction})
        return rows + property_rows(outcome)


def run_edge_report(config: RunConfig, seeds: Optional[List[int]] = None,
                    L_list: Optional[List[int]] = None, n_jobs: int = 1) -> CampaignOutcome:
    """Ejecuta el reporte de estados de borde sobre L_list × semillas."""
    return EdgeReportCampaign(config, n_jobs, L_list=L_list, seeds=seeds).run()
