"""
Módulo de observables de borde.

Este módulo calcula la velocidad media J = ⟨ψ, v_y ψ⟩, la masa de un estado en
cada franja, su clasificación como estado de borde, la cota inferior de
velocidad a partir de una rama espectral, la cota de transferencia de
velocidad entre proyectores y el sondeo de decaimiento del núcleo del
resolvente libre.
"""

import math
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy import stats
from scipy.optimize import lsq_linear
from scipy.sparse.linalg import splu
from scipy import sparse

from .errors import InputError, SingularResolventError
from .decoupling import check_resolvent_distance
from .eigensolver import subspace_distance
from .geometry import build_grid, star_distance
from .models import (
    AssembledOperator,
    Classification,
    CutoffSystem,
    EdgeObservable,
    EigenPair,
    ExperimentOptions,
    Grid,
    KernelDecayFit,
    KernelEnvelope,
    ModelConfig,
    OperatorTag,
    OperatorVariant,
    ProjectorFrame,
    SolverOptions,
    SpectralBranch,
    VelocityBound,
)
from .operators import assemble, velocity_operator
from config.settings import ERROR_MESSAGES


# Radio del núcleo excluido en longitudes magnéticas
CORE_RADIUS = 2.0

# Tasa exponencial mínima γ̄ en unidades de √B
EXPONENTIAL_RATE = 1.0 / 16.0

# Puntos de sondeo por década de distancia
PROBES_PER_DECADE = 8

# Piso relativo de redondeo del núcleo
KERNEL_FLOOR = 1e-13


def _check_grid(psi: np.ndarray, grid: Grid) -> np.ndarray:
    psi = np.asarray(psi)
    if psi.shape != (grid.size,):
        raise InputError(ERROR_MESSAGES['grid_mismatch'].format(psi.size, grid.size))
    return psi


def average_velocity(psi: np.ndarray, op: AssembledOperator) -> float:
    """
    Velocidad media J = ⟨ψ, (p_y − Bx + Φ/L)ψ⟩ con la discretización del ensamblado.

    Args:
        psi: Vector normalizado en la malla del operador
        op: Operador del que ψ es autoestado

    Returns:
        float: Velocidad media

    Raises:
        InputError: Si ψ no corresponde a la malla
    """
    psi = _check_grid(psi, op.grid)
    velocity = velocity_operator(op.grid, op.B, op.flux_shift)
    return float(np.vdot(psi, velocity @ psi).real / np.vdot(psi, psi).real)


def localization_profile(psi: np.ndarray, cutoffs: CutoffSystem, grid: Grid) -> Tuple[float, float, float]:
    """
    Masas ⟨ψ, J̃_i ψ⟩ en las franjas izquierda, central y derecha.

    Returns:
        Tuple[float, float, float]: (izquierda, centro, derecha)
    """
    psi = _check_grid(psi, grid)
    density = (np.abs(psi.reshape(grid.n_x, grid.n_y)) ** 2).sum(axis=1)
    density = density / density.sum()
    return tuple(float(np.dot(cutoffs.sharp[strip], density)) for strip in ('l', 'b', 'r'))


def classify_state(
    J: float,
    masses: Tuple[float, float, float],
    B: float,
    experiments: Optional[ExperimentOptions] = None,
) -> Classification:
    """
    Asigna el lado de un estado por su masa y lo confirma con el signo de J.

    Se marca ambiguo si |J| < umbral·√B, si la masa central supera el umbral
    o si el signo de J contradice el lado de la masa.
    """
    experiments = experiments or ExperimentOptions()
    mass_left, mass_bulk, mass_right = masses

    if abs(J) < experiments.ambiguous_velocity * math.sqrt(B):
        return Classification.AMBIGUOUS
    if mass_bulk > experiments.ambiguous_bulk_mass:
        return Classification.AMBIGUOUS

    if mass_left >= mass_right:
        return Classification.LEFT_EDGE if J < 0 else Classification.AMBIGUOUS
    return Classification.RIGHT_EDGE if J > 0 else Classification.AMBIGUOUS


def edge_observable(
    pair: EigenPair,
    op: AssembledOperator,
    cutoffs: CutoffSystem,
    experiments: Optional[ExperimentOptions] = None,
) -> EdgeObservable:
    """Observables completos de un autopar."""
    J = average_velocity(pair.psi, op)
    masses = localization_profile(pair.psi, cutoffs, op.grid)
    return EdgeObservable(
        E=pair.E,
        J=J,
        mass_left=masses[0],
        mass_bulk=masses[1],
        mass_right=masses[2],
        classification=classify_state(J, masses, op.B, experiments),
    )


def velocity_lower_bound(
    E: float,
    branch: SpectralBranch,
    cfg: ModelConfig,
    neighborhood: int = 3,
) -> VelocityBound:
    """
    Cota inferior de |J| para un autovalor E de una pared con desorden.

    |J_{E_{0,m̄}}|·{1 − V0²[(B/2 − δ)⁻² + sup_{m∉𝒜}(E_{0,m} − E)⁻²]}
    − 3V0/(B/2 − δ)·√(2(E + V0)), con 𝒜 = [m̄ − a, m̄ + a].

    Args:
        E: Energía en Δ
        branch: Rama ε_0 del mismo lado
        cfg: Configuración del modelo
        neighborhood: Semiancho a del vecindario 𝒜

    Returns:
        VelocityBound: max(cota, 0) y sus términos

    Raises:
        InputError: Si la tabla no contiene m̄ ± (a + 1)
    """
    index = int(np.argmin(np.abs(branch.energies - E)))
    m_bar = int(branch.m[index])
    available = set(branch.m.tolist())
    if m_bar - neighborhood - 1 not in available or m_bar + neighborhood + 1 not in available:
        raise InputError(ERROR_MESSAGES['branch_coverage'].format(neighborhood + 1, E))

    gap = 0.5 * cfg.B - cfg.delta
    outside = np.abs(branch.m - m_bar) > neighborhood
    nearest_outside = float(np.max((branch.energies[outside] - E) ** -2.0))

    branch_velocity = float(abs(branch.derivatives[index]))
    second_order = cfg.V0 ** 2 * (gap ** -2.0 + nearest_outside)
    leading = branch_velocity * (1.0 - second_order)
    correction = 3.0 * cfg.V0 / gap * math.sqrt(2.0 * (E + cfg.V0))

    return VelocityBound(
        value=max(leading - correction, 0.0),
        leading=leading,
        second_order=second_order,
        correction=correction,
        m_bar=m_bar,
        branch_velocity=branch_velocity,
    )


def velocity_transfer_bound(frame: ProjectorFrame, frame_single: ProjectorFrame, cfg: ModelConfig) -> float:
    """|J_𝓔 − J_E| ≤ 4(3B + 2V0)^{1/2}‖P − P_α‖."""
    return 4.0 * math.sqrt(3.0 * cfg.B + 2.0 * cfg.V0) * subspace_distance(frame, frame_single)


# ---------------------------------------------------------------------------
# Núcleo del resolvente libre
# ---------------------------------------------------------------------------

def log_envelope(r: np.ndarray, B: float) -> np.ndarray:
    """Φ⁰(r) = 1 + |ln(B r²/2)|."""
    return 1.0 + np.abs(np.log(0.5 * B * r * r))


def derivative_envelope(r: np.ndarray, B: float) -> np.ndarray:
    """Φ¹(r) = 1 + |ln(B r²/2)| + (1 + |ln(B r²/2)|)/r."""
    phi = log_envelope(r, B)
    return phi + phi / r


def free_resolvent_column(
    z: complex,
    cfg: ModelConfig,
    source: Tuple[float, float] = (0.0, 0.0),
    grid: Optional[Grid] = None,
    solver: Optional[SolverOptions] = None,
) -> Tuple[np.ndarray, Grid, int]:
    """
    Columna (z − H_L)⁻¹(·, x′) escalada por el área de celda.

    Returns:
        Tuple: (núcleo en la malla como arreglo n_x×n_y, malla, índice de la fuente)
    """
    solver = solver or SolverOptions()
    grid = grid if grid is not None else build_grid(cfg)
    free = assemble(OperatorVariant(OperatorTag.LANDAU, with_flux=True), cfg, grid=grid)
    check_resolvent_distance(complex(z), free, solver)

    j0 = int(np.argmin(np.abs(grid.x - source[0])))
    l0 = int(np.argmin(np.abs(grid.y - source[1])))
    index = j0 * grid.n_y + l0

    rhs = np.zeros(grid.size, dtype=complex)
    rhs[index] = 1.0 / grid.cell_area
    shifted = sparse.csc_matrix(complex(z) * sparse.identity(grid.size, dtype=complex) - free.matrix)
    column = splu(shifted).solve(rhs)
    return column.reshape(grid.n_x, grid.n_y), grid, index


def sample_kernel(kernel: np.ndarray, grid: Grid, point: Tuple[float, float]) -> complex:
    """Valor del núcleo en el punto de malla más cercano, con y envuelto por el período."""
    j = int(np.argmin(np.abs(grid.x - point[0])))
    y = (point[1] - grid.y[0]) % grid.period
    l = int(np.rint(y / grid.h_y)) % grid.n_y
    return complex(kernel[j, l])


def _probe_points(grid: Grid, origin: Tuple[float, float], B: float) -> list:
    """Desplazamientos en x, en +y y en −y (este último por el otro lado del cilindro)."""
    r_min = 0.25 * CORE_RADIUS / math.sqrt(B)
    r_max = 0.5 * grid.period * 0.999
    decades = math.log10(r_max / r_min)
    count = max(int(math.ceil(PROBES_PER_DECADE * decades)), 3 * PROBES_PER_DECADE)
    radii = np.geomspace(r_min, r_max, count)

    x0, y0 = origin
    points = []
    for r in radii:
        points.append(('x', (x0 + r, y0)))
        points.append(('y+', (x0, y0 + r)))
        points.append(('y-wrap', (x0, y0 + grid.period - r)))
    return points


def _fit_prefactor(ratios: np.ndarray) -> float:
    finite = ratios[np.isfinite(ratios)]
    return float(finite.max()) if finite.size else float('nan')


def kernel_decay_probe(
    z: complex,
    cfg: ModelConfig,
    grid: Optional[Grid] = None,
    solver: Optional[SolverOptions] = None,
) -> KernelDecayFit:
    """
    Ajusta log|R_0(x, x′; z)| ≈ c − a r² − b r y compara con la envolvente gaussiana.

    La envolvente C e^{−Br²/8}Φ⁰(r) toma su prefactor del cociente máximo en la
    capa [r_c, r_c + 1/√B] con r_c = 2/√B; las violaciones se cuentan más allá
    de esa capa y por encima del piso de redondeo. Lo mismo para |∂_x R_0| con Φ¹.

    Args:
        z: Energía compleja con Re z ∈ (B/2, 3B/2) y |Im z| ≤ 1
        cfg: Configuración del modelo
        grid: Malla (por defecto la de la configuración)
        solver: Tolerancias del solver

    Returns:
        KernelDecayFit: Tasas ajustadas, envolvente y violaciones

    Raises:
        InputError: Si z está fuera del primer gap o |Im z| > 1
        SingularResolventError: Si z está a menos de ε de B/2 o 3B/2
    """
    z = complex(z)
    B = cfg.B
    if not (0.5 * B < z.real < 1.5 * B) or abs(z.imag) > 1.0:
        raise InputError(f"z={z} fuera de la banda admitida (B/2, 3B/2) × [−i, i]")

    level_distance = min(abs(z - 0.5 * B), abs(z - 1.5 * B))
    if level_distance < cfg.epsilon:
        logger.error(f"z={z} demasiado cerca de un nivel de Landau")
        raise SingularResolventError(ERROR_MESSAGES['singular_resolvent'].format(
            z, level_distance, 'H_L', cfg.epsilon))

    kernel, grid, index = free_resolvent_column(z, cfg, grid=grid, solver=solver)
    derivative = np.gradient(kernel, grid.h_x, axis=0)
    origin = (float(grid.x[index // grid.n_y]), float(grid.y[index % grid.n_y]))

    rows = []
    for direction, point in _probe_points(grid, origin, B):
        j = int(np.argmin(np.abs(grid.x - point[0])))
        l = int(np.rint(((point[1] - grid.y[0]) % grid.period) / grid.h_y)) % grid.n_y
        snapped = (float(grid.x[j]), float(grid.y[l]))
        rows.append({
            'direction': direction,
            'x': snapped[0],
            'y': snapped[1],
            'r': star_distance(snapped, origin, grid.period),
            'kernel': abs(kernel[j, l]),
            'd_kernel': abs(derivative[j, l]),
        })
    samples = pd.DataFrame(rows).drop_duplicates(subset=['x', 'y']).sort_values('r', kind="stable")
    samples = samples[samples['r'] > 0].reset_index(drop=True)

    r = samples['r'].to_numpy()
    magnitude = samples['kernel'].to_numpy()
    d_magnitude = samples['d_kernel'].to_numpy()
    floor = KERNEL_FLOOR * magnitude.max()

    r_core = CORE_RADIUS / math.sqrt(B)
    shell = (r >= r_core) & (r <= r_core + 1.0 / math.sqrt(B))
    beyond_shell = r > r_core + 1.0 / math.sqrt(B)
    outside = (r >= r_core) & (magnitude > floor)

    # Modelo c − a r² − b r con a, b ≥ 0
    design = np.column_stack([np.ones(outside.sum()), -r[outside] ** 2, -r[outside]])
    fit = lsq_linear(design, np.log(magnitude[outside]),
                     bounds=([-np.inf, 0.0, 0.0], [np.inf, np.inf, np.inf]))
    _, gaussian_rate, exponential_rate = fit.x
    regression = stats.linregress(r[outside], -np.log(magnitude[outside]))

    gaussian = np.exp(-0.125 * B * r * r)
    envelope_base = gaussian * log_envelope(r, B)
    derivative_base = gaussian * derivative_envelope(r, B)
    prefactor = _fit_prefactor(magnitude[shell] / envelope_base[shell])
    derivative_prefactor = _fit_prefactor(d_magnitude[shell] / derivative_base[shell])

    envelope = prefactor * envelope_base
    d_envelope = derivative_prefactor * derivative_base
    d_floor = KERNEL_FLOOR * d_magnitude.max()
    violations = int(np.count_nonzero(beyond_shell & (magnitude > floor) & (magnitude > envelope)))
    derivative_violations = int(np.count_nonzero(
        beyond_shell & (d_magnitude > d_floor) & (d_magnitude > d_envelope)))

    samples['envelope'] = envelope
    samples['d_envelope'] = d_envelope

    result = KernelDecayFit(
        z=z,
        gaussian_rate=float(gaussian_rate),
        exponential_rate=float(exponential_rate),
        effective_rate=float(regression.slope),
        envelope=KernelEnvelope(
            gaussian_rate=0.125 * B,
            exponential_rate=EXPONENTIAL_RATE * math.sqrt(B),
            core_radius=r_core,
            prefactor=prefactor,
            derivative_prefactor=derivative_prefactor,
        ),
        violations=violations,
        derivative_violations=derivative_violations,
        samples=samples,
    )
    logger.info(f"Núcleo en z={z}: tasa efectiva {result.effective_rate:.4f}, "
                f"{violations} violaciones de la envolvente")
    return result
