"""
Módulo de desacoplamiento geométrico del resolvente.

Este módulo construye los indicadores J̃_i y los cortes suaves J_i de las tres
franjas (izquierda, centro, derecha), el operador de acoplamiento
𝒦(z) = Σ_i [½p_x², J_i] R_i(z) J̃_i y su norma por iteración de potencias.
Con H J_i = H_i J_i se cumple Σ_i J_i R_i J̃_i = R(z)(1 − 𝒦(z)).
"""

import math
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, splu

from .errors import GeometryError, SingularResolventError, SolverError
from .models import (
    AssembledOperator,
    CutoffSystem,
    DisorderField,
    Grid,
    ModelConfig,
    OperatorTag,
    OperatorVariant,
    SolverOptions,
)
from .eigensolver import nearest_eigenvalue
from .geometry import build_grid, build_regions
from .operators import assemble, kinetic_x
from config.settings import ERROR_MESSAGES


# Orden canónico de las franjas
STRIPS = ('l', 'b', 'r')

# Variante asociada a cada franja
STRIP_VARIANTS = {
    'l': OperatorTag.LEFT,
    'b': OperatorTag.BULK,
    'r': OperatorTag.RIGHT,
}

# Cotas de la rampa quíntica 6t⁵ − 15t⁴ + 10t³ en [0, 1]
RAMP_FIRST_BOUND = 15.0 / 8.0
RAMP_SECOND_BOUND = 10.0 / math.sqrt(3.0)


def smoothstep(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rampa quíntica C² de 0 a 1 sobre [0, 1] con sus dos primeras derivadas.

    Args:
        t: Abscisas (se recortan a [0, 1])

    Returns:
        Tuple: (S, S', S'')
    """
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    value = t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)
    first = 30.0 * t * t * (1.0 - t) ** 2
    second = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    return value, first, second


def cutoff_breakpoints(cfg: ModelConfig) -> Dict[str, Tuple[float, float]]:
    """Intervalos de transición de ancho uno de cada corte suave."""
    half = 0.5 * cfg.L
    D = cfg.D
    return {
        'l': (-half + 0.75 * D, -half + 0.75 * D + 1.0),
        'r': (half - 0.75 * D - 1.0, half - 0.75 * D),
        'b': (half - 0.25 * D, half - 0.25 * D + 1.0),
    }


def build_cutoffs(cfg: ModelConfig, grid: Optional[Grid] = None) -> CutoffSystem:
    """
    Construye los indicadores y cortes suaves sobre la malla en x.

    J̃_ℓ = 1 para x ≤ −L/2 + D/2, J̃_r = 1 para x ≥ L/2 − D/2 y J̃_b el resto.
    J_ℓ vale 1 hasta −L/2 + 3D/4 y 0 desde −L/2 + 3D/4 + 1; J_r es su espejo;
    J_b vale 1 para |x| ≤ L/2 − D/4 y 0 para |x| ≥ L/2 − D/4 + 1.

    Args:
        cfg: Configuración del modelo
        grid: Malla (por defecto la de la configuración)

    Returns:
        CutoffSystem: Indicadores, cortes y derivadas

    Raises:
        GeometryError: Si las transiciones izquierda y derecha se solapan
    """
    if 1.5 * cfg.D + 2.0 >= cfg.L:
        logger.error(f"Cortes solapados para L={cfg.L}, D={cfg.D}")
        raise GeometryError(ERROR_MESSAGES['cutoff_overlap'].format(cfg.D, cfg.L))

    grid = grid if grid is not None else build_grid(cfg)
    x = grid.x
    half = 0.5 * cfg.L
    breakpoints = cutoff_breakpoints(cfg)

    left = (x <= -half + 0.5 * cfg.D).astype(float)
    right = (x >= half - 0.5 * cfg.D).astype(float)
    sharp = {'l': left, 'b': 1.0 - left - right, 'r': right}

    s_l, d1_l, d2_l = smoothstep(x - breakpoints['l'][0])
    s_r, d1_r, d2_r = smoothstep(x - breakpoints['r'][0])
    s_b, d1_b, d2_b = smoothstep(np.abs(x) - breakpoints['b'][0])

    smooth = {'l': 1.0 - s_l, 'b': 1.0 - s_b, 'r': s_r}
    first = {'l': -d1_l, 'b': -d1_b * np.sign(x), 'r': d1_r}
    second = {'l': -d2_l, 'b': -d2_b, 'r': d2_r}

    for strip in STRIPS:
        if np.max(np.abs(first[strip])) > RAMP_FIRST_BOUND + 1e-12:
            raise GeometryError(f"|J'_{strip}| supera {RAMP_FIRST_BOUND}")
        if np.max(np.abs(second[strip])) > RAMP_SECOND_BOUND + 1e-12:
            raise GeometryError(f"|J''_{strip}| supera {RAMP_SECOND_BOUND:.4f}")

    return CutoffSystem(
        x=x,
        sharp=sharp,
        smooth=smooth,
        first=first,
        second=second,
        breakpoints=breakpoints,
    )


def constant_cutoffs(grid: Grid, value: float = 1.0) -> CutoffSystem:
    """Sistema con cortes constantes en toda la malla; su conmutador es nulo."""
    x = grid.x
    ones = np.ones_like(x)
    zeros = np.zeros_like(x)
    return CutoffSystem(
        x=x,
        sharp={'l': ones.copy(), 'b': zeros.copy(), 'r': zeros.copy()},
        smooth={strip: value * ones for strip in STRIPS},
        first={strip: zeros.copy() for strip in STRIPS},
        second={strip: zeros.copy() for strip in STRIPS},
        breakpoints={strip: (float(x[0]), float(x[-1])) for strip in STRIPS},
    )


def expand_profile(profile: np.ndarray, grid: Grid) -> np.ndarray:
    """Extiende un perfil en x a toda la malla (x como índice lento)."""
    return np.repeat(np.asarray(profile, dtype=float), grid.n_y)


def cutoff_commutator(grid: Grid, profile: np.ndarray) -> sparse.csr_matrix:
    """[½p_x², J] exacto en la malla para un corte J(x)."""
    T = kinetic_x(grid)
    J = sparse.diags(expand_profile(profile, grid), 0, dtype=complex)
    commutator = (T @ J - J @ T).tocsr()
    commutator.eliminate_zeros()
    return commutator


def locality_defect(full: AssembledOperator, part: AssembledOperator, profile: np.ndarray) -> float:
    """max |(H_ω − H_i) J_i|: nulo cuando H_ω J_i = H_i J_i."""
    difference = (full.matrix - part.matrix) @ sparse.diags(expand_profile(profile, full.grid), 0)
    if difference.nnz == 0:
        return 0.0
    return float(np.max(np.abs(difference.data)))


def _factorize(matrix: sparse.spmatrix, label: str):
    """Factorización LU dispersa compleja de z − H_i."""
    try:
        return splu(sparse.csc_matrix(matrix))
    except RuntimeError as exc:
        logger.error(f"Falló la factorización de {label}: {exc}")
        raise SolverError(ERROR_MESSAGES['factorization_failed'].format(label, 0)) from exc


class KappaOperator(LinearOperator):
    """
    Operador 𝒦(z) aplicado sin densificar.

    Cada resolvente R_i(z) se aplica con una factorización LU dispersa de
    (z − H_i); el adjunto usa la misma factorización traspuesta conjugada.
    """

    def __init__(self, z: complex, parts: Dict[str, AssembledOperator], cutoffs: CutoffSystem):
        grid = parts['l'].grid
        super().__init__(dtype=np.complex128, shape=(grid.size, grid.size))
        self.z = complex(z)
        self.grid = grid
        self.parts = parts
        self.cutoffs = cutoffs

        identity = sparse.identity(grid.size, dtype=complex, format="csc")
        self.factors = {
            strip: _factorize(self.z * identity - parts[strip].matrix, parts[strip].variant.label)
            for strip in STRIPS
        }
        self.commutators = {strip: cutoff_commutator(grid, cutoffs.smooth[strip]) for strip in STRIPS}
        self.sharp = {strip: expand_profile(cutoffs.sharp[strip], grid) for strip in STRIPS}
        self.smooth = {strip: expand_profile(cutoffs.smooth[strip], grid) for strip in STRIPS}

    def resolvent(self, strip: str, b: np.ndarray) -> np.ndarray:
        """R_i(z) b."""
        return self.factors[strip].solve(np.asarray(b, dtype=complex))

    def _matvec(self, b):
        b = np.asarray(b, dtype=complex).ravel()
        result = np.zeros(self.shape[0], dtype=complex)
        for strip in STRIPS:
            if self.commutators[strip].nnz == 0:
                continue
            result += self.commutators[strip] @ self.resolvent(strip, self.sharp[strip] * b)
        return result

    def _rmatvec(self, b):
        b = np.asarray(b, dtype=complex).ravel()
        result = np.zeros(self.shape[0], dtype=complex)
        for strip in STRIPS:
            if self.commutators[strip].nnz == 0:
                continue
            inner = self.commutators[strip].conj().T @ b
            result += self.sharp[strip] * self.factors[strip].solve(inner, trans='H')
        return result

    def glued_resolvent(self, b: np.ndarray) -> np.ndarray:
        """Σ_i J_i R_i(z) J̃_i b."""
        b = np.asarray(b, dtype=complex).ravel()
        result = np.zeros(self.shape[0], dtype=complex)
        for strip in STRIPS:
            result += self.smooth[strip] * self.resolvent(strip, self.sharp[strip] * b)
        return result


def check_resolvent_distance(
    z: complex,
    operator: AssembledOperator,
    solver: SolverOptions,
) -> float:
    """
    Distancia de z al espectro de un operador.

    Raises:
        SingularResolventError: Si la distancia es menor que ``min_resolvent_distance``
    """
    nearest = nearest_eigenvalue(operator, z.real)
    distance = math.hypot(z.real - nearest, z.imag)
    if distance < solver.min_resolvent_distance:
        logger.error(f"z={z} demasiado cerca de σ({operator.variant.label})")
        raise SingularResolventError(ERROR_MESSAGES['singular_resolvent'].format(
            z, distance, operator.variant.label, solver.min_resolvent_distance))
    return distance


def assemble_kappa(
    z: complex,
    cfg: ModelConfig,
    field: Optional[DisorderField],
    cutoffs: Optional[CutoffSystem] = None,
    solver: Optional[SolverOptions] = None,
    grid: Optional[Grid] = None,
    check_distance: bool = True,
) -> KappaOperator:
    """
    Ensambla 𝒦(z) a partir de H_ℓ, H_b y H_r.

    Args:
        z: Energía compleja
        cfg: Configuración del modelo
        field: Campo de desorden sobre Λ
        cutoffs: Sistema de cortes (por defecto el de la configuración)
        solver: Tolerancias del solver
        grid: Malla (por defecto la de la configuración)
        check_distance: Verificar dist(z, σ(H_i)) antes de factorizar

    Returns:
        KappaOperator: Operador lineal 𝒦(z)

    Raises:
        SingularResolventError: Si z está demasiado cerca de algún σ(H_i)
    """
    solver = solver or SolverOptions()
    grid = grid if grid is not None else build_grid(cfg)
    regions = build_regions(cfg)
    cutoffs = cutoffs if cutoffs is not None else build_cutoffs(cfg, grid)
    z = complex(z)

    low, high = cfg.gap_window
    if not low < z.real < high:
        logger.warning(f"Re z={z.real:.4f} fuera de Δ_ε=({low:.4f}, {high:.4f})")

    parts = {
        strip: assemble(OperatorVariant(tag, with_flux=True), cfg, field, grid=grid, regions=regions)
        for strip, tag in STRIP_VARIANTS.items()
    }
    if check_distance:
        for part in parts.values():
            check_resolvent_distance(z, part, solver)

    kappa = KappaOperator(z, parts, cutoffs)
    logger.debug(f"𝒦(z) ensamblado en z={z} sobre {grid.size} incógnitas")
    return kappa


def operator_norm(
    operator: LinearOperator,
    rtol: float = 1e-6,
    maxiter: int = 500,
    seed: int = 0,
) -> float:
    """
    ‖A‖ por iteración de potencias sobre A*A.

    Args:
        operator: Operador lineal con ``matvec`` y ``rmatvec``
        rtol: Tolerancia relativa sobre ‖A‖²
        maxiter: Máximo de iteraciones
        seed: Semilla del vector inicial

    Returns:
        float: Estimación de la norma de operador
    """
    rng = np.random.default_rng(seed)
    n = operator.shape[1]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)

    estimate = 0.0
    for iteration in range(1, maxiter + 1):
        w = operator.matvec(v)
        u = operator.rmatvec(w)
        norm_u = np.linalg.norm(u)
        if norm_u == 0.0:
            return 0.0

        updated = float(np.vdot(v, u).real)
        v = u / norm_u
        if abs(updated - estimate) <= rtol * abs(updated):
            logger.debug(f"Iteración de potencias convergió en {iteration} pasos")
            return math.sqrt(max(updated, 0.0))
        estimate = updated

    logger.warning(f"Iteración de potencias sin convergencia tras {maxiter} pasos")
    return math.sqrt(max(estimate, 0.0))


def resolvent_identity_residual(
    kappa: KappaOperator,
    full: AssembledOperator,
    b: Optional[np.ndarray] = None,
    seed: int = 0,
) -> float:
    """
    Residuo relativo de R(z)(1 − 𝒦(z)) b = Σ_i J_i R_i J̃_i b.

    Args:
        kappa: Operador 𝒦(z)
        full: H_ω ensamblado sobre la misma malla
        b: Columna de prueba (por defecto aleatoria)
        seed: Semilla de la columna aleatoria

    Returns:
        float: ‖lado izquierdo − lado derecho‖ / ‖lado derecho‖
    """
    if b is None:
        rng = np.random.default_rng(seed)
        b = rng.standard_normal(kappa.shape[0]) + 1j * rng.standard_normal(kappa.shape[0])

    identity = sparse.identity(full.size, dtype=complex, format="csc")
    factor = _factorize(kappa.z * identity - full.matrix, full.variant.label)

    lhs = factor.solve(b - kappa.matvec(b))
    rhs = kappa.glued_resolvent(b)
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
