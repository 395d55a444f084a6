"""
Módulo de solvers espectrales.

Este módulo calcula los autopares de un operador dentro de una ventana del
primer gap (shift-invert disperso con certificado de completitud por inercia,
o diagonalización densa para problemas pequeños), las ramas espectrales del
operador de fibra 1D de cada pared y los proyectores espectrales como bases
ortonormales.
"""

import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from loguru import logger
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs, splu

from .errors import DegeneracyError, IncompleteSpectrumError, InputError, PreconditionError, SolverError
from .geometry import build_grid, wall_potential
from .models import (
    AssembledOperator,
    EigenPair,
    Grid,
    ModelConfig,
    ProjectorFrame,
    Side,
    SolverOptions,
    SpectralBranch,
    WindowSpectrum,
)
from config.settings import ERROR_MESSAGES, INFO_MESSAGES


# Métodos aceptados por solve_window
METHODS = ("auto", "sparse", "dense")

# Desplazamiento relativo del shift en cada reintento de factorización
_SHIFT_NUDGE = 1e-7


def _identity(n: int) -> sparse.csc_matrix:
    return sparse.identity(n, dtype=complex, format="csc")


def _shifted_lu(matrix: sparse.spmatrix, sigma: float, symmetric: bool = False):
    """LU dispersa de H − σ; con ``symmetric`` se fuerza pivoteo diagonal."""
    shifted = sparse.csc_matrix(matrix - sigma * _identity(matrix.shape[0]))
    if symmetric:
        return splu(shifted, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                    options={'SymmetricMode': True})
    return splu(shifted)


def inertia_count(matrix: sparse.spmatrix, sigma: float) -> Optional[int]:
    """
    Número de autovalores menores que σ por la ley de inercia de Sylvester.

    Con pivoteo diagonal y permutación simétrica, H − σ = P^T L U P con
    diag(U) real; el número de pivotes negativos es ν(H − σ).

    Args:
        matrix: Matriz hermítica dispersa
        sigma: Shift real

    Returns:
        Optional[int]: Conteo, o None si las permutaciones de filas y columnas difieren

    Raises:
        RuntimeError: Si la factorización es exactamente singular
    """
    lu = _shifted_lu(matrix, sigma, symmetric=True)
    if not np.array_equal(lu.perm_r, lu.perm_c):
        logger.debug(f"Permutaciones asimétricas en σ={sigma}: sin conteo de inercia")
        return None
    return int(np.count_nonzero(lu.U.diagonal().real < 0.0))


def _inertia_with_retries(matrix: sparse.spmatrix, sigma: float, retries: int) -> Tuple[Optional[int], float]:
    """Conteo de inercia desplazando σ si el pivote es exactamente nulo."""
    scale = max(1.0, abs(sigma))
    for attempt in range(retries + 1):
        shift = sigma + attempt * _SHIFT_NUDGE * scale
        try:
            return inertia_count(matrix, shift), shift
        except RuntimeError as exc:
            logger.warning(f"Factorización singular en σ={shift} (intento {attempt + 1}): {exc}")
    raise SolverError(ERROR_MESSAGES['factorization_failed'].format(sigma, retries))


def _shift_invert(matrix: sparse.spmatrix, sigma: float, k: int, retries: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    k autopares más cercanos a σ por shift-invert sobre (H − σ)⁻¹.

    Returns:
        Tuple: (energías, vectores, shift efectivo)
    """
    n = matrix.shape[0]
    k = min(k, n - 2)
    scale = max(1.0, abs(sigma))

    for attempt in range(retries + 1):
        shift = sigma + attempt * _SHIFT_NUDGE * scale
        try:
            lu = _shifted_lu(matrix, shift)
        except RuntimeError as exc:
            logger.warning(f"Factorización fallida en σ={shift} (intento {attempt + 1}): {exc}")
            continue

        inverse = LinearOperator((n, n), matvec=lambda b: lu.solve(np.asarray(b, dtype=complex)),
                                 dtype=np.complex128)
        try:
            nu, vectors = eigs(inverse, k=k, which="LM", ncv=min(n - 1, max(2 * k + 1, 20)), tol=0.0)
        except ArpackNoConvergence as exc:
            logger.warning(f"ARPACK sin convergencia en σ={shift}: {exc}")
            continue

        energies = shift + 1.0 / nu.real
        return energies, vectors, shift

    raise SolverError(ERROR_MESSAGES['factorization_failed'].format(sigma, retries))


def _rayleigh_ritz(matrix: sparse.spmatrix, vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ortonormaliza el subespacio y diagonaliza H proyectado sobre él."""
    if vectors.shape[1] == 0:
        return np.zeros(0), vectors
    basis, _ = np.linalg.qr(vectors)
    projected = basis.conj().T @ (matrix @ basis)
    projected = 0.5 * (projected + projected.conj().T)
    energies, rotation = scipy.linalg.eigh(projected)
    return energies, basis @ rotation


def _residuals(matrix: sparse.spmatrix, energies: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    if vectors.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.norm(matrix @ vectors - vectors * energies, axis=0)


def boundary_mass(grid: Grid, psi: np.ndarray, width: float) -> float:
    """Masa de ψ a menos de ``width`` de las fronteras truncadas en x."""
    layer = (grid.x <= grid.x[0] + width) | (grid.x >= grid.x[-1] - width)
    density = np.abs(psi.reshape(grid.n_x, grid.n_y)) ** 2
    return float(density[layer].sum() / density.sum())


def _dense_window(matrix: sparse.spmatrix, window: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    """Autopares densos con energía en (E_lo, E_hi)."""
    dense = matrix.toarray()
    energies, vectors = scipy.linalg.eigh(dense, subset_by_value=(window[0], window[1]))
    keep = energies < window[1]
    return energies[keep], vectors[:, keep]


def _sparse_window(
    matrix: sparse.spmatrix,
    window: Tuple[float, float],
    solver: SolverOptions,
    metadata: dict,
) -> Tuple[np.ndarray, np.ndarray]:
    """Shift-invert en el centro de la ventana con conteo certificado."""
    low, high = window
    retries = solver.max_shift_retries
    below_low, _ = _inertia_with_retries(matrix, low, retries)
    below_high, _ = _inertia_with_retries(matrix, high, retries)

    center = 0.5 * (low + high)

    def inside(values: np.ndarray) -> np.ndarray:
        return (values > low) & (values < high)

    if below_low is not None and below_high is not None:
        expected = below_high - below_low
        metadata.update({'certificate': 'inertia', 'inertia_low': below_low, 'inertia_high': below_high})
        if expected == 0:
            return np.zeros(0), np.zeros((matrix.shape[0], 0), dtype=complex)

        k = expected + 2
        energies, vectors, shift = _shift_invert(matrix, center, k, retries)
        if np.count_nonzero(inside(energies)) < expected:
            k = expected + 10
            energies, vectors, shift = _shift_invert(matrix, center, k, retries)
    else:
        # Conteo por shift: se piden pares hasta que el más lejano salga de la ventana
        metadata['certificate'] = 'shift-count'
        k = 8
        while True:
            energies, vectors, shift = _shift_invert(matrix, center, k, retries)
            if not np.all(inside(energies)) or k >= matrix.shape[0] - 2:
                break
            k *= 2
        expected = int(np.count_nonzero(inside(energies)))

    metadata.update({'shift': shift, 'requested': k})
    keep = inside(energies)
    energies, vectors = _rayleigh_ritz(matrix, vectors[:, keep])

    found = int(np.count_nonzero(inside(energies)))
    if found != expected:
        logger.error(f"Espectro incompleto en ({low}, {high}): {expected} esperados, {found} encontrados")
        raise IncompleteSpectrumError(ERROR_MESSAGES['incomplete_spectrum'].format(low, high, expected, found))
    return energies, vectors


def solve_window(
    op: AssembledOperator,
    window: Tuple[float, float],
    tol_eig: Optional[float] = None,
    solver: Optional[SolverOptions] = None,
    method: str = "auto",
) -> WindowSpectrum:
    """
    Calcula todos los autopares de un operador en una ventana de energía.

    La completitud se certifica con conteos de inercia en los extremos (o
    con el conteo por shift si la factorización no es simétrica). Los pares
    con más de la mitad de su masa junto a una frontera truncada se cuentan
    como artefactos y se excluyen de la lista física.

    Args:
        op: Operador ensamblado
        window: Intervalo abierto (E_lo, E_hi)
        tol_eig: Residuo máximo (por defecto el de ``solver``)
        solver: Tolerancias del solver
        method: 'auto', 'sparse' o 'dense'

    Returns:
        WindowSpectrum: Pares ordenados por energía

    Raises:
        IncompleteSpectrumError: Si el conteo no coincide con el certificado
        PreconditionError: Si la ventana no está dentro de (B/2 + V0, 3B/2 − V0)
        SolverError: Si la factorización falla tras los reintentos o un residuo excede tol_eig
    """
    solver = solver or SolverOptions()
    tol_eig = tol_eig if tol_eig is not None else solver.tol_eig
    low, high = float(window[0]), float(window[1])
    if not low < high:
        raise InputError(f"Ventana vacía: ({low}, {high})")
    if method not in METHODS:
        raise InputError(f"Método desconocido: {method} (disponibles: {', '.join(METHODS)})")
    gap_low, gap_high = op.gap_region
    if not (gap_low < low and high < gap_high):
        raise PreconditionError(ERROR_MESSAGES['window_outside_gap'].format(low, high, gap_low, gap_high))

    matrix = op.matrix
    use_dense = method == "dense" or (method == "auto" and op.size < solver.dense_threshold)
    metadata = {
        'method': 'dense' if use_dense else 'shift-invert',
        'tol_eig': tol_eig,
        'operator': op.variant.label,
        'checksum': op.checksum,
        'size': op.size,
    }

    if use_dense:
        energies, vectors = _dense_window(matrix, (low, high))
        metadata['certificate'] = 'dense'
    else:
        energies, vectors = _sparse_window(matrix, (low, high), solver, metadata)

    order = np.argsort(energies, kind="stable")
    energies, vectors = energies[order], vectors[:, order]
    residuals = _residuals(matrix, energies, vectors)
    if residuals.size and residuals.max() > tol_eig:
        logger.error(f"Residuo {residuals.max():.2e} excede tol_eig={tol_eig:.1e}")
        raise SolverError(f"Residuo {residuals.max():.3e} mayor que tol_eig={tol_eig:.1e} en {op.variant.label}")

    width = solver.boundary_layer / math.sqrt(op.B)
    pairs: List[EigenPair] = []
    artifacts: List[float] = []
    for index, energy in enumerate(energies):
        psi = vectors[:, index]
        if boundary_mass(op.grid, psi, width) > 0.5:
            artifacts.append(float(energy))
            continue
        pairs.append(EigenPair(E=float(energy), psi=psi, residual=float(residuals[index])))

    metadata.update({'count': len(pairs), 'artifacts': len(artifacts)})
    logger.debug(INFO_MESSAGES['window_solved'].format(low, high, len(pairs), len(artifacts)))
    return WindowSpectrum(pairs=pairs, window=(low, high), metadata=metadata, artifacts=artifacts)


def nearest_eigenvalue(op: AssembledOperator, target: float, solver: Optional[SolverOptions] = None) -> float:
    """
    Autovalor de op más cercano a una energía real.

    Args:
        op: Operador ensamblado
        target: Energía de referencia
        solver: Tolerancias del solver

    Returns:
        float: Autovalor más cercano
    """
    solver = solver or SolverOptions()
    if op.size < solver.dense_threshold:
        energies = scipy.linalg.eigvalsh(op.matrix.toarray())
        return float(energies[np.argmin(np.abs(energies - target))])

    try:
        energies, _, _ = _shift_invert(op.matrix, float(target), 1, solver.max_shift_retries)
    except SolverError:
        # Sin factorización posible: target es autovalor a precisión de máquina
        return float(target)
    return float(energies[0])


# ---------------------------------------------------------------------------
# Ramas espectrales del operador de fibra
# ---------------------------------------------------------------------------

def fiber_diagonals(
    side,
    k: float,
    cfg: ModelConfig,
    grid: Grid,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Diagonales del operador de fibra ½p_x² + (1 − cos((k − Bx)h_y))/h_y² + U_α.

    Es la restricción del estencil 2D a la onda plana e^{iky}.

    Returns:
        Tuple: (diagonal principal, subdiagonal)
    """
    side = Side.parse(side)
    x = grid.x
    kinetic = 1.0 / grid.h_x ** 2
    transverse = (1.0 - np.cos((k - cfg.B * x) * grid.h_y)) / grid.h_y ** 2
    diagonal = kinetic + transverse + wall_potential(x, side, cfg)
    off = np.full(x.size - 1, -0.5 / grid.h_x ** 2)
    return diagonal, off


def fiber_eigenvalue(side, n: int, k: float, cfg: ModelConfig, grid: Grid) -> float:
    """n-ésimo autovalor del operador de fibra en el momento k."""
    diagonal, off = fiber_diagonals(side, k, cfg, grid)
    values = scipy.linalg.eigh_tridiagonal(diagonal, off, eigvals_only=True,
                                           select="i", select_range=(n, n))
    return float(values[0])


def fiber_state(side, n: int, k: float, cfg: ModelConfig, grid: Grid) -> Tuple[float, np.ndarray]:
    """
    Autopar n del operador de fibra y su extensión a la malla 2D.

    Returns:
        Tuple: (energía, ψ(x, y) = φ(x) e^{iky} normalizado y aplanado)
    """
    diagonal, off = fiber_diagonals(side, k, cfg, grid)
    values, vectors = scipy.linalg.eigh_tridiagonal(diagonal, off, select="i", select_range=(n, n))
    phi = vectors[:, 0]
    wave = np.exp(1j * k * grid.y) / math.sqrt(grid.n_y)
    psi = np.outer(phi, wave).ravel()
    return float(values[0]), psi / np.linalg.norm(psi)


def default_branch_range(cfg: ModelConfig, side, flux: Optional[float] = None) -> np.ndarray:
    """
    Índices m con centro de guía en la muestra y hasta 3/√B más allá de la pared.

    El lado opuesto a la pared se corta en el borde de la muestra para que los
    estados no toquen la frontera truncada de la malla.
    """
    side = Side.parse(side)
    flux = cfg.flux if flux is None else flux
    half = 0.5 * cfg.L
    reach = 3.0 * cfg.magnetic_length
    if side == Side.LEFT:
        lower, upper = -half - reach, half
    else:
        lower, upper = -half, half + reach

    def to_m(center: float) -> float:
        return (cfg.B * center - flux / cfg.L) * cfg.L / (2.0 * math.pi)

    return np.arange(int(math.ceil(to_m(lower))), int(math.floor(to_m(upper))) + 1)


def solve_branch(
    side,
    n: int,
    m_range: Iterable[int],
    cfg: ModelConfig,
    flux: Optional[float] = None,
    solver: Optional[SolverOptions] = None,
    grid: Optional[Grid] = None,
) -> SpectralBranch:
    """
    Rama k ↦ ε_n^α(k) para k = 2πm/L + Φ/L.

    La derivada se obtiene por diferencias centradas con paso η y
    refinamiento de Richardson: (4D(η/2) − D(η))/3.

    Args:
        side: Lado de la pared
        n: Índice de banda
        m_range: Índices enteros de momento
        cfg: Configuración del modelo
        flux: Flujo Φ (por defecto el de la configuración)
        solver: Tolerancias (paso de derivada)
        grid: Malla (por defecto la de la configuración)

    Returns:
        SpectralBranch: Tabla de la rama

    Raises:
        InputError: Si el rango de m está vacío
    """
    side = Side.parse(side)
    solver = solver or SolverOptions()
    flux = cfg.flux if flux is None else float(flux)
    grid = grid if grid is not None else build_grid(cfg)

    m = np.array(sorted(set(int(value) for value in m_range)), dtype=int)
    if m.size == 0:
        raise InputError(ERROR_MESSAGES['empty_range'])

    k = 2.0 * math.pi * m / cfg.L + flux / cfg.L
    eta = solver.derivative_step

    def central(kk: float, step: float) -> float:
        return (fiber_eigenvalue(side, n, kk + step, cfg, grid)
                - fiber_eigenvalue(side, n, kk - step, cfg, grid)) / (2.0 * step)

    energies = np.array([fiber_eigenvalue(side, n, kk, cfg, grid) for kk in k])
    derivatives = np.array([(4.0 * central(kk, 0.5 * eta) - central(kk, eta)) / 3.0 for kk in k])

    logger.debug(f"Rama {side.value}, n={n}: {m.size} puntos, Φ={flux:.4f}")
    return SpectralBranch(
        side=side,
        n=int(n),
        m=m,
        k=k,
        energies=energies,
        derivatives=derivatives,
        flux=flux,
        L=cfg.L,
    )


def branch_spacing(branch: SpectralBranch, window: Tuple[float, float]) -> float:
    """Mínima separación entre autovalores consecutivos de la rama dentro de la ventana."""
    values = np.sort(branch.energies[branch.within(window)])
    if values.size < 2:
        return float('nan')
    return float(np.min(np.diff(values)))


# ---------------------------------------------------------------------------
# Proyectores espectrales
# ---------------------------------------------------------------------------

def spectral_projector(
    op: AssembledOperator,
    energy_set: Sequence[float],
    radius: float,
    spectrum: Optional[WindowSpectrum] = None,
    solver: Optional[SolverOptions] = None,
) -> ProjectorFrame:
    """
    Base ortonormal del rango del proyector sobre los discos |z − E| ≤ radio.

    Args:
        op: Operador ensamblado
        energy_set: Energías centrales
        radius: Radio de cada disco
        spectrum: Espectro precalculado que cubre [E − 2·radio, E + 2·radio]
        solver: Tolerancias del solver

    Returns:
        ProjectorFrame: Base ortonormal y autovalores incluidos

    Raises:
        DegeneracyError: Si hay autovalores en el anillo radio < |E' − E| ≤ 2·radio
        InputError: Si algún disco no contiene autovalores
    """
    centers = np.atleast_1d(np.asarray(energy_set, dtype=float))
    if spectrum is None:
        window = (float(centers.min() - 2.0 * radius), float(centers.max() + 2.0 * radius))
        spectrum = solve_window(op, window, solver=solver)

    energies = spectrum.energies
    selected = np.zeros(energies.size, dtype=bool)
    for center in centers:
        gap = np.abs(energies - center)
        offending = energies[(gap > radius) & (gap <= 2.0 * radius)]
        if offending.size:
            logger.error(f"Aislamiento violado alrededor de E={center}")
            raise DegeneracyError(ERROR_MESSAGES['degeneracy'].format(
                float(np.min(np.abs(offending - center))), center, radius))
        inside = gap <= radius
        if not inside.any():
            raise InputError(f"No hay autovalores a distancia {radius:.1e} de E={center}")
        selected |= inside

    vectors = spectrum.vectors()[:, selected]
    frame, _ = np.linalg.qr(vectors)
    return ProjectorFrame(frame=frame, energies=energies[selected], centers=centers, radius=float(radius),
                          eigenvectors=vectors)


def projector_defect(projector: ProjectorFrame) -> float:
    """
    ‖P² − P‖ del proyector ensamblado con los autovectores del solver, P = VV*.

    Con V = QR, P² − P = Q·R(V*V − I)R*·Q*, así que la norma se calcula en
    el espacio r×r sin formar la matriz n×n. Sin autovectores crudos se
    usa ``frame``.
    """
    V = projector.eigenvectors if projector.eigenvectors is not None else projector.frame
    if V.shape[1] == 0:
        return 0.0
    gram = V.conj().T @ V
    _, R = np.linalg.qr(V)
    defect = R @ (gram - np.eye(gram.shape[0])) @ R.conj().T
    return float(np.linalg.norm(defect, 2))


def subspace_distance(frame_a: ProjectorFrame, frame_b: ProjectorFrame) -> float:
    """
    ‖P_a − P_b‖ como el seno del mayor ángulo principal.

    Returns:
        float: Distancia en [0, 1]; 1 si los rangos difieren
    """
    if frame_a.rank != frame_b.rank:
        return 1.0
    if frame_a.rank == 0:
        return 0.0
    angles = scipy.linalg.subspace_angles(frame_a.frame, frame_b.frame)
    return float(np.sin(np.max(angles)))
