"""
Modelos de datos del laboratorio de estados de borde.

Este módulo define las estructuras de datos utilizadas en todo el laboratorio:
la configuración validada del modelo (pydantic), la malla, las regiones de red,
el campo de desorden, los operadores ensamblados y los reportes de las campañas.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse

from config.settings import (
    PHYSICS_DEFAULTS,
    SOLVER_SETTINGS,
    EXPERIMENT_SETTINGS,
    IO_SETTINGS,
    ERROR_MESSAGES,
)


class Side(Enum):
    """Lado de la pared confinante."""

    LEFT = "l"
    RIGHT = "r"

    @classmethod
    def parse(cls, value) -> "Side":
        """Acepta 'l', 'left', 'izquierda', 'r', 'right', 'derecha'."""
        if isinstance(value, Side):
            return value
        text = str(value).strip().lower()
        if text in ("l", "left", "izquierda", "izq", "ℓ"):
            return cls.LEFT
        if text in ("r", "right", "derecha", "der"):
            return cls.RIGHT
        raise ValueError(f"Lado desconocido: {value}")


class Classification(Enum):
    """Clasificación de un autoestado por su localización y velocidad."""

    LEFT_EDGE = "left-edge"
    RIGHT_EDGE = "right-edge"
    AMBIGUOUS = "ambiguous"


class OperatorTag(Enum):
    """Variantes de operador sobre el cilindro."""

    LANDAU = "H_L"             # Landau libre
    LEFT_CLEAN = "H_l0"        # H_L + U_ℓ
    RIGHT_CLEAN = "H_r0"       # H_L + U_r
    LEFT = "H_l"               # H_L + U_ℓ + V|Λ_ℓ
    RIGHT = "H_r"              # H_L + U_r + V|Λ_r
    BULK = "H_b"               # H_L + V|Λ_b
    FULL = "H_omega"           # H_L + U_ℓ + U_r + V|Λ
    AUX_1 = "H_1"              # H_L + V|Λ_1
    AUX_2 = "H_2"              # H_L + U_ℓ + V|Λ_2


# ---------------------------------------------------------------------------
# Configuración (pydantic)
# ---------------------------------------------------------------------------

class WallSpec(BaseModel):
    """
    Pared de ley de potencia U = c|x ∓ L/2|^m fuera de la muestra.

    Attributes:
        c: Coeficiente de crecimiento
        m: Exponente de crecimiento (≥ 2)
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    c: float = Field(gt=0)
    m: float = Field(ge=2)

    def truncation(self, B: float) -> float:
        """Distancia a la muestra donde U alcanza WALL_CUTOFF·B."""
        return (PHYSICS_DEFAULTS.WALL_CUTOFF * B / self.c) ** (1.0 / self.m)


class GridSpec(BaseModel):
    """
    Controles de discretización.

    Attributes:
        n_x: Puntos interiores en x (Dirichlet fuera del intervalo)
        n_y: Puntos en y (periódico)
        x_min: Primer punto de la malla en x
        x_max: Último punto de la malla en x
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_x: int = Field(ge=3)
    n_y: int = Field(ge=3)
    x_min: float
    x_max: float

    @model_validator(mode="after")
    def _check_order(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min debe ser menor que x_max")
        return self


class ModelConfig(BaseModel):
    """
    Todos los parámetros físicos y geométricos del cilindro.

    Attributes:
        B: Intensidad del campo magnético
        L: Circunferencia del cilindro y separación de las paredes
        V0: Cota de la amplitud del desorden
        wall_left: Pared izquierda (c_ℓ, m_ℓ)
        wall_right: Pared derecha (c_r, m_r)
        flux: Flujo Φ ∈ [0, 2π] a lo largo del eje
        delta: Semiancho de la ventana Δ = (B − δ, B + δ)
        epsilon: Margen ε de Δ_ε = (B/2 + V0 + ε, 3B/2 − V0 − ε)
        density: Identificador de la densidad h de los acoplamientos
        strip_width: Ancho D de la franja de borde (por defecto √L redondeado)
        grid: Malla explícita (por defecto se deriva de B, L y las paredes)
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    B: float = Field(default=PHYSICS_DEFAULTS.B, gt=0)
    L: int = Field(default=PHYSICS_DEFAULTS.L, ge=4)
    V0: float = Field(default=PHYSICS_DEFAULTS.V0, ge=0)
    wall_left: WallSpec = Field(
        default_factory=lambda: WallSpec(c=PHYSICS_DEFAULTS.WALL_LEFT[0], m=PHYSICS_DEFAULTS.WALL_LEFT[1])
    )
    wall_right: WallSpec = Field(
        default_factory=lambda: WallSpec(c=PHYSICS_DEFAULTS.WALL_RIGHT[0], m=PHYSICS_DEFAULTS.WALL_RIGHT[1])
    )
    flux: float = Field(default=PHYSICS_DEFAULTS.FLUX, ge=0, le=2 * math.pi + 1e-12)
    delta: float = Field(default=PHYSICS_DEFAULTS.DELTA, gt=0)
    epsilon: float = Field(default=PHYSICS_DEFAULTS.EPSILON, gt=0)
    density: str = PHYSICS_DEFAULTS.DENSITY
    strip_width: Optional[int] = None
    grid: Optional[GridSpec] = None

    @property
    def D(self) -> int:
        """Ancho de franja: √L redondeado hacia arriba en la mitad."""
        if self.strip_width is not None:
            return self.strip_width
        return int(math.floor(math.sqrt(self.L) + 0.5))

    @property
    def magnetic_length(self) -> float:
        """Longitud magnética 1/√B."""
        return 1.0 / math.sqrt(self.B)

    @property
    def window(self) -> Tuple[float, float]:
        """Ventana objetivo Δ."""
        return (self.B - self.delta, self.B + self.delta)

    @property
    def gap_window(self) -> Tuple[float, float]:
        """Ventana Δ_ε dentro del primer gap."""
        return (0.5 * self.B + self.V0 + self.epsilon, 1.5 * self.B - self.V0 - self.epsilon)

    @property
    def pad_left(self) -> float:
        """Extensión de la malla a la izquierda de la muestra."""
        spacing = PHYSICS_DEFAULTS.MAX_SPACING * self.magnetic_length
        return max(PHYSICS_DEFAULTS.DECAY_PAD * self.magnetic_length,
                   self.wall_left.truncation(self.B)) + spacing

    @property
    def pad_right(self) -> float:
        """Extensión de la malla a la derecha de la muestra."""
        spacing = PHYSICS_DEFAULTS.MAX_SPACING * self.magnetic_length
        return max(PHYSICS_DEFAULTS.DECAY_PAD * self.magnetic_length,
                   self.wall_right.truncation(self.B)) + spacing

    def resolved_grid(self) -> GridSpec:
        """Malla explícita o derivada de la resolución máxima."""
        if self.grid is not None:
            return self.grid
        spacing = PHYSICS_DEFAULTS.MAX_SPACING * self.magnetic_length
        x_min = -0.5 * self.L - self.pad_left
        x_max = 0.5 * self.L + self.pad_right
        n_x = int(math.ceil((x_max - x_min) / spacing)) + 1
        n_y = int(math.ceil(self.L / spacing))
        return GridSpec(n_x=n_x, n_y=n_y, x_min=x_min, x_max=x_max)

    def with_updates(self, **changes) -> "ModelConfig":
        """Copia revalidada con los cambios indicados."""
        data = self.model_dump()
        data.update(changes)
        return ModelConfig(**data)

    def config_hash(self) -> str:
        """Huella SHA-256 de la configuración canónica."""
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    @model_validator(mode="after")
    def _check_invariants(self):
        """Validaciones post-inicialización."""
        if not self.V0 + self.epsilon + self.delta < 0.5 * self.B:
            raise ValueError(ERROR_MESSAGES['window_condition'].format(
                self.V0, self.epsilon, self.delta, 0.5 * self.B))

        if self.D < PHYSICS_DEFAULTS.MIN_STRIP_WIDTH:
            raise ValueError(
                f"El ancho de franja D={self.D} debe ser al menos {PHYSICS_DEFAULTS.MIN_STRIP_WIDTH}")

        grid = self.resolved_grid()
        max_spacing = PHYSICS_DEFAULTS.MAX_SPACING * self.magnetic_length + 1e-12
        h_x = (grid.x_max - grid.x_min) / (grid.n_x - 1)
        h_y = self.L / grid.n_y
        if h_x > max_spacing or h_y > max_spacing:
            raise ValueError(
                f"La malla no resuelve la longitud magnética: h_x={h_x:.4f}, h_y={h_y:.4f} > {max_spacing:.4f}")

        margin = PHYSICS_DEFAULTS.DECAY_PAD * self.magnetic_length
        if not grid.x_min < -0.5 * self.L - margin:
            raise ValueError(f"x_min={grid.x_min} debe ser menor que -L/2 - {margin:.3f}")
        if not grid.x_max > 0.5 * self.L + margin:
            raise ValueError(f"x_max={grid.x_max} debe ser mayor que L/2 + {margin:.3f}")
        return self


class SolverOptions(BaseModel):
    """Tolerancias de los solvers (sección ``solver``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol_eig: float = Field(default=SOLVER_SETTINGS.TOL_EIG, gt=0)
    dense_threshold: int = Field(default=SOLVER_SETTINGS.DENSE_THRESHOLD, ge=0)
    degeneracy_tol: float = Field(default=SOLVER_SETTINGS.DEGENERACY_TOL, gt=0)
    power_rtol: float = Field(default=SOLVER_SETTINGS.POWER_RTOL, gt=0)
    power_maxiter: int = Field(default=SOLVER_SETTINGS.POWER_MAXITER, ge=1)
    derivative_step: float = Field(default=SOLVER_SETTINGS.DERIVATIVE_STEP, gt=0)
    boundary_layer: float = Field(default=SOLVER_SETTINGS.BOUNDARY_LAYER, ge=0)
    max_shift_retries: int = Field(default=SOLVER_SETTINGS.MAX_SHIFT_RETRIES, ge=0)
    min_resolvent_distance: float = Field(default=SOLVER_SETTINGS.MIN_RESOLVENT_DISTANCE, gt=0)


class ExperimentOptions(BaseModel):
    """Parámetros de campañas (sección ``experiments``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    L_list: Tuple[int, ...] = tuple(EXPERIMENT_SETTINGS.L_LIST)
    seeds: int = Field(default=EXPERIMENT_SETTINGS.SEEDS, ge=1)
    master_seed: int = Field(default=EXPERIMENT_SETTINGS.MASTER_SEED, ge=0)
    ensemble_size: int = Field(default=EXPERIMENT_SETTINGS.ENSEMBLE_SIZE, ge=1)
    delta_bars: Tuple[float, ...] = tuple(EXPERIMENT_SETTINGS.DELTA_BARS)
    match_tolerance: float = Field(
        default=EXPERIMENT_SETTINGS.MATCH_TOLERANCE_FACTOR * SOLVER_SETTINGS.TOL_EIG, gt=0)
    neighborhood: int = Field(default=EXPERIMENT_SETTINGS.NEIGHBORHOOD, ge=1)
    ambiguous_velocity: float = Field(default=EXPERIMENT_SETTINGS.AMBIGUOUS_VELOCITY, ge=0)
    ambiguous_bulk_mass: float = Field(default=EXPERIMENT_SETTINGS.AMBIGUOUS_BULK_MASS, ge=0, le=1)
    hypothesis_d0: float = Field(default=EXPERIMENT_SETTINGS.HYPOTHESIS_D0, ge=0)
    flux_points: int = Field(default=EXPERIMENT_SETTINGS.FLUX_POINTS, ge=2)
    z_list: Tuple[float, ...] = tuple(EXPERIMENT_SETTINGS.Z_LIST)
    z_imag: float = EXPERIMENT_SETTINGS.Z_IMAG
    strip_widths: Tuple[int, ...] = tuple(EXPERIMENT_SETTINGS.STRIP_WIDTHS)
    floor: float = Field(default=EXPERIMENT_SETTINGS.FLOOR, gt=0)
    confidence: float = Field(default=EXPERIMENT_SETTINGS.CONFIDENCE, gt=0, lt=1)

    def seed_list(self) -> List[int]:
        """Semillas derivadas de la semilla maestra."""
        return [self.master_seed + index for index in range(self.seeds)]


class IOOptions(BaseModel):
    """Persistencia de resultados (sección ``io``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    outdir: str = IO_SETTINGS.OUTDIR
    significant_digits: int = Field(default=IO_SETTINGS.SIGNIFICANT_DIGITS, ge=3, le=17)
    plot_data: bool = False
    figures: bool = False


class RunConfig(BaseModel):
    """Configuración completa de una ejecución."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    model: ModelConfig = Field(default_factory=ModelConfig)
    solver: SolverOptions = Field(default_factory=SolverOptions)
    experiments: ExperimentOptions = Field(default_factory=ExperimentOptions)
    io: IOOptions = Field(default_factory=IOOptions)

    @model_validator(mode="before")
    @classmethod
    def _derive_match_tolerance(cls, data):
        """Sin match_tolerance explícita, el emparejamiento usa 10·tol_eig del solver."""
        if not isinstance(data, dict) or data.get("solver") is None:
            return data
        solver = data["solver"]
        if isinstance(solver, SolverOptions):
            tol_eig = solver.tol_eig
        else:
            tol_eig = solver.get("tol_eig") if isinstance(solver, dict) else None
        try:
            tol_eig = float(tol_eig)
        except (TypeError, ValueError):
            # Sin tol_eig o inválida: la valida SolverOptions
            return data

        experiments = data.get("experiments")
        if isinstance(experiments, ExperimentOptions):
            if "match_tolerance" in experiments.model_fields_set:
                return data
            experiments = experiments.model_dump(exclude_unset=True)
        elif experiments is not None and not isinstance(experiments, dict):
            return data
        experiments = dict(experiments or {})
        if "match_tolerance" not in experiments:
            experiments["match_tolerance"] = EXPERIMENT_SETTINGS.MATCH_TOLERANCE_FACTOR * tol_eig
        return {**data, "experiments": experiments}

    def config_hash(self) -> str:
        """Huella SHA-256 de toda la configuración."""
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Geometría y desorden
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Grid:
    """
    Malla del cilindro.

    Attributes:
        x: Puntos de la malla en x (Dirichlet fuera del intervalo)
        n_y: Número de puntos en y
        period: Período en y (circunferencia L)
    """

    x: np.ndarray
    n_y: int
    period: float

    @property
    def n_x(self) -> int:
        return int(self.x.size)

    @property
    def h_x(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def h_y(self) -> float:
        return self.period / self.n_y

    @property
    def y(self) -> np.ndarray:
        """Puntos en y sobre [−L/2, L/2)."""
        return -0.5 * self.period + self.h_y * np.arange(self.n_y)

    @property
    def size(self) -> int:
        return self.n_x * self.n_y

    @property
    def cell_area(self) -> float:
        return self.h_x * self.h_y

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Coordenadas (X, Y) aplanadas con x como índice lento."""
        xx, yy = np.meshgrid(self.x, self.y, indexing="ij")
        return xx.ravel(), yy.ravel()

    def descriptor(self) -> Dict:
        """Descriptor serializable de la malla."""
        return {
            'n_x': self.n_x,
            'n_y': self.n_y,
            'x_min': float(self.x[0]),
            'x_max': float(self.x[-1]),
            'period': float(self.period),
        }


@dataclass(frozen=True)
class RegionSpec:
    """
    Región de la red de sitios.

    Attributes:
        name: Nombre de la región (Lambda, Lambda_l, Lambda_r, Lambda_b, Lambda_1, Lambda_2)
        sites: Sitios enteros (n, m) ordenados
    """

    name: str
    sites: Tuple[Tuple[int, int], ...]

    @property
    def size(self) -> int:
        return len(self.sites)

    def contains(self, site: Tuple[int, int]) -> bool:
        return site in set(self.sites)

    def __post_init__(self):
        """Validaciones post-inicialización."""
        if len(set(self.sites)) != len(self.sites):
            raise ValueError(f"La región {self.name} contiene sitios repetidos")


@dataclass(frozen=True, eq=False)
class DisorderField:
    """
    Campo de desorden V_ω sobre una región.

    Attributes:
        seed: Semilla maestra de 64 bits
        region: Región sobre la que hay acoplamientos
        couplings: Valores X_{n,m} ∈ [−1, 1] alineados con ``region.sites``
        density_id: Identificador de la densidad h
        amplitude: Altura a del bump (igual a V0)
        period: Período en y del cilindro
    """

    seed: int
    region: RegionSpec
    couplings: np.ndarray
    density_id: str
    amplitude: float
    period: int

    def __post_init__(self):
        """Validaciones post-inicialización."""
        if self.couplings.shape != (self.region.size,):
            raise ValueError("Debe haber exactamente un acoplamiento por sitio")
        if self.couplings.size and np.max(np.abs(self.couplings)) > 1.0:
            raise ValueError("Todos los acoplamientos deben estar en [−1, 1]")

    def as_dict(self) -> Dict[Tuple[int, int], float]:
        """Mapa sitio → X."""
        return {site: float(x) for site, x in zip(self.region.sites, self.couplings)}

    def to_frame(self) -> pd.DataFrame:
        """Tabla (n, m, X) para auditorías de reproducibilidad."""
        sites = np.array(self.region.sites, dtype=int).reshape(-1, 2)
        return pd.DataFrame({'n': sites[:, 0], 'm': sites[:, 1], 'X': self.couplings})


# ---------------------------------------------------------------------------
# Operadores
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorVariant:
    """
    Variante de operador con su región de desorden.

    Attributes:
        tag: Etiqueta de la variante
        with_flux: Si el flujo Φ de la configuración entra en el operador
    """

    tag: OperatorTag
    with_flux: bool = False

    @property
    def label(self) -> str:
        return f"{self.tag.value}[phi]" if self.with_flux else self.tag.value


@dataclass(frozen=True, eq=False)
class AssembledOperator:
    """
    Matriz hermítica dispersa de una variante sobre una malla.

    Attributes:
        matrix: Matriz CSR compleja
        grid: Malla de discretización
        variant: Variante ensamblada
        B: Campo magnético
        flux_shift: Desplazamiento Φ/L del potencial vector
        potential: Potencial escalar (paredes + desorden) en la malla
        checksum: Huella del ensamblado
        V0: Cota del desorden |V_ω| ≤ V0
    """

    matrix: sparse.csr_matrix
    grid: Grid
    variant: OperatorVariant
    B: float
    flux_shift: float
    potential: np.ndarray
    checksum: str
    V0: float = 0.0

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def gap_region(self) -> Tuple[float, float]:
        """Primer gap (B/2 + V0, 3B/2 − V0) del operador con desorden acotado."""
        return (0.5 * self.B + self.V0, 1.5 * self.B - self.V0)


@dataclass(frozen=True, eq=False)
class CutoffSystem:
    """
    Indicadores J̃_i y cortes suaves J_i sobre la malla en x.

    Attributes:
        x: Puntos de la malla en x
        sharp: Indicadores por lado ('l', 'b', 'r')
        smooth: Cortes suaves por lado
        first: Primera derivada de los cortes
        second: Segunda derivada de los cortes
        breakpoints: Intervalos de meseta y transición
    """

    x: np.ndarray
    sharp: Dict[str, np.ndarray]
    smooth: Dict[str, np.ndarray]
    first: Dict[str, np.ndarray]
    second: Dict[str, np.ndarray]
    breakpoints: Dict[str, Tuple[float, float]]


# ---------------------------------------------------------------------------
# Espectros
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenPair:
    """
    Par propio normalizado.

    Attributes:
        E: Autovalor
        psi: Vector propio normalizado en la malla
        residual: ‖Hψ − Eψ‖
    """

    E: float
    psi: np.ndarray
    residual: float


@dataclass
class WindowSpectrum:
    """
    Autopares de un operador en una ventana de energía.

    Attributes:
        pairs: Pares físicos ordenados por energía
        window: Intervalo (E_lo, E_hi)
        metadata: Método, tolerancias, conteos de inercia e iteraciones
        artifacts: Energías de estados pegados a fronteras truncadas
    """

    pairs: List[EigenPair]
    window: Tuple[float, float]
    metadata: Dict = field(default_factory=dict)
    artifacts: List[float] = field(default_factory=list)

    @property
    def energies(self) -> np.ndarray:
        return np.array([pair.E for pair in self.pairs], dtype=float)

    @property
    def count(self) -> int:
        return len(self.pairs)

    def vectors(self) -> np.ndarray:
        """Matriz con los vectores propios como columnas."""
        if not self.pairs:
            return np.zeros((0, 0), dtype=complex)
        return np.column_stack([pair.psi for pair in self.pairs])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'E': self.energies,
            'residual': [pair.residual for pair in self.pairs],
        })


@dataclass(frozen=True, eq=False)
class SpectralBranch:
    """
    Rama espectral k ↦ ε_n^α(k) del operador de fibra de una pared.

    Attributes:
        side: Lado de la pared
        n: Índice de banda
        m: Índices enteros de momento
        k: Momentos 2πm/L + Φ/L
        energies: ε_n^α(k)
        derivatives: ∂_k ε_n^α(k)
        flux: Flujo Φ utilizado
        L: Circunferencia
    """

    side: Side
    n: int
    m: np.ndarray
    k: np.ndarray
    energies: np.ndarray
    derivatives: np.ndarray
    flux: float
    L: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'm': self.m,
            'k': self.k,
            'epsilon': self.energies,
            'd_epsilon': self.derivatives,
        })

    def within(self, window: Tuple[float, float]) -> np.ndarray:
        """Máscara de puntos con energía dentro de la ventana."""
        return (self.energies > window[0]) & (self.energies < window[1])


@dataclass(frozen=True, eq=False)
class ProjectorFrame:
    """
    Base ortonormal del rango de un proyector espectral.

    Attributes:
        frame: Columnas ortonormales
        energies: Autovalores incluidos
        centers: Energías solicitadas
        radius: Radio de aislamiento
        eigenvectors: Autovectores del solver tal como salieron (P = Σ ψψ*)
    """

    frame: np.ndarray
    energies: np.ndarray
    centers: np.ndarray
    radius: float
    eigenvectors: Optional[np.ndarray] = None

    @property
    def rank(self) -> int:
        return int(self.frame.shape[1])


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeObservable:
    """
    Observables de borde de un autoestado.

    Attributes:
        E: Energía
        J: Velocidad media ⟨ψ, v_y ψ⟩
        mass_left: Masa en la franja izquierda
        mass_bulk: Masa en la franja central
        mass_right: Masa en la franja derecha
        classification: Lado asignado o ambiguo
    """

    E: float
    J: float
    mass_left: float
    mass_bulk: float
    mass_right: float
    classification: Classification

    def __post_init__(self):
        """Validaciones post-inicialización."""
        if self.classification == Classification.LEFT_EDGE and not self.J < 0:
            raise ValueError("Un estado de borde izquierdo debe tener J < 0")
        if self.classification == Classification.RIGHT_EDGE and not self.J > 0:
            raise ValueError("Un estado de borde derecho debe tener J > 0")

    @property
    def total_mass(self) -> float:
        return self.mass_left + self.mass_bulk + self.mass_right

    def as_row(self) -> Dict:
        return {
            'E': self.E,
            'J': self.J,
            'mass_left': self.mass_left,
            'mass_bulk': self.mass_bulk,
            'mass_right': self.mass_right,
            'class': self.classification.value,
        }


@dataclass(frozen=True)
class VelocityBound:
    """
    Cota inferior de velocidad y su desglose.

    Attributes:
        value: max(cota, 0)
        leading: |J_{E_{0,m̄}}|·{1 − V0²[…]}
        second_order: V0²[1/(B/2−δ)² + sup_{m∉𝒜}(E_{0,m} − E)⁻²]
        correction: 3·V0/(B/2−δ)·√(2(E+V0))
        m_bar: Punto de rama más cercano a E
        branch_velocity: |J_{E_{0,m̄}}|
    """

    value: float
    leading: float
    second_order: float
    correction: float
    m_bar: int
    branch_velocity: float

    @property
    def raw(self) -> float:
        return self.leading - self.correction


@dataclass(frozen=True)
class KernelEnvelope:
    """
    Envolvente del núcleo del resolvente libre.

    Attributes:
        gaussian_rate: Tasa B/8 del factor gaussiano
        exponential_rate: Tasa γ̄√B de la cota exponencial
        core_radius: Radio del núcleo excluido
        prefactor: Prefactor C(z, B) ajustado a los datos
        derivative_prefactor: Prefactor de la envolvente de la derivada
    """

    gaussian_rate: float
    exponential_rate: float
    core_radius: float
    prefactor: float
    derivative_prefactor: float


@dataclass
class KernelDecayFit:
    """
    Ajuste de decaimiento del núcleo de (z − H_L)⁻¹.

    Attributes:
        z: Energía compleja
        gaussian_rate: Coeficiente a de −a r²
        exponential_rate: Coeficiente b de −b r
        effective_rate: Pendiente de la regresión de −log|K| contra r más allá del núcleo
        envelope: Envolvente con prefactores ajustados
        violations: Puntos donde |K| supera la envolvente
        derivative_violations: Puntos donde |∂_x K| supera su envolvente
        samples: Tabla de puntos de sondeo (r, |K|, envolvente)
    """

    z: complex
    gaussian_rate: float
    exponential_rate: float
    effective_rate: float
    envelope: KernelEnvelope
    violations: int
    derivative_violations: int
    samples: pd.DataFrame


# ---------------------------------------------------------------------------
# Reportes de campañas
# ---------------------------------------------------------------------------

@dataclass
class DecayFit:
    """
    Ajuste lineal de log(ordenada) contra la abscisa.

    Attributes:
        abscissa: √L o valores de D
        ordinates: Valores sin logaritmo
        slope: Pendiente del ajuste
        intercept: Ordenada al origen
        residuals: Residuos del ajuste en escala logarítmica
        slope_interval: Intervalo de confianza de la pendiente
        verdict: 'decreasing', 'floor' o 'not-decreasing'
        monotone: Si las ordenadas decrecen (o están en el piso)
        floor: Piso numérico usado
    """

    abscissa: np.ndarray
    ordinates: np.ndarray
    slope: float
    intercept: float
    residuals: np.ndarray
    slope_interval: Tuple[float, float]
    verdict: str
    monotone: bool
    floor: float

    @property
    def passed(self) -> bool:
        return self.verdict in ("decreasing", "floor")

    def to_row(self, name: str) -> Dict:
        return {
            'quantity': name,
            'slope': self.slope,
            'intercept': self.intercept,
            'slope_lo': self.slope_interval[0],
            'slope_hi': self.slope_interval[1],
            'verdict': self.verdict,
            'monotone': self.monotone,
            'points': int(self.abscissa.size),
        }


@dataclass(frozen=True)
class MatchedPair:
    """Par emparejado entre σ(H_ω) y σ(H_α)."""

    L: int
    seed: int
    energy_full: float
    energy_single: float
    side: Side
    displacement: float
    velocity_full: float
    velocity_single: float
    classification: Classification

    @property
    def velocity_displacement(self) -> float:
        return abs(self.velocity_full - self.velocity_single)

    @property
    def side_agrees(self) -> bool:
        expected = Classification.LEFT_EDGE if self.side == Side.LEFT else Classification.RIGHT_EDGE
        sign_ok = self.velocity_full < 0 if self.side == Side.LEFT else self.velocity_full > 0
        return sign_ok and self.classification == expected


@dataclass(frozen=True)
class UnmatchedState:
    """Estado sin pareja con la distancia a su vecino más cercano."""

    L: int
    seed: int
    energy: float
    source: str
    nearest_distance: float


@dataclass(frozen=True)
class ExceptionalEvent:
    """Realización que violó una precondición (se cuenta, no se remuestrea)."""

    L: int
    seed: int
    reason: str


@dataclass
class MatchReport:
    """
    Reporte de emparejamiento espectral entre H_ω y H_ℓ, H_r.

    Attributes:
        pairs: Pares emparejados
        unmatched: Estados sin pareja
        observables: Observables de los estados de H_ω por tarea
        exceptional: Eventos excepcionales
        fit: Ajuste de log(desplazamiento máximo) contra √L
    """

    pairs: List[MatchedPair] = field(default_factory=list)
    unmatched: List[UnmatchedState] = field(default_factory=list)
    observables: List[Dict] = field(default_factory=list)
    exceptional: List[ExceptionalEvent] = field(default_factory=list)
    fit: Optional[DecayFit] = None

    def pairs_frame(self) -> pd.DataFrame:
        columns = ['L', 'seed', 'E_full', 'E_single', 'side', 'displacement',
                   'J_full', 'J_single', 'velocity_displacement', 'class', 'side_agrees']
        rows = [{
            'L': pair.L,
            'seed': pair.seed,
            'E_full': pair.energy_full,
            'E_single': pair.energy_single,
            'side': pair.side.value,
            'displacement': pair.displacement,
            'J_full': pair.velocity_full,
            'J_single': pair.velocity_single,
            'velocity_displacement': pair.velocity_displacement,
            'class': pair.classification.value,
            'side_agrees': pair.side_agrees,
        } for pair in self.pairs]
        return pd.DataFrame(rows, columns=columns)

    def per_size_summary(self) -> pd.DataFrame:
        """Desplazamiento máximo y cobertura por tamaño."""
        frame = self.pairs_frame()
        rows = []
        for L in sorted(set(frame['L'].tolist()) | {event.L for event in self.unmatched}):
            chunk = frame[frame['L'] == L]
            rows.append({
                'L': L,
                'pairs': len(chunk),
                'unmatched': sum(1 for item in self.unmatched if item.L == L),
                'max_displacement': float(chunk['displacement'].max()) if len(chunk) else float('nan'),
                'max_velocity_displacement': float(chunk['velocity_displacement'].max()) if len(chunk) else float('nan'),
                'min_abs_J': float(chunk['J_full'].abs().min()) if len(chunk) else float('nan'),
            })
        return pd.DataFrame(rows, columns=['L', 'pairs', 'unmatched', 'max_displacement',
                                           'max_velocity_displacement', 'min_abs_J'])


@dataclass
class WegnerReport:
    """
    Probabilidad empírica de Wegner contra la cota.

    Attributes:
        E: Energía objetivo
        delta_bar: Semiancho δ̄
        N: Tamaño del ensamble
        hits: Realizaciones con dist(σ(H_α), E) < δ̄
        p_hat: Probabilidad empírica
        interval: Intervalo de Wilson
        bound: ‖h‖∞ δ̄ dist(I, E_{0,m̄})⁻² V0² L⁴
        side: Lado de la pared
    """

    E: float
    delta_bar: float
    N: int
    hits: int
    p_hat: float
    interval: Tuple[float, float]
    bound: float
    side: Side

    @property
    def passed(self) -> bool:
        return self.interval[1] <= self.bound

    def __post_init__(self):
        """Validaciones post-inicialización."""
        if not 0.0 <= self.p_hat <= 1.0:
            raise ValueError("p̂ debe estar en [0, 1]")

    def as_row(self) -> Dict:
        return {
            'E': self.E,
            'delta_bar': self.delta_bar,
            'N': self.N,
            'hits': self.hits,
            'p_hat': self.p_hat,
            'p_lo': self.interval[0],
            'p_hi': self.interval[1],
            'bound': self.bound,
            'side': self.side.value,
            'passed': self.passed,
        }


@dataclass
class FluxSweepReport:
    """
    Tabla de gaps entre ramas izquierda y derecha contra Φ.

    Attributes:
        table: Columnas phi, L_same_gap, L_shifted_gap, L_min_gap
        phi_star: Flujo que maximiza L·gap mínimo
        L: Circunferencia
    """

    table: pd.DataFrame
    phi_star: float
    L: int


@dataclass
class CampaignOutcome:
    """
    Resultado de una campaña con sus propiedades de aceptación.

    Attributes:
        name: Nombre de la campaña
        report: Reporte específico (MatchReport, lista de WegnerReport, ...)
        properties: Propiedad de aceptación → cumplida
        exceptional: Eventos excepcionales registrados
        tables: Tablas por clave de tarea para exportar
        elapsed: Tiempo de pared en segundos
    """

    name: str
    report: object
    properties: Dict[str, bool] = field(default_factory=dict)
    exceptional: List[ExceptionalEvent] = field(default_factory=list)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def failed(self) -> List[str]:
        """Nombres de las propiedades que no se cumplen."""
        return sorted(name for name, passed in self.properties.items() if not passed)

    def exceptional_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(event) for event in self.exceptional], columns=['L', 'seed', 'reason'])


@dataclass
class RunManifest:
    """
    Manifiesto de una ejecución: basta para reproducir cada archivo.

    Attributes:
        config_hash: Huella de la configuración efectiva
        master_seed: Semilla maestra
        version: Versión de la herramienta
        command: Subcomando ejecutado
        parameters: Parámetros del subcomando
        config: Configuración efectiva completa
        files: Inventario de archivos con su huella
        timings: Tiempos de pared por etapa
    """

    config_hash: str
    master_seed: int
    version: str
    command: str
    parameters: Dict
    config: Dict
    files: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)


@dataclass
class ValidationResult:
    """
    Resultado de validación de configuración.

    Attributes:
        is_valid: Si la configuración es válida
        errors: Lista de errores encontrados
        warnings: Lista de advertencias
    """

    is_valid: bool
    errors: List[str]
    warnings: List[str]

    def add_error(self, error: str) -> None:
        """Agrega un error a la lista."""
        self.errors.append(error)
        self.is_valid = False

    def add_warning(self, warning: str) -> None:
        """Agrega una advertencia a la lista."""
        self.warnings.append(warning)
