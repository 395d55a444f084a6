"""
Interfaz de línea de comandos del laboratorio de estados de borde.

Cada subcomando carga la configuración efectiva (banderas > entorno > archivo >
valores por defecto), delega en las operaciones de la biblioteca y escribe
las tablas, el resumen y el manifiesto. Códigos de salida: 0 si todo pasa,
1 si alguna propiedad de aceptación falla o la ejecución se interrumpe, 2 para
errores de uso o de configuración.
"""

import argparse
import sys
from typing import Dict, List, Optional, Sequence

from loguru import logger

from . import __version__
from .campaigns import (
    DecouplingCampaign,
    EdgeReportCampaign,
    FluxSweepCampaign,
    KernelDecayCampaign,
    ProjectorCampaign,
    SeparationCampaign,
    WegnerCampaign,
)
from .config_parser import ConfigParser, format_effective
from .disorder import export_disorder, sample_disorder
from .eigensolver import default_branch_range, solve_branch, solve_window
from .errors import ConfigError, EdgeLabError, InputError
from .exporter import ResultExporter
from .formatters import format_property_lines
from .geometry import build_grid, build_regions
from .models import OperatorTag, OperatorVariant, RunConfig, Side
from .operators import assemble, export_coo
from .validators import ConfigValidator
from config.settings import IO_SETTINGS


EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# Banderas de subcomando que sobrescriben claves de configuración
FLAG_KEYS = {
    'L_list': 'experiments.L_list',
    'seeds': 'experiments.seeds',
    'z_list': 'experiments.z_list',
    'z_imag': 'experiments.z_imag',
    'delta_bars': 'experiments.delta_bars',
    'ensemble_size': 'experiments.ensemble_size',
    'flux_points': 'experiments.flux_points',
    'strip_widths': 'experiments.strip_widths',
    'outdir': 'io.outdir',
    'master_seed': 'experiments.master_seed',
    'plot_data': 'io.plot_data',
    'figures': 'io.figures',
}

# Banderas globales que no forman parte de los parámetros del subcomando
GLOBAL_FLAGS = ('config', 'outdir', 'master_seed', 'jobs', 'plot_data', 'figures',
                'log_level', 'log_file', 'overrides', 'command', 'handler')


class UsageError(EdgeLabError):
    """Argumentos de línea de comandos inválidos."""


def _add_sizes(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--L", dest="L_list", help="Circunferencias separadas por comas (ej. 16,25,36)")
    parser.add_argument("--seeds", type=int, help="Número de realizaciones de desorden por tamaño")


def build_parser() -> argparse.ArgumentParser:
    """Parser con las banderas globales y un subparser por subcomando."""
    parser = argparse.ArgumentParser(
        prog="edgelab",
        description="Estados de borde de operadores de Landau sobre un cilindro con paredes",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="Archivo de configuración clave = valor")
    parser.add_argument("--outdir", help=f"Directorio de salida (también ${IO_SETTINGS.ENV_OUTDIR})")
    parser.add_argument("--seed", dest="master_seed", type=int,
                        help=f"Semilla maestra (también ${IO_SETTINGS.ENV_SEED})")
    parser.add_argument("--jobs", type=int, default=1, help="Máximo de procesos de trabajo")
    parser.add_argument("--plot-data", dest="plot_data", action="store_true", default=None,
                        help="Escribir tablas listas para graficar (una serie por columna)")
    parser.add_argument("--figures", action="store_true", default=None,
                        help="Escribir además figuras HTML estáticas")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="CLAVE=VALOR",
                        help="Sobrescribe cualquier clave de configuración (repetible)")
    parser.add_argument("--log-level", default=IO_SETTINGS.LOG_LEVEL,
                        choices=["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"])
    parser.add_argument("--log-file", help="Archivo de registro adicional (nivel DEBUG)")

    subparsers = parser.add_subparsers(dest="command", metavar="COMANDO")
    subparsers.required = True

    branches = subparsers.add_parser("branches", help="Rama k ↦ ε_n(k) de una pared")
    branches.add_argument("--side", default="l", help="Pared: l o r")
    branches.add_argument("--n", type=int, default=0, help="Índice de banda")
    branches.add_argument("--flux", type=float, help="Flujo Φ (por defecto el de la configuración)")
    branches.set_defaults(handler=cmd_branches)

    spectrum = subparsers.add_parser("spectrum", help="Autopares de una variante en una ventana")
    spectrum.add_argument("--variant", default=OperatorTag.FULL.value,
                          help=f"Variante: {', '.join(tag.value for tag in OperatorTag)}")
    spectrum.add_argument("--window", help="Ventana lo,hi (por defecto Δ)")
    spectrum.add_argument("--realization", type=int, help="Semilla de la realización (por defecto la maestra)")
    spectrum.add_argument("--no-flux", dest="with_flux", action="store_false",
                          help="Ensamblar sin el flujo axial")
    spectrum.add_argument("--export-operator", action="store_true", help="Escribir la matriz en formato COO")
    spectrum.add_argument("--export-disorder", action="store_true", help="Escribir la tabla (n, m, X)")
    spectrum.set_defaults(handler=cmd_spectrum)

    edge = subparsers.add_parser("edge-report", help="Emparejamiento de espectros y clasificación de bordes")
    _add_sizes(edge)
    edge.set_defaults(handler=cmd_edge_report)

    wegner = subparsers.add_parser("wegner", help="Ensamble de Monte Carlo de la estimación de Wegner")
    wegner.add_argument("--E", dest="energy", type=float, help="Energía objetivo")
    wegner.add_argument("--delta-bars", dest="delta_bars", help="Semianchos δ̄ separados por comas")
    wegner.add_argument("--N", dest="ensemble_size", type=int, help="Tamaño del ensamble")
    wegner.add_argument("--side", default="l", help="Pared: l o r")
    wegner.set_defaults(handler=cmd_wegner)

    decouple = subparsers.add_parser("decouple", help="Norma de 𝒦(z) contra √L")
    _add_sizes(decouple)
    decouple.add_argument("--z", dest="z_list", help="Partes reales de z en unidades de B")
    decouple.add_argument("--z-imag", dest="z_imag", type=float, help="Parte imaginaria de z")
    decouple.add_argument("--strip-widths", dest="strip_widths",
                          help="Anchos D para el barrido de separación a L fijo")
    decouple.set_defaults(handler=cmd_decouple)

    projector = subparsers.add_parser("projector", help="Distancia entre proyectores espectrales")
    _add_sizes(projector)
    projector.set_defaults(handler=cmd_projector)

    flux = subparsers.add_parser("flux-sweep", help="Gaps entre paredes simétricas contra Φ")
    flux.add_argument("--flux-points", dest="flux_points", type=int, help="Número de valores de Φ en [0, 2π]")
    flux.add_argument("--no-symmetrize", dest="symmetrize", action="store_false",
                      help="Fallar si las paredes no son simétricas")
    flux.set_defaults(handler=cmd_flux_sweep)

    kernel = subparsers.add_parser("kernel-decay", help="Decaimiento del núcleo del resolvente libre")
    kernel.add_argument("--z", dest="z_list", help="Partes reales de z en unidades de B")
    kernel.add_argument("--z-imag", dest="z_imag", type=float, help="Parte imaginaria de z")
    kernel.set_defaults(handler=cmd_kernel_decay)

    validate = subparsers.add_parser("validate-config", help="Valida la configuración y lista los problemas")
    validate.add_argument("--print-effective", action="store_true",
                          help="Imprimir la configuración efectiva en formato clave = valor")
    validate.set_defaults(handler=cmd_validate_config)

    return parser


def configure_logging(level: str, log_file: Optional[str] = None) -> None:
    """Un sumidero en stderr al nivel pedido y, opcionalmente, un archivo en DEBUG."""
    logger.remove()
    logger.add(sys.stderr, level=level, format=IO_SETTINGS.LOG_FORMAT)
    if log_file:
        logger.add(log_file, level="DEBUG", format=IO_SETTINGS.LOG_FORMAT)


def config_flags(args: argparse.Namespace) -> Dict[str, object]:
    """Sobrescrituras de configuración a partir de las banderas presentes."""
    flags: Dict[str, object] = {}
    for key, value in (item.split('=', 1) for item in args.overrides if '=' in item):
        flags[key.strip()] = value.strip()
    malformed = [item for item in args.overrides if '=' not in item]
    if malformed:
        raise UsageError(f"--set espera CLAVE=VALOR: {', '.join(malformed)}")

    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            flags[key] = value
    return flags


def command_parameters(args: argparse.Namespace) -> Dict[str, object]:
    """Parámetros propios del subcomando para el manifiesto."""
    return {name: value for name, value in sorted(vars(args).items())
            if name not in GLOBAL_FLAGS and value is not None}


def load_config(args: argparse.Namespace) -> RunConfig:
    return ConfigParser().load(args.config, flags=config_flags(args))


def _parse_window(text: str):
    try:
        lo, hi = (float(part) for part in text.split(','))
    except ValueError as exc:
        raise InputError(f"Ventana inválida: {text} (se espera lo,hi)") from exc
    return lo, hi


def report_outcomes(outcomes: Sequence) -> int:
    """Imprime las propiedades y devuelve 1 si alguna falló."""
    failed: List[str] = []
    for outcome in outcomes:
        for line in format_property_lines(outcome.properties):
            logger.info(f"{outcome.name} {line}")
        failed.extend(f"{outcome.name}:{name}" for name in outcome.failed)
    if failed:
        print(f"Propiedades fallidas: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def run_campaigns(args: argparse.Namespace, config: RunConfig, campaigns: Sequence) -> int:
    """Ejecuta campañas, exporta sus resultados con un solo manifiesto y evalúa."""
    exporter = ResultExporter(config, args.command, command_parameters(args))
    outcomes = []
    for index, campaign in enumerate(campaigns):
        outcome = campaign.run()
        campaign.export(outcome, exporter, prefix="" if index == 0 else f"{campaign.name}/")
        outcomes.append(outcome)
    exporter.finalize()
    return report_outcomes(outcomes)


# ---------------------------------------------------------------------------
# Subcomandos
# ---------------------------------------------------------------------------

def cmd_branches(args: argparse.Namespace) -> int:
    config = load_config(args)
    cfg = config.model
    try:
        side = Side.parse(args.side)
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    exporter = ResultExporter(config, args.command, command_parameters(args))
    branch = solve_branch(side, args.n, default_branch_range(cfg, side, args.flux), cfg,
                          flux=args.flux, solver=config.solver)
    table = branch.to_frame()
    key = f"{side.value}_n{args.n}"
    exporter.write_table(key, table)
    exporter.write_plot_data(f"branch_{key}", table[['k', 'epsilon', 'd_epsilon']],
                             title=f"ε_{args.n} pared {side.value}")
    exporter.add_summary([{'quantity': f"branch_points_{key}", 'value': len(table)}])
    exporter.finalize()
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    config = load_config(args)
    cfg = config.model
    try:
        tag = OperatorTag(args.variant)
    except ValueError as exc:
        raise InputError(f"Variante desconocida: {args.variant}") from exc

    seed = args.realization if args.realization is not None else config.experiments.master_seed
    window = _parse_window(args.window) if args.window else cfg.window
    grid = build_grid(cfg)
    regions = build_regions(cfg)
    field = sample_disorder(cfg, regions['Lambda'], seed)
    op = assemble(OperatorVariant(tag, with_flux=args.with_flux), cfg, field, grid, regions)
    spectrum = solve_window(op, window, solver=config.solver)

    exporter = ResultExporter(config, args.command, command_parameters(args))
    key = f"{tag.value}_seed{seed}"
    exporter.write_table(key, spectrum.to_frame())
    if args.export_operator:
        exporter.register(export_coo(op, exporter.outdir / args.command / f"{key}_operator.csv"))
    if args.export_disorder:
        exporter.register(export_disorder(field, exporter.outdir / args.command / f"disorder_seed{seed}.csv"))
    exporter.add_summary([
        {'quantity': f"eigenvalues_{key}", 'value': spectrum.count},
        {'quantity': f"boundary_artifacts_{key}", 'value': len(spectrum.artifacts)},
    ])
    exporter.finalize()
    return EXIT_OK


def cmd_edge_report(args: argparse.Namespace) -> int:
    config = load_config(args)
    return run_campaigns(args, config, [EdgeReportCampaign(config, args.jobs)])


def cmd_wegner(args: argparse.Namespace) -> int:
    config = load_config(args)
    campaign = WegnerCampaign(config, args.jobs, E=args.energy, side=args.side)
    return run_campaigns(args, config, [campaign])


def cmd_decouple(args: argparse.Namespace) -> int:
    config = load_config(args)
    campaigns = [DecouplingCampaign(config, args.jobs)]
    if args.strip_widths:
        campaigns.append(SeparationCampaign(config, args.jobs))
    return run_campaigns(args, config, campaigns)


def cmd_projector(args: argparse.Namespace) -> int:
    config = load_config(args)
    return run_campaigns(args, config, [ProjectorCampaign(config, args.jobs)])


def cmd_flux_sweep(args: argparse.Namespace) -> int:
    config = load_config(args)
    return run_campaigns(args, config, [FluxSweepCampaign(config, args.jobs, symmetrize=args.symmetrize)])


def cmd_kernel_decay(args: argparse.Namespace) -> int:
    config = load_config(args)
    return run_campaigns(args, config, [KernelDecayCampaign(config, args.jobs)])


def cmd_validate_config(args: argparse.Namespace) -> int:
    result, config = ConfigValidator().validate(args.config, flags=config_flags(args))
    for warning in result.warnings:
        print(f"ADVERTENCIA: {warning}", file=sys.stderr)
    for error in result.errors:
        print(f"ERROR: {error}", file=sys.stderr)

    if args.print_effective and config is not None:
        sys.stdout.write(format_effective(config))
    return EXIT_OK if result.is_valid else EXIT_USAGE


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Punto de entrada de la CLI.

    Args:
        argv: Argumentos (por defecto ``sys.argv[1:]``)

    Returns:
        int: Código de salida
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    configure_logging(args.log_level, args.log_file)
    if args.jobs < 1:
        print("--jobs debe ser al menos 1", file=sys.stderr)
        return EXIT_USAGE

    try:
        return args.handler(args)
    except (ConfigError, InputError, UsageError) as exc:
        logger.error(str(exc))
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EdgeLabError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
