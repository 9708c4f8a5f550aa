import argparse
import json
import logging
import sys

from data.config import Config
from services.figure_exporter import FigureExporter, cdf_config, default_cdf_mc, objective_for
from services.scenario_manager import ScenarioManager
from services.validator import AcceptanceSuite
from utils.errors import OutputError, ScenarioError, StatBeamError, ValidationFailure

logger = logging.getLogger(__name__)

# beams: синоним table1
SUBCOMMANDS = ("cdf", "hfunc", "sumrate", "angles", "weighted", "table1", "beams", "validate")
# Сценарий по умолчанию для подкоманд, которым нужны ковариации
DEFAULT_SCENARIO = {
    "sumrate": "better_conditioned",
    "angles": "better_conditioned",
    "weighted": "weighted_first",
    "table1": "better_conditioned",
    "beams": "better_conditioned",
}

EXIT_OK = 0
EXIT_SCENARIO = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Статистическое формирование лучей: замкнутые скорости, оптимальные лучи, проверка моделированием",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("scenario", nargs="?", default=None,
                        help="Путь к JSON-сценарию или имя встроенного: " + ", ".join(sorted(Config.SCENARIO_TEMPLATES)))
    parser.add_argument("--out", default=None, help="Каталог результатов (по умолчанию STATBEAM_OUT)")
    parser.add_argument("--seed", type=int, default=None, help="Зерно генератора (STATBEAM_SEED)")
    parser.add_argument("--samples", type=int, default=None,
                        help="Число испытаний моделирования и случайного поиска (STATBEAM_SAMPLES)")
    parser.add_argument("--quiet", action="store_true", help="Только предупреждения и ошибки (STATBEAM_QUIET)")
    return parser


def report_error(code, error):
    """Одна машинно-читаемая строка в stderr"""
    kind = getattr(error, "kind", type(error).__name__)
    detail = " ".join(str(error).split())
    print(f"error code={code} kind={kind} detail={detail}", file=sys.stderr)
    return code


def echo_config(config):
    print("config: " + json.dumps(config, sort_keys=True, ensure_ascii=False))


def run_scenario_command(args, exporter):
    manager = ScenarioManager()
    scenario = manager.load(args.scenario or DEFAULT_SCENARIO[args.subcommand])
    scenario = manager.with_overrides(scenario, seed=args.seed, samples=args.samples)
    config = {
        "subcommand": args.subcommand,
        "scenario": manager.to_dict(scenario),
        "seed": scenario.mc.seed,
        "search_samples": exporter.search_samples,
        "trace_normalized": {"sigma1": scenario.sigma1.trace_normalized,
                             "sigma2": scenario.sigma2.trace_normalized},
    }
    if args.subcommand == "weighted":
        obj = objective_for(scenario)
        config["objective"] = {"zeta1": obj.zeta1, "zeta2": obj.zeta2}
    echo_config(config)
    logger.info("%s: сценарий %s, режим %s, зерно %d", args.subcommand, scenario.source, scenario.mode,
                scenario.mc.seed)

    if args.subcommand == "sumrate":
        return exporter.export_for_mode(scenario, config)
    if args.subcommand == "angles":
        return exporter.export_angles(scenario, config)
    if args.subcommand == "weighted":
        return exporter.export_weighted(scenario, config)
    return exporter.export_beams(scenario, config)


def run(argv=None):
    """
    Выполняет подкоманду

    Args:
        argv (list, optional): Аргументы командной строки без имени программы

    Returns:
        int: Код завершения (0 успех, 1 сценарий или каталог вывода, 2 проверка, 3 численная ошибка)
    """
    args = build_parser().parse_args(argv)
    quiet = args.quiet or Config.QUIET
    level = logging.WARNING if quiet else getattr(logging, str(Config.LOG_LEVEL).upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)
    seed = Config.SEED if args.seed is None else args.seed

    try:
        if args.subcommand == "validate":
            echo_config({"subcommand": "validate", "seed": seed, "samples": args.samples or Config.MC_SAMPLES})
            results = AcceptanceSuite(seed=seed, samples=args.samples).run()
            for result in results:
                print(f"ok {result.name}: {result.detail}")
            return EXIT_OK

        exporter = FigureExporter(out_dir=args.out, search_samples=args.samples)
        if args.subcommand == "cdf":
            mc = default_cdf_mc(seed=args.seed, samples=args.samples)
            config = {"subcommand": "cdf", "seed": mc.seed, **cdf_config(mc)}
            echo_config(config)
            exporter.export_cdf(config, mc)
        elif args.subcommand == "hfunc":
            config = {"subcommand": "hfunc", "seed": seed}
            echo_config(config)
            exporter.export_hfunc(config)
        else:
            run_scenario_command(args, exporter)
        return EXIT_OK
    except (ScenarioError, OutputError) as e:
        return report_error(EXIT_SCENARIO, e)
    except ValidationFailure as e:
        return report_error(EXIT_VALIDATION, e)
    except StatBeamError as e:
        return report_error(EXIT_NUMERICAL, e)


if __name__ == "__main__":
    sys.exit(run())
