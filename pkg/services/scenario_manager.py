import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional

from data.config import Config
from services.beamform import WeightedObjective
from services.montecarlo import McConfig
from utils.errors import ScenarioError, StatBeamError
from utils.helpers import db_to_linear, parse_scenario
from utils.linalg import Covariance

logger = logging.getLogger(__name__)


@dataclass
class Scenario:
    """Единица работы CLI: ковариации, сетка SNR, веса и настройки моделирования"""

    sigma1: Covariance
    sigma2: Covariance
    snr_db: List[float]
    mc: McConfig
    weights: Optional[WeightedObjective] = None
    mode: str = "sumrate"
    name: str = ""
    source: str = field(default="", compare=False)

    @property
    def rhos(self):
        return [float(r) for r in db_to_linear(self.snr_db)]


class ScenarioManager:
    def __init__(self, templates=None):
        self.templates = Config.SCENARIO_TEMPLATES if templates is None else templates

    def bundled(self):
        """Имена встроенных сценариев"""
        return sorted(self.templates)

    def load(self, name_or_path):
        """
        Загружает сценарий по имени встроенного шаблона или по пути к JSON-файлу

        Raises:
            ScenarioError: если файл не найден или содержимое некорректно
        """
        if name_or_path in self.templates:
            logger.info("встроенный сценарий %s", name_or_path)
            return self.from_dict(self.templates[name_or_path], source=name_or_path)
        if not os.path.isfile(name_or_path):
            raise ScenarioError(f"Сценарий {name_or_path} не найден")
        try:
            with open(name_or_path, encoding="utf-8") as fh:
                content = fh.read()
        except OSError as e:
            raise ScenarioError(f"Ошибка при чтении {name_or_path}: {e}") from e
        logger.info("сценарий из файла %s", name_or_path)
        return self.from_dict(content, source=name_or_path)

    def from_dict(self, data, source=""):
        """
        Создаёт Scenario из словаря или JSON-текста с проверкой всех полей

        Returns:
            Scenario
        """
        parsed, errors = parse_scenario(data)
        if errors:
            raise ScenarioError(errors)
        try:
            sigma1 = Covariance.from_pairs(parsed["sigma1"])
            sigma2 = Covariance.from_pairs(parsed["sigma2"])
        except StatBeamError as e:
            raise ScenarioError(f"некорректная ковариация: {e}") from e

        mc_fields = parsed["mc"]
        n_samples = mc_fields.get("n_samples", Config.MC_SAMPLES)
        mc = McConfig(
            n_samples=n_samples,
            seed=mc_fields.get("seed", Config.SEED),
            batch=mc_fields.get("batch", min(Config.MC_BATCH, n_samples)),
            workers=Config.MC_WORKERS,
        )
        weights = parsed["weights"]
        return Scenario(
            sigma1=sigma1,
            sigma2=sigma2,
            snr_db=parsed["snr_db"],
            mc=mc,
            weights=WeightedObjective(**weights) if weights else None,
            mode=parsed["mode"],
            name=parsed["name"],
            source=source,
        )

    def with_overrides(self, scenario, seed=None, samples=None):
        """Применяет флаги командной строки (--seed, --samples) поверх сценария"""
        mc = scenario.mc
        if samples is not None:
            mc = mc.with_samples(samples)
        if seed is not None:
            mc = McConfig(n_samples=mc.n_samples, seed=seed, batch=mc.batch, workers=mc.workers)
        scenario.mc = mc
        return scenario

    def to_dict(self, scenario):
        """Сериализация сценария (обратная к from_dict)"""
        return {
            "name": scenario.name,
            "sigma1": scenario.sigma1.to_pairs(),
            "sigma2": scenario.sigma2.to_pairs(),
            "snr_db": list(scenario.snr_db),
            "weights": (
                {"zeta1": scenario.weights.zeta1, "zeta2": scenario.weights.zeta2}
                if scenario.weights else None
            ),
            "mc": {"n_samples": scenario.mc.n_samples, "seed": scenario.mc.seed, "batch": scenario.mc.batch},
            "mode": scenario.mode,
        }

    def dump(self, scenario, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(scenario), fh, ensure_ascii=False, indent=2)
        return path
