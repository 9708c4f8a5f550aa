import json
import math

import numpy as np

from data.config import Config

SCENARIO_MODES = ("sumrate", "weighted", "single_user_1", "single_user_2")
SCENARIO_FIELDS = ("name", "sigma1", "sigma2", "snr_db", "weights", "mc", "mode")


def _check_matrix(value, field_name, errors):
    """Проверяет матрицу из строк с парами [re, im]"""
    if not isinstance(value, list) or not value:
        errors.append(f"{field_name}: ожидался непустой список строк")
        return False
    size = len(value)
    for r, row in enumerate(value):
        if not isinstance(row, list) or len(row) != size:
            errors.append(f"{field_name}: строка {r + 1} должна содержать {size} элементов")
            return False
        for c, entry in enumerate(row):
            if (not isinstance(entry, (list, tuple)) or len(entry) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
                errors.append(f"{field_name}[{r + 1}][{c + 1}]: ожидалась пара чисел [re, im]")
                return False
            if not all(math.isfinite(x) for x in entry):
                errors.append(f"{field_name}[{r + 1}][{c + 1}]: значение не конечно")
                return False
    return True


def parse_scenario(content):
    """
    Разбирает содержимое файла сценария

    Args:
        content (str | dict): JSON-текст или уже разобранный словарь

    Returns:
        tuple: (словарь с полями сценария, список ошибок)
    """
    errors = []  # Для сбора ошибок

    if isinstance(content, str):
        try:
            data = json.loads(content)
        except json.JSONDecodeError as e:
            errors.append(f"Ошибка при чтении JSON: {e.msg} (строка {e.lineno})")
            return {}, errors
    else:
        data = content

    if not isinstance(data, dict):
        errors.append("сценарий должен быть JSON-объектом")
        return {}, errors

    unknown = sorted(set(data) - set(SCENARIO_FIELDS))
    if unknown:
        errors.append(f"неизвестные поля: {', '.join(unknown)}")

    result = {"name": str(data.get("name", "")), "weights": None, "mc": {}}

    for field_name in ("sigma1", "sigma2"):
        if field_name not in data:
            errors.append(f"отсутствует поле {field_name}")
        elif _check_matrix(data[field_name], field_name, errors):
            result[field_name] = data[field_name]

    if "sigma1" in result and "sigma2" in result and len(result["sigma1"]) != len(result["sigma2"]):
        errors.append("sigma1 и sigma2 должны иметь одинаковый размер")

    snr = data.get("snr_db", Config.SNR_DB_GRID)
    if (not isinstance(snr, list) or not snr
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in snr)):
        errors.append("snr_db: ожидался непустой список чисел")
    elif any(b <= a for a, b in zip(snr, snr[1:])):
        errors.append("snr_db: значения должны строго возрастать")
    else:
        result["snr_db"] = [float(x) for x in snr]

    weights = data.get("weights")
    if weights is not None:
        if not isinstance(weights, dict) or set(weights) != {"zeta1", "zeta2"}:
            errors.append("weights: ожидался объект с полями zeta1, zeta2")
        elif not all(isinstance(weights[k], (int, float)) and 0.0 <= weights[k] <= 1.0 for k in weights):
            errors.append("weights: значения должны лежать в [0, 1]")
        else:
            result["weights"] = {"zeta1": float(weights["zeta1"]), "zeta2": float(weights["zeta2"])}

    mc = data.get("mc") or {}
    if not isinstance(mc, dict):
        errors.append("mc: ожидался объект")
    else:
        for key in mc:
            if key not in ("n_samples", "seed", "batch"):
                errors.append(f"mc: неизвестное поле {key}")
            elif not isinstance(mc[key], int) or isinstance(mc[key], bool) or mc[key] < (0 if key == "seed" else 1):
                errors.append(f"mc.{key}: ожидалось целое положительное число")
        result["mc"] = {k: int(v) for k, v in mc.items() if k in ("n_samples", "seed", "batch")}

    mode = data.get("mode", "sumrate")
    if mode not in SCENARIO_MODES:
        errors.append(f"mode: допустимо одно из {', '.join(SCENARIO_MODES)}")
    else:
        result["mode"] = mode

    return result, errors


def db_to_linear(snr_db):
    """Перевод SNR из дБ в линейную шкалу: ρ = 10^(дБ/10)"""
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


def format_number(value, digits=None):
    """Число с заданным количеством значащих цифр (по умолчанию Config.CSV_DIGITS)"""
    digits = Config.CSV_DIGITS if digits is None else digits
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.{digits}g}"


def format_row(row, digits=None):
    """Форматирует все числовые значения строки CSV"""
    return {key: value if isinstance(value, str) else format_number(value, digits) for key, value in row.items()}
