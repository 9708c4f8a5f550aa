# Исключения численной библиотеки
# Все наследуются от ValueError


class StatBeamError(ValueError):
    """Базовая ошибка пакета"""

    # Короткое имя для машинно-читаемой строки CLI
    kind = "statbeam_error"


class DomainError(StatBeamError):
    """Аргумент вне области определения функции"""

    kind = "domain"


class DimensionError(StatBeamError):
    """Несовпадение размерностей"""

    kind = "dimension"


class SingularMatrixError(StatBeamError):
    """Требуется положительно определённая матрица, получена вырожденная"""

    kind = "singular_matrix"


class RankError(StatBeamError):
    """Требуется ковариация ранга 1"""

    kind = "rank"


class DegenerateSpectrumError(StatBeamError):
    """Совпадающие собственные значения там, где нужны различные"""

    kind = "degenerate_spectrum"


class BoundaryError(StatBeamError):
    """Граница d_Σ = 0: предел высокого SNR расходится"""

    kind = "boundary"


class OutputError(StatBeamError):
    """Каталог результатов недоступен для записи"""

    kind = "output"


class ScenarioError(StatBeamError):
    """
    Некорректный сценарий

    Args:
        errors (list): Список найденных проблем (как в разборе CSV)
    """

    kind = "scenario"

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ValidationFailure(StatBeamError):
    """Набор проверок validate завершился с ошибками"""

    kind = "validation"

    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__(f"не пройдено проверок: {len(self.failed)} ({', '.join(self.failed)})")
