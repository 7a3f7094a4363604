"""
Конфигурация приложения и описание запусков
"""
import json
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from errors import ConfigError

# Загружаем переменные окружения
load_dotenv()

STRUCTURE_KINDS = ("euclidean", "riemannian", "randers", "kropina", "expression")
MODES = ("jet", "finite_difference")
MIN_DIMENSION = 2
MAX_DIMENSION = 4
SINGULAR_THRESHOLD = 1e-12

# Именованные классические лифты: (alpha, beta, gamma)
LIFT_PRESETS = {
    "complete": (0.0, 1.0, 0.0),
    "diagonal": (1.0, 0.0, 1.0),
    "complete_plus_vertical": (0.0, 1.0, 1.0),
    "horizontal_plus_complete": (1.0, 1.0, 0.0),
}


def _env_float(name: str, default: str) -> float:
    raw = os.getenv(name, default)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name} должен быть числом, получено: {raw!r}")


def _as_float(value: Any, key: str) -> float:
    try:
        result = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: ожидалось число, получено {value!r}")
    if not math.isfinite(result):
        raise ConfigError(f"{key}: значение должно быть конечным")
    return result


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: ожидалось целое число, получено {value!r}")
    return value


def _as_expression(value: Any, key: str) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise ConfigError(f"{key}: ожидалось выражение, получено {value!r}")
    text = str(value).strip()
    if not text:
        raise ConfigError(f"{key}: пустое выражение")
    return text


@dataclass
class AppConfig:
    """Общая конфигурация приложения"""
    log_level: str = "INFO"
    log_file: str = "finsler.log"
    min_fiber_norm: float = 1e-6
    fd_step: float = 1e-4
    report_dir: str = "./reports"

    @classmethod
    def from_env(cls) -> "AppConfig":
        """Создает конфигурацию из переменных окружения"""
        config = cls(
            log_level=os.getenv("LOG_LEVEL", "INFO"),
            log_file=os.getenv("LOG_FILE", "finsler.log"),
            min_fiber_norm=_env_float("MIN_FIBER_NORM", "1e-6"),
            fd_step=_env_float("FD_STEP", "1e-4"),
            report_dir=os.getenv("REPORT_DIR", "./reports"),
        )
        if config.min_fiber_norm <= 0:
            raise ConfigError("MIN_FIBER_NORM должен быть положительным")
        if config.fd_step <= 0:
            raise ConfigError("FD_STEP должен быть положительным")
        return config


@dataclass
class StructureSpec:
    """Описание финслеровой структуры в конфигурации запуска"""
    kind: str
    dimension: int
    a: Optional[List[List[str]]] = None
    b: Optional[List[str]] = None
    text: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StructureSpec":
        if not isinstance(data, dict):
            raise ConfigError("structure: ожидался объект")
        kind = data.get("kind")
        if kind not in STRUCTURE_KINDS:
            raise ConfigError(f"structure.kind: неизвестный тип {kind!r}, допустимы {STRUCTURE_KINDS}")

        dimension = data.get("dimension")
        if isinstance(dimension, bool) or not isinstance(dimension, int):
            raise ConfigError("structure.dimension: ожидалось целое число")
        if not MIN_DIMENSION <= dimension <= MAX_DIMENSION:
            raise ConfigError(
                f"dimension out of range: {dimension} (допустимо {MIN_DIMENSION}..{MAX_DIMENSION})"
            )

        a = data.get("a")
        if a is not None:
            if not isinstance(a, list) or len(a) != dimension or any(
                not isinstance(row, list) or len(row) != dimension for row in a
            ):
                raise ConfigError(f"structure.a: ожидалась матрица {dimension}x{dimension}")
            a = [[_as_expression(v, f"structure.a[{i}][{j}]") for j, v in enumerate(row)]
                 for i, row in enumerate(a)]

        b = data.get("b")
        if b is not None:
            if not isinstance(b, list) or len(b) != dimension:
                raise ConfigError(f"structure.b: ожидался список из {dimension} выражений")
            b = [_as_expression(v, f"structure.b[{i}]") for i, v in enumerate(b)]

        text = data.get("text")
        if text is not None:
            text = _as_expression(text, "structure.text")

        if kind == "riemannian" and a is None:
            raise ConfigError("structure.a обязательна для riemannian")
        if kind in ("randers", "kropina") and b is None:
            raise ConfigError(f"structure.b обязателен для {kind}")
        if kind == "expression" and text is None:
            raise ConfigError("structure.text обязателен для expression")

        return cls(kind=kind, dimension=dimension, a=a, b=b, text=text)


@dataclass
class LiftSpec:
    """Коэффициенты лифт-метрики (alpha, beta, gamma)"""
    alpha: float
    beta: float
    gamma: float

    @property
    def discriminant(self) -> float:
        return self.alpha * self.gamma - self.beta ** 2

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LiftSpec":
        if not isinstance(data, dict):
            raise ConfigError("lift: ожидался объект")
        if "preset" in data:
            preset = data["preset"]
            if preset not in LIFT_PRESETS:
                raise ConfigError(f"lift.preset: неизвестный пресет {preset!r}")
            alpha, beta, gamma = LIFT_PRESETS[preset]
        else:
            missing = [k for k in ("alpha", "beta", "gamma") if k not in data]
            if missing:
                raise ConfigError(f"lift: отсутствуют ключи {missing}")
            alpha = _as_float(data["alpha"], "lift.alpha")
            beta = _as_float(data["beta"], "lift.beta")
            gamma = _as_float(data["gamma"], "lift.gamma")
        spec = cls(alpha=alpha, beta=beta, gamma=gamma)
        if abs(spec.discriminant) < SINGULAR_THRESHOLD:
            raise ConfigError(
                f"lift metric singular: alpha*gamma - beta^2 = {spec.discriminant:g}"
            )
        return spec


@dataclass
class FieldSpec:
    """Векторное поле на базе: имя и компоненты v^i(x)"""
    name: str
    components: List[str]

    @classmethod
    def from_dict(cls, data: Dict[str, Any], dimension: int, position: int) -> "FieldSpec":
        if not isinstance(data, dict):
            raise ConfigError(f"fields[{position}]: ожидался объект")
        name = str(data.get("name", f"field_{position}"))
        components = data.get("components")
        if not isinstance(components, list) or len(components) != dimension:
            raise ConfigError(
                f"fields[{position}].components: ожидалось {dimension} выражений"
            )
        return cls(
            name=name,
            components=[_as_expression(c, f"fields[{position}].components[{i}]")
                        for i, c in enumerate(components)],
        )


@dataclass
class GridSpec:
    """Сетка точек (x, y): решётка базовых точек и направления в слое"""
    lower: float = -1.0
    upper: float = 1.0
    count: int = 3
    directions: int = 8
    radii: List[float] = field(default_factory=lambda: [0.7, 1.3])
    jitter: float = 0.0

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "GridSpec":
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigError("grid: ожидался объект")
        spec = cls(
            lower=_as_float(data.get("lower", -1.0), "grid.lower"),
            upper=_as_float(data.get("upper", 1.0), "grid.upper"),
            count=_as_int(data.get("count", 3), "grid.count"),
            directions=_as_int(data.get("directions", 8), "grid.directions"),
            radii=[_as_float(r, "grid.radii") for r in data.get("radii", [0.7, 1.3])],
            jitter=_as_float(data.get("jitter", 0.0), "grid.jitter"),
        )
        if spec.count < 1 or spec.directions < 1 or not spec.radii:
            raise ConfigError("grid empty: нужны count >= 1, directions >= 1 и непустой radii")
        if spec.upper < spec.lower:
            raise ConfigError("grid: upper меньше lower")
        if any(r <= 0 for r in spec.radii):
            raise ConfigError("grid.radii: радиусы должны быть положительными")
        if spec.jitter < 0:
            raise ConfigError("grid.jitter: значение не может быть отрицательным")
        return spec


@dataclass
class Tolerances:
    """Допуски проверок"""
    residual: float = 1e-6
    spread: float = 1e-6
    identity: float = 1e-8
    curvature: float = 1e-6
    euler: float = 1e-9
    homogeneity: float = 1e-9
    oracle: float = 1e-4
    interchange: float = 1e-5
    cross_mode: float = 1e-5
    det: float = 1e-8
    gradient: float = 1e-6
    nonlinear: float = 1e-6
    convexity: float = 1e-10
    consistency: float = 1e-10

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "Tolerances":
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigError("tolerances: ожидался объект")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"tolerances: неизвестные ключи {unknown}")
        values = {}
        for key, raw in data.items():
            value = _as_float(raw, f"tolerances.{key}")
            if value <= 0:
                raise ConfigError(f"tolerance must be positive: {key} = {value:g}")
            values[key] = value
        return cls(**values)

    def as_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class RunConfig:
    """Полное описание запуска CLI"""
    structure: StructureSpec
    lift: LiftSpec
    fields: List[FieldSpec]
    grid: GridSpec
    tolerances: Tolerances
    mode: str = "jet"
    seed: int = 0
    source: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: Optional[str] = None) -> "RunConfig":
        """
        Создает конфигурацию запуска из словаря.

        Raises:
            ConfigError: отсутствующая секция или недопустимое значение
        """
        if not isinstance(data, dict):
            raise ConfigError("Конфигурация должна быть объектом")
        if "structure" not in data:
            raise ConfigError("Отсутствует секция structure")
        structure = StructureSpec.from_dict(data["structure"])
        lift = LiftSpec.from_dict(data.get("lift", {"preset": "diagonal"}))

        raw_fields = data.get("fields", [])
        if not isinstance(raw_fields, list):
            raise ConfigError("fields: ожидался список")
        field_specs = [FieldSpec.from_dict(f, structure.dimension, i) for i, f in enumerate(raw_fields)]

        mode = data.get("mode", "jet")
        if mode == "fd":
            mode = "finite_difference"
        if mode not in MODES:
            raise ConfigError(f"mode: допустимы {MODES}, получено {mode!r}")

        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("seed: ожидалось целое число")

        return cls(
            structure=structure,
            lift=lift,
            fields=field_specs,
            grid=GridSpec.from_dict(data.get("grid")),
            tolerances=Tolerances.from_dict(data.get("tolerances")),
            mode=mode,
            seed=seed,
            source=source,
        )

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        """Загружает конфигурацию запуска из JSON-файла"""
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigError(f"Файл конфигурации не найден: {path}")
        try:
            data = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Некорректный JSON в {path}: {e}")
        return cls.from_dict(data, source=str(path))


def get_app_config() -> AppConfig:
    """Получить конфигурацию приложения"""
    return AppConfig.from_env()
