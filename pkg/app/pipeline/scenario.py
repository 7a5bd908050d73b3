"""Scénarios : fichier texte sectionné key = value, validation, presets."""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

from app.detection.apd import ApdConfig
from app.errors import ScenarioValidationError
from app.interferometer import InterferometerConfig
from app.rng import SEED_MAX
from app.source.pulses import PulseTrainConfig
from app.source.spdc import SpdcConfig
from app.upconversion import UpconversionConfig

TASKS = ("histogram", "fringe", "profile", "table1", "spdc")
ENGINES = ("analytic", "monte-carlo")
ENGINE_ALIASES = {"mc": "monte-carlo", "montecarlo": "monte-carlo", "monte-carlo": "monte-carlo", "analytic": "analytic"}
MODES = ("quantum-pair", "classical-beam")
PRESETS = ("fig2", "fig3a", "fig3b", "fig4", "table1", "spdc")

AUTO = "auto"
# Paramètres qui acceptent "auto" (résolus par la calibration)
AUTO_FIELDS = {
    ("pulse_train", "edge_swing_beta"),
    ("interferometer", "mode_overlap_visibility"),
    ("interferometer", "two_photon_overlap_exponent"),
    ("detection", "quantum_efficiency"),
}


# --- Blocs propres au pipeline -------------------------------------------------
@dataclass(frozen=True)
class HistogramConfig:
    window_span: float = 400.0  # ps
    bin_width: float = 25.0  # ps
    half_window: float = 46.0  # ps
    phase_average_steps: int = 1

    def violations(self) -> list[str]:
        errs = []
        if not self.bin_width > 0:
            errs.append("histogram.bin_width doit être > 0")
        if not self.half_window > 0:
            errs.append("histogram.half_window doit être > 0")
        if not self.window_span >= self.half_window:
            errs.append("histogram.window_span doit couvrir half_window")
        if self.phase_average_steps < 1:
            errs.append("histogram.phase_average_steps doit être >= 1")
        return errs


@dataclass(frozen=True)
class ScanConfig:
    start: float = 0.0  # nm (offset piezo)
    stop: float = 1600.0
    step: float = 6.0

    def offsets(self) -> list[float]:
        n = int((self.stop - self.start) / self.step + 1e-9) + 1
        return [self.start + i * self.step for i in range(n)]

    def violations(self) -> list[str]:
        errs = []
        if not self.step > 0:
            errs.append("scan.step doit être > 0")
        elif not self.stop > self.start:
            errs.append("scan.stop doit dépasser scan.start")
        return errs


@dataclass(frozen=True)
class ProfileConfig:
    t_start: float = 0.0  # ns
    t_stop: float = 10.0
    t_step: float = 0.005
    window_start: float = 2.5
    window_stop: float = 7.5

    def violations(self) -> list[str]:
        errs = []
        if not self.t_step > 0:
            errs.append("profile.t_step doit être > 0")
        if not self.t_stop > self.t_start:
            errs.append("profile.t_stop doit dépasser t_start")
        if not self.t_start <= self.window_start < self.window_stop <= self.t_stop:
            errs.append("profile : fenêtre hors de la grille temporelle")
        return errs


@dataclass(frozen=True)
class ClassicalBeamConfig:
    mean_counts_per_pulse: float = 1.0  # comptes détectés / impulsion à Ī = 1

    def violations(self) -> list[str]:
        return [] if self.mean_counts_per_pulse >= 0 else ["classical.mean_counts_per_pulse doit être >= 0"]


@dataclass(frozen=True)
class CalibrationTargets:
    full_pulse_visibility: float = 0.69
    window_visibility: float = 0.82
    window_start: float = 2.5  # ns
    window_stop: float = 7.5
    two_photon_visibility: float = 0.70
    coincidence_rate: float = 2000.0  # /s

    def violations(self) -> list[str]:
        errs = []
        for name in ("full_pulse_visibility", "window_visibility", "two_photon_visibility"):
            if not 0 < getattr(self, name) <= 1:
                errs.append(f"calibration.{name} doit être dans ]0, 1]")
        if not self.window_start < self.window_stop:
            errs.append("calibration : window_start doit précéder window_stop")
        if not self.coincidence_rate > 0:
            errs.append("calibration.coincidence_rate doit être > 0")
        return errs


@dataclass
class Scenario:
    name: str
    task: str
    engine: str
    mode: str = "quantum-pair"
    seed: int | None = None
    jobs: int = 1
    output_dir: Path | None = None
    train: PulseTrainConfig = field(default_factory=PulseTrainConfig)
    spdc: SpdcConfig = field(default_factory=SpdcConfig)
    upconversion: UpconversionConfig = field(default_factory=UpconversionConfig)
    interferometer: InterferometerConfig = field(default_factory=InterferometerConfig)
    detection: ApdConfig = field(default_factory=ApdConfig)
    histogram: HistogramConfig = field(default_factory=HistogramConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    classical: ClassicalBeamConfig = field(default_factory=ClassicalBeamConfig)
    calibration: CalibrationTargets = field(default_factory=CalibrationTargets)
    auto: frozenset = frozenset()

    def violations(self) -> list[str]:
        errs = []
        if self.task not in TASKS:
            errs.append(f"scenario.task invalide '{self.task}' {TASKS}")
        if self.engine not in ENGINES:
            errs.append(f"scenario.engine invalide '{self.engine}' {ENGINES}")
        if self.mode not in MODES:
            errs.append(f"scenario.mode invalide '{self.mode}' {MODES}")
        if self.engine == "monte-carlo" and self.task in ("histogram", "fringe", "spdc") and self.seed is None:
            errs.append("scenario.seed obligatoire pour le moteur monte-carlo")
        if self.seed is not None and not 0 <= self.seed < SEED_MAX:
            errs.append("scenario.seed doit être un entier 64 bits non signé")
        if self.jobs < 1:
            errs.append("scenario.jobs doit être >= 1")
        if self.task in ("histogram", "spdc") and self.mode != "quantum-pair":
            errs.append(f"task {self.task} : mode quantum-pair uniquement")
        for block in (
            self.train, self.spdc, self.upconversion, self.interferometer, self.detection,
            self.histogram, self.scan, self.profile, self.classical, self.calibration,
        ):
            errs.extend(block.violations())
        return errs

    def validate(self) -> "Scenario":
        errs = self.violations()
        if errs:
            raise ScenarioValidationError(errs)
        return self

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


# ------------------------------------------------------------------
# Lecture du fichier
# ------------------------------------------------------------------
SECTIONS = {
    "pulse_train": ("train", PulseTrainConfig),
    "spdc": ("spdc", SpdcConfig),
    "upconversion": ("upconversion", UpconversionConfig),
    "interferometer": ("interferometer", InterferometerConfig),
    "detection": ("detection", ApdConfig),
    "histogram": ("histogram", HistogramConfig),
    "scan": ("scan", ScanConfig),
    "profile": ("profile", ProfileConfig),
    "classical": ("classical", ClassicalBeamConfig),
    "calibration": ("calibration", CalibrationTargets),
}
SCENARIO_KEYS = ("name", "task", "engine", "mode", "seed", "jobs", "output_dir", "pulses")


def _convert(raw: str, typ, label: str, errs: list[str]):
    raw = raw.strip()
    try:
        if typ in (int, "int"):
            return int(raw.replace("_", ""))
        if typ in (float, "float"):
            return float(raw.replace("_", ""))
        return raw
    except ValueError:
        errs.append(f"{label} : valeur '{raw}' non convertible en {getattr(typ, '__name__', typ)}")
        return None


def _build_block(section: str, cls, items: dict[str, str], errs: list[str], auto: set):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in items.items():
        label = f"{section}.{key}"
        if key not in fields:
            errs.append(f"clé inconnue '{label}'")
            continue
        if raw.strip().lower() == AUTO:
            if (section, key) in AUTO_FIELDS:
                auto.add((section, key))
            else:
                errs.append(f"{label} n'accepte pas '{AUTO}'")
            continue
        value = _convert(raw, fields[key].type, label, errs)
        if value is not None:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except Exception as e:  # valeurs rejetées à la construction
        errs.append(f"[{section}] {e}")
        return cls()


def parse_scenario(text: str, name: str = "scenario", base_dir: Path | None = None) -> Scenario:
    """Construit et valide un scénario ; toutes les violations sont remontées ensemble."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # clés sensibles à la casse (delta_L)
    errs: list[str] = []
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ScenarioValidationError([f"fichier illisible : {e}"]) from e

    for section in parser.sections():
        if section != "scenario" and section not in SECTIONS:
            errs.append(f"section inconnue [{section}]")

    if not parser.has_section("scenario"):
        errs.append("section [scenario] manquante")
        head = {}
    else:
        head = dict(parser.items("scenario"))
    for key in head:
        if key not in SCENARIO_KEYS:
            errs.append(f"clé inconnue 'scenario.{key}'")
    for key in ("task", "engine"):
        if not head.get(key):
            errs.append(f"scenario.{key} manquant")

    engine = ENGINE_ALIASES.get(head.get("engine", "").strip().lower(), head.get("engine", "").strip())
    seed = _convert(head["seed"], int, "scenario.seed", errs) if head.get("seed") else None
    jobs = _convert(head["jobs"], int, "scenario.jobs", errs) if head.get("jobs") else 1
    output_dir = None
    if head.get("output_dir"):
        output_dir = Path(head["output_dir"].strip())
        if base_dir is not None and not output_dir.is_absolute():
            output_dir = base_dir / output_dir

    auto: set = set()
    blocks = {}
    for section, (attr, cls) in SECTIONS.items():
        items = dict(parser.items(section)) if parser.has_section(section) else {}
        if section == "pulse_train" and head.get("pulses") and "pulse_count" not in items:
            items["pulse_count"] = head["pulses"]
        blocks[attr] = _build_block(section, cls, items, errs, auto)

    scenario = Scenario(
        name=head.get("name", name).strip() or name,
        task=head.get("task", "").strip(),
        engine=engine,
        mode=head.get("mode", "quantum-pair").strip(),
        seed=seed,
        jobs=jobs if jobs is not None else 1,
        output_dir=output_dir,
        auto=frozenset(auto),
        **blocks,
    )
    errs.extend(scenario.violations())
    if errs:
        raise ScenarioValidationError(errs)
    return scenario


def load_scenario(path) -> Scenario:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_scenario(text, name=path.stem)


def preset_path(name: str, presets_dir=None) -> Path:
    if name not in PRESETS:
        raise ScenarioValidationError([f"preset inconnu '{name}' {PRESETS}"])
    base = presets_dir or os.path.join(os.path.dirname(os.path.dirname(__file__)), "presets")
    return Path(base) / f"{name}.ini"


def load_preset(name: str, presets_dir=None) -> Scenario:
    return load_scenario(preset_path(name, presets_dir))
