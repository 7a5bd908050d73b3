import os

BASE_DIR = os.path.abspath(os.path.dirname(__file__))


class Config:
    # --- Ledger des runs (SQLite local) --------------------------------------
    SQLALCHEMY_TRACK_MODIFICATIONS = False

    INSTANCE_DIR = os.path.join(BASE_DIR, "instance")
    os.makedirs(INSTANCE_DIR, exist_ok=True)

    DB_PATH = os.path.join(INSTANCE_DIR, "franson_runs.db")
    SQLALCHEMY_DATABASE_URI = "sqlite:///" + DB_PATH.replace("\\", "/")

    # Enregistrer chaque run dans le ledger (SimulationRun / RunArtifact)
    RECORD_RUNS = True

    LOG_LEVEL = "INFO"

    # --- Chemins ----------------------------------------------------------------
    PRESETS_DIR = os.path.join(BASE_DIR, "app", "presets")
    DEFAULT_OUTPUT_DIR = os.path.join(BASE_DIR, "out")

    # --- Moteur Monte-Carlo --------------------------------------------------------
    # Taille de lot fixe : le découpage des flux aléatoires n'en dépend pas du
    # nombre de workers, donc les sorties sont identiques pour tout --jobs.
    BATCH_PULSES = 50_000
    DEFAULT_JOBS = 1


class TestingConfig(Config):
    TESTING = True
    SQLALCHEMY_DATABASE_URI = "sqlite:///:memory:"
    LOG_LEVEL = "WARNING"
    BATCH_PULSES = 20_000
