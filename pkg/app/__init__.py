import logging
import os

from flask import Flask

from config import Config
from app.extensions import db


def create_app(config_object=Config):
    app = Flask(__name__, instance_relative_config=True)
    app.config.from_object(config_object)

    # Instance folder (ledger sqlite)
    os.makedirs(app.instance_path, exist_ok=True)

    app.logger.setLevel(getattr(logging, str(app.config.get("LOG_LEVEL", "INFO")).upper(), logging.INFO))

    db.init_app(app)

    # ------------------------------------------------------------------
    # INIT DB : le ledger n'a que deux tables, create_all suffit
    # ------------------------------------------------------------------
    with app.app_context():
        from app import models  # noqa: F401

        db.create_all()

    return app
