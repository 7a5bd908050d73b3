from __future__ import annotations

import numpy as np
import pytest

from app import create_app
from app.extensions import db
from config import TestingConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: reproduction pleine taille d'un preset")


@pytest.fixture
def app():
    app = create_app(TestingConfig)
    yield app
    with app.app_context():
        db.session.remove()
        db.drop_all()


@pytest.fixture
def app_ctx(app):
    with app.app_context():
        yield app


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
