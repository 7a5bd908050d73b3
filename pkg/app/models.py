from datetime import datetime
import json

from app.extensions import db


# ---------- LEDGER DES RUNS ----------
class SimulationRun(db.Model):
    __tablename__ = "simulation_run"

    id = db.Column(db.Integer, primary_key=True)
    name = db.Column(db.String(120), nullable=False)
    task = db.Column(db.String(20), nullable=False)  # histogram | fringe | profile | table1
    engine = db.Column(db.String(20), nullable=False)  # analytic | monte-carlo
    mode = db.Column(db.String(20), nullable=False)  # quantum-pair | classical-beam
    seed = db.Column(db.String(24), nullable=True)  # 64 bits : stocké en texte
    jobs = db.Column(db.Integer, nullable=False, default=1)
    output_dir = db.Column(db.String(500), nullable=False)
    status = db.Column(db.String(20), nullable=False, default="ok")
    summary_json = db.Column(db.Text, nullable=True)
    created_at = db.Column(db.DateTime, default=datetime.utcnow)

    artifacts = db.relationship(
        "RunArtifact",
        backref="run",
        lazy=True,
        cascade="all, delete-orphan",
        order_by="RunArtifact.id",
    )

    @property
    def summary(self) -> dict:
        if not self.summary_json:
            return {}
        try:
            return json.loads(self.summary_json)
        except Exception:
            return {}


class RunArtifact(db.Model):
    __tablename__ = "run_artifact"

    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey("simulation_run.id"), nullable=False, index=True)
    kind = db.Column(db.String(40), nullable=False)  # histogram | fringe | fit | profile | table | summary | tags | workbook
    path = db.Column(db.String(500), nullable=False)
    sha256 = db.Column(db.String(64), nullable=False)
    size_bytes = db.Column(db.Integer, nullable=False, default=0)
