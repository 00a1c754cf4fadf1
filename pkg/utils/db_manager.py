import logging
import os

import pandas as pd
from sqlalchemy import create_engine

logger = logging.getLogger(__name__)

RUNS_TABLE = "willmore_runs"
TRAJECTORIES_TABLE = "willmore_trajectories"

# =========================================================
# 🔌 RUN LEDGER DATABASE
# Optional: nothing is stored unless a URL is configured
# =========================================================
_engines = {}


def get_db_engine(db_url=None):
    """
    Returns a cached SQLAlchemy engine for `db_url` (or DATABASE_URL), or None
    when no URL is configured or the engine cannot be created.
    """
    db_url = db_url or os.environ.get("DATABASE_URL")
    if not db_url:
        return None
    if db_url in _engines:
        return _engines[db_url]
    try:
        engine = create_engine(db_url, pool_pre_ping=True)
    except Exception as e:
        logger.warning("⚠️ Failed to create DB engine: %s", e)
        return None
    _engines[db_url] = engine
    return engine


def store_run(run_id, summary, trajectory_frame, db_url=None):
    """
    Appends one summary row to willmore_runs and the trajectory rows to
    willmore_trajectories. Failures are logged and never abort the caller.
    Returns True when both tables were written.
    """
    engine = get_db_engine(db_url)
    if engine is None:
        return False
    try:
        flat = {"run_id": run_id}
        flat.update({k: v for k, v in summary.items() if not isinstance(v, (dict, list, tuple))})
        pd.DataFrame([flat]).to_sql(RUNS_TABLE, engine, if_exists="append", index=False)

        frame = trajectory_frame.copy()
        frame.insert(0, "run_id", run_id)
        frame.to_sql(TRAJECTORIES_TABLE, engine, if_exists="append", index=False)
    except Exception as e:
        logger.warning("⚠️ Could not store run %s in the ledger: %s", run_id, e)
        return False
    logger.info("✅ run %s stored in %s", run_id, RUNS_TABLE)
    return True


def load_runs(db_url=None):
    """Reads the run ledger; empty DataFrame when unavailable."""
    engine = get_db_engine(db_url)
    if engine is None:
        return pd.DataFrame()
    try:
        return pd.read_sql_table(RUNS_TABLE, engine)
    except Exception as e:
        logger.warning("⚠️ Run ledger query failed: %s", e)
        return pd.DataFrame()
