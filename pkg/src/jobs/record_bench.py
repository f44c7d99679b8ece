from __future__ import annotations
import argparse
import os
import subprocess
import sys
from pathlib import Path

import pandas as pd
from sqlalchemy import create_engine, text

from ..config import DEFAULT_OUT_DIR
from ..errors import MissingArtifactError
from ..log import configure, get
from ..storage import read_table

log = get("record")

DEFAULT_DB_URL = f"sqlite:///{DEFAULT_OUT_DIR / 'bench.db'}"
BENCH_CSV = DEFAULT_OUT_DIR / "iid_bench.csv"

CREATE_SQL = """
CREATE TABLE IF NOT EXISTS bench_records (
  seed bigint NOT NULL,
  k integer NOT NULL,
  epsilon double precision NOT NULL,
  decoder text NOT NULL,
  trials integer,
  success integer,
  failure integer,
  tie integer,
  p_fail double precision,
  p_fail_se double precision,
  PRIMARY KEY (seed, k, epsilon, decoder)
);
"""
UPSERT_SQL = """
INSERT INTO bench_records
(seed, k, epsilon, decoder, trials, success, failure, tie, p_fail, p_fail_se)
VALUES
(:seed, :k, :epsilon, :decoder, :trials, :success, :failure, :tie, :p_fail, :p_fail_se)
ON CONFLICT (seed, k, epsilon, decoder) DO UPDATE SET
  trials=EXCLUDED.trials,
  success=EXCLUDED.success,
  failure=EXCLUDED.failure,
  tie=EXCLUDED.tie,
  p_fail=EXCLUDED.p_fail,
  p_fail_se=EXCLUDED.p_fail_se;
"""
COLUMNS = ("k", "epsilon", "decoder", "trials", "success", "failure", "tie", "p_fail", "p_fail_se")


def database_url(cli_value: str | None = None) -> str:
    return cli_value or os.environ.get("DATABASE_URL") or DEFAULT_DB_URL


def run(cmd: list[str]):
    log.info("+ {}", " ".join(cmd))
    subprocess.run(cmd, check=True)


def record_bench(csv_path: Path, db_url: str | None = None) -> int:
    """Upsert one iid-bench table into bench_records; returns the row count."""
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise MissingArtifactError(f"bench table not found: {csv_path}; run iid-bench first")
    meta, df = read_table(csv_path)
    seed = int(meta.get("seed", 0))
    url = database_url(db_url)
    if url.startswith("sqlite:///"):
        os.makedirs(Path(url[len("sqlite:///"):]).parent, exist_ok=True)
    engine = create_engine(url, pool_pre_ping=True)

    with engine.begin() as conn:
        conn.exec_driver_sql(CREATE_SQL)
        for r in df[list(COLUMNS)].to_dict(orient="records"):
            # plain python types for the driver
            payload = {k: (None if pd.isna(v) else (v.item() if hasattr(v, "item") else v)) for k, v in r.items()}
            payload["seed"] = seed
            conn.execute(text(UPSERT_SQL), payload)
    engine.dispose()
    log.info("Upserted {} rows (seed={}) -> {}", len(df), seed, url)
    return len(df)


def main(argv=None):
    ap = argparse.ArgumentParser(description="Store an iid-bench table in the results database.")
    ap.add_argument("--csv", type=Path, default=BENCH_CSV)
    ap.add_argument("--db-url", dest="db_url", default=None, help="default: $DATABASE_URL or a local SQLite file")
    ap.add_argument("--bench", action="store_true", help="run iid-bench first (desk defaults)")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    configure(args.verbose)

    if args.bench:
        run([sys.executable, "-m", "src.cli", "iid-bench", "--out-dir", str(args.csv.parent)])
    record_bench(args.csv, args.db_url)


if __name__ == "__main__":
    main()
