"""Shared output helper for the experiment scripts."""
import argparse
import json
from dataclasses import asdict
from pathlib import Path

from drooploss.cli import _jsonable
from drooploss.io import render_csv


def out_dir_from_args(description: str) -> Path:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    out = parser.parse_args().out_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_table(path: Path, command: str, cfg, columns, rows, summary=None) -> None:
    config = json.loads(json.dumps(asdict(cfg), default=_jsonable))
    config["command"] = command
    path.write_text(render_csv(columns, rows, config))
    if summary is not None:
        side = path.with_suffix(".json")
        side.write_text(json.dumps({"config": config, "summary": summary}, indent=2,
                                   sort_keys=True, default=_jsonable) + "\n")
    print(f"wrote {path}")
