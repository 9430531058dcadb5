"""
Running the shipped experiment configs
======================================

Same as ``xelliptic run --config configs/<name>.json`` for each file.
"""

from pathlib import Path

from xelliptic.cli import cli_main

here = Path(__file__).resolve().parent.parent
for cfg in sorted((here / "configs").glob("*.json")):
    code = cli_main(["run", "--config", str(cfg), "--out", str(here / "out" / cfg.stem), "--quiet"])
    print(f"{cfg.name}: exit {code}")
