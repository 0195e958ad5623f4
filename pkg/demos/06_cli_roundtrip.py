"""End to end through the command line: preset, run, compare.

Equivalent shell session::

    sample preset show grid16 > dilation.json
    sample run --config dilation.json --out runs/dilation
    sample compare runs/dilation/metrics.json runs/plain/metrics.json
"""

import json
import sys
import tempfile
from pathlib import Path

from anneal_path import bench
from anneal_path.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    reports = []
    for path in ("dilation", "none"):
        cfg = bench.preset_config("grid16", path=path, seed=3)
        cfg["run"].update(particles=300, iterations=3000, checkpoint_stride=1000)
        cfg["metrics"]["enabled"] = ["mmd", "kl", "mms"]
        config_file = tmp / f"{path}.json"
        config_file.write_text(json.dumps(cfg, indent=2))
        code = main(["run", "--config", str(config_file), "--out", str(tmp / path), "--jobs", "2"])
        if code:
            sys.exit(code)
        reports.append(str(tmp / path / "metrics.json"))
    main(["compare", *reports])
    print("artifacts:", sorted(p.name for p in (tmp / "dilation").iterdir()))
