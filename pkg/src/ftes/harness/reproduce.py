"""Figure reproduction: run the prebaked scenarios and emit a plotting script stub."""

from __future__ import annotations

from pathlib import Path

from .config import build_config
from .run import ScenarioResult, batch, run_scenario
from .scenarios import FIGURE_IDS, figure_configs

_PLOT_STUB = '''"""Plot the CSV trajectories next to this file. Requires matplotlib (not an ftes dependency)."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
files = sorted(here.glob("*/trajectory.csv")) + sorted(here.glob("*/traj_*.csv"))
fig, ax = plt.subplots()
for path in files:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    t = [float(r["t"]) for r in rows]
    for col in [c for c in rows[0] if c.startswith("u_")]:
        ax.plot(t, [float(r[col]) for r in rows], lw=0.8, label=f"{{path.parent.name}} {{col}}" if len(files) < 5 else None)
ax.set_xlabel("t")
ax.set_ylabel("u")
ax.set_title("{figure}")
if len(files) < 5:
    ax.legend()
out = here / "{figure}.png"
fig.savefig(out, dpi=150)
print(out, file=sys.stderr)
'''


def reproduce(figure_id: str, out=None, backend: str | None = None, workers: int = 1) -> list[ScenarioResult]:
    """Run every scenario of ``figure_id``; artifacts go to ``out/<figure_id>/<scenario>/``."""
    if figure_id not in FIGURE_IDS:
        raise KeyError(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURE_IDS)}")
    base = Path(out) / figure_id if out is not None else None
    results = []
    for text in figure_configs(figure_id):
        cfg = build_config(text)
        target = base / cfg.name if base is not None else None
        if cfg.batch > 1:
            results.append(batch(cfg, out=target, backend=backend, workers=workers))
        else:
            results.append(run_scenario(cfg, out=target, backend=backend))
    if base is not None:
        base.mkdir(parents=True, exist_ok=True)
        (base / f"plot_{figure_id.replace('-', '_')}.py").write_text(
            _PLOT_STUB.format(figure=figure_id), encoding="utf-8")
        for text in figure_configs(figure_id):
            cfg = build_config(text)
            (base / f"{cfg.name}.ini").write_text(text.lstrip(), encoding="utf-8")
    return results
