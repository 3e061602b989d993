"""Regenerate the archived golden raster for the defect-transport test.

Replicates the acceptance fixtures exactly (lab run -> front extraction ->
polishing -> comoving defect run) and writes the spacetime PGM.  The
pipeline is deterministic, so reruns are byte-identical on one platform.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from invasionlab.core import Grid, Params, State  # noqa: E402
from invasionlab.front import FrontProfile, extract_front  # noqa: E402
from invasionlab.io import write_heatmap  # noqa: E402
from invasionlab.stepper import PerturbationEvent, SchemeConfig, run  # noqa: E402

BIG_GRID = Grid(-450.0, 150.0, 12001)


def main():
    params = Params(0.1, 2.0, 0.01)
    grid = Grid(-400.0, 400.0, 8001)
    u0 = 0.5 * (1 - params.a) * 0.5 * (1 - np.tanh((grid.x + 300.0) / 2.0))
    cfg = SchemeConfig(dt=0.02, record_every=250, t_end=900.0)
    traj = run(State(grid, 0.0, u0, np.zeros(grid.n)), params, cfg)
    fp = extract_front(traj, params)

    u1, w1 = fp.sample_on(BIG_GRID)
    relax = SchemeConfig(dt=0.02, frame_speed=fp.c_ps, bc="neumann",
                         record_every=3000, t_end=60.0)
    rel = run(State(BIG_GRID, 0.0, u1, w1), params, relax).final()
    polished = FrontProfile(grid=BIG_GRID, u_ps=rel.u, w_ps=rel.w,
                            c_ps=fp.c_ps)

    dcfg = SchemeConfig(dt=0.02, frame_speed=polished.c_ps, bc="neumann",
                        record_every=250, t_end=600.0)
    event = PerturbationEvent(t_fire=5.0, center=25.0, width=3.0,
                              amplitude=0.05)
    defect = run(State(BIG_GRID, 0.0, polished.u_ps, polished.w_ps),
                 params, dcfg, events=[event])

    field = np.array([s.u for s in defect.snapshots])[:, ::8]
    out_dir = os.path.join(os.path.dirname(__file__), "..", "tests", "golden")
    os.makedirs(out_dir, exist_ok=True)
    out = os.path.join(out_dir, "defect_spacetime.pgm")
    write_heatmap(out, field)
    print(out)


if __name__ == "__main__":
    main()
