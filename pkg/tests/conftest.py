"""Session fixtures: the expensive simulations and spectral solves shared by
the acceptance tests.  Everything is deterministic (no seeds needed)."""

from __future__ import annotations

import time

import numpy as np
import pytest

from invasionlab.core import Grid, Params, State, Weight
from invasionlab.front import FrontProfile, extract_front, fit_tail_decay, \
    front_position, front_positions, measure_speed
from invasionlab.spectral import front_point_spectrum
from invasionlab.stepper import LinearizedStepper, PerturbationEvent, \
    SchemeConfig, Trajectory, run
from invasionlab.wavetrain import solve_wavetrain, wavetrain_from_simulation

# The comoving grid that carries the polished front and every perturbation
# experiment.  Light-cone experiments use the sub-grid restricted to the
# phase-coherent wake (the far wake relaxes to the homogeneous oscillation,
# which is not stationary in the comoving frame).
BIG_GRID = Grid(-450.0, 150.0, 12001)
CONE_GRID = Grid(-260.0, 150.0, 8201)
ETA0 = 0.4


@pytest.fixture(scope="session")
def params() -> Params:
    return Params(0.1, 2.0, 0.01)


@pytest.fixture(scope="session")
def lab_run(params):
    """Lab-frame invasion run: tanh interface at x=-300 invading rightward."""
    grid = Grid(-400.0, 400.0, 8001)
    u0 = 0.5 * (1.0 - params.a) * 0.5 * (1.0 - np.tanh((grid.x + 300.0) / 2.0))
    cfg = SchemeConfig(dt=0.02, frame_speed=0.0, bc="neumann",
                       record_every=250, t_end=900.0)
    t0 = time.monotonic()
    traj = run(State(grid, 0.0, u0, np.zeros(grid.n)), params, cfg)
    return traj, time.monotonic() - t0


@pytest.fixture(scope="session")
def front_profile(lab_run, params):
    traj, _ = lab_run
    fp = extract_front(traj, params)
    fit_tail_decay(fp)  # sets fp.eta_ps
    return fp


@pytest.fixture(scope="session")
def wake_wavetrain(lab_run, front_profile, params):
    traj, _ = lab_run
    pos = front_position(traj.final(), 0.5 * (1.0 - params.a))
    guess = wavetrain_from_simulation(
        traj, (pos - 300.0, pos - 40.0), m=256, c=front_profile.c_ps)
    return solve_wavetrain(params, front_profile.c_ps, guess)


@pytest.fixture(scope="session")
def polished_front(front_profile, params):
    """Front resampled on the big comoving grid and relaxed for 60 time
    units in its own frame, which removes the extraction's alignment drift."""
    u0, w0 = front_profile.sample_on(BIG_GRID)
    cfg = SchemeConfig(dt=0.02, frame_speed=front_profile.c_ps, bc="neumann",
                       record_every=3000, t_end=60.0)
    rel = run(State(BIG_GRID, 0.0, u0, w0), params, cfg).final()
    return FrontProfile(grid=BIG_GRID, u_ps=rel.u, w_ps=rel.w,
                        c_ps=front_profile.c_ps, eta_ps=front_profile.eta_ps)


@pytest.fixture(scope="session")
def cone_front(polished_front):
    """The polished front restricted to the phase-coherent sub-grid."""
    u0, w0 = polished_front.sample_on(CONE_GRID)
    return FrontProfile(grid=CONE_GRID, u_ps=u0, w_ps=w0,
                        c_ps=polished_front.c_ps,
                        eta_ps=polished_front.eta_ps)


@pytest.fixture(scope="session")
def ps_report(polished_front, params):
    return front_point_spectrum(polished_front, params, eta=0.1, eta0=ETA0)


@pytest.fixture(scope="session")
def cone_runs(cone_front, params):
    """Perturbed and control comoving runs on the coherent-wake grid,
    plus the control-differenced trajectory (background drift removed)."""
    cfg = SchemeConfig(dt=0.02, frame_speed=cone_front.c_ps, bc="neumann",
                       record_every=125, t_end=150.0)
    init = State(CONE_GRID, 0.0, cone_front.u_ps, cone_front.w_ps)
    event = PerturbationEvent(t_fire=0.0, center=10.0, width=3.0,
                              amplitude=0.02)
    pert = run(init, params, cfg, events=[event])
    ctrl = run(init, params, cfg)
    diffed = Trajectory(params=params, cfg=cfg, snapshots=[
        State(CONE_GRID, c.t,
              cone_front.u_ps + (s.u - c.u), cone_front.w_ps + (s.w - c.w))
        for s, c in zip(pert.snapshots, ctrl.snapshots)])
    return pert, ctrl, diffed, event


@pytest.fixture(scope="session")
def phase_shift_runs(polished_front, params, ps_report):
    """Measured vs predicted asymptotic shift at three amplitudes, with the
    control run's background shift subtracted from each measurement."""
    from invasionlab.diagnostics import asymptotic_phase

    cfg = SchemeConfig(dt=0.02, frame_speed=polished_front.c_ps, bc="neumann",
                       record_every=1000, t_end=150.0)
    init = State(BIG_GRID, 0.0, polished_front.u_ps, polished_front.w_ps)

    def one(amplitude):
        events = []
        w0u = np.zeros(BIG_GRID.n)
        if amplitude:
            events = [PerturbationEvent(t_fire=0.0, center=10.0, width=3.0,
                                        amplitude=amplitude)]
            w0u = events[0].bump(BIG_GRID.x)
        traj = run(init, params, cfg, events=events)
        return asymptotic_phase(traj, polished_front, ps_report,
                                w0u, np.zeros(BIG_GRID.n), eta0=ETA0)

    control_shift, _ = one(0.0)
    rows = []
    for amplitude in (0.02, 0.04, 0.08):
        measured, predicted = one(amplitude)
        rows.append((amplitude, measured - control_shift, predicted))
    return control_shift, rows


@pytest.fixture(scope="session")
def defect_run(polished_front, params):
    """Figure-style experiment: bump injected ahead of the comoving front."""
    cfg = SchemeConfig(dt=0.02, frame_speed=polished_front.c_ps, bc="neumann",
                       record_every=250, t_end=600.0)
    event = PerturbationEvent(t_fire=5.0, center=25.0, width=3.0,
                              amplitude=0.05)
    init = State(BIG_GRID, 0.0, polished_front.u_ps, polished_front.w_ps)
    return run(init, params, cfg, events=[event])


@pytest.fixture(scope="session")
def weighted_linear_run(polished_front, params):
    """Linearized evolution about the frozen front, conjugated by the
    one-sided weight (the space the decay statements live in)."""
    cfg = SchemeConfig(dt=0.02, frame_speed=polished_front.c_ps, bc="neumann",
                       record_every=250, t_end=400.0)
    ls = LinearizedStepper(BIG_GRID, params, cfg,
                           polished_front.u_ps, polished_front.w_ps,
                           weight=Weight(0.0, ETA0))
    v0 = np.exp(-((BIG_GRID.x / 5.0) ** 2))
    return ls.run(State(BIG_GRID, 0.0, v0, np.zeros(BIG_GRID.n)))


@pytest.fixture(scope="session")
def measured_speeds(lab_run, params):
    traj, _ = lab_run
    ts, pos = front_positions(traj, 0.5 * (1.0 - params.a))
    c_ps, stderr = measure_speed(ts, pos)
    return c_ps, stderr
