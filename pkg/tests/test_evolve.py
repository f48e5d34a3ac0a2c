import math

import numpy as np
import pytest

from gravtwin import (
    CFLViolation,
    EvolutionConfig,
    ExternalPotential,
    MetaState,
    NumericalAbort,
    PairPotential,
    ParticleSpecies,
    UnitSystem,
    ValidationError,
    dyson_first_order,
    evolve,
    first_order_position_density,
    gaussian_product_metastate,
    make_grid,
)

UNIT = ParticleSpecies(mass=1.0, radius=1.0)


def setup(g=0.0, n=128, half_span=8.0):
    units = UnitSystem.dimensionless(g=g)
    grid = make_grid(-half_span, half_span, n)
    return units, grid, PairPotential(UNIT, units)


def position_density(state):
    return np.sum(np.abs(state.amplitudes) ** 2, axis=1) * state.grid.dx


def moments(state):
    pr = position_density(state) * state.grid.dx
    mean = float(np.sum(state.grid.x * pr))
    var = float(np.sum((state.grid.x - mean) ** 2 * pr))
    return mean, var


def test_config_validation():
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=0.0, steps=10)
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=1e-3, steps=0)
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=1e-3, steps=10, splitting="euler")
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=1e-3, steps=10, boundary="hard-wall")
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=1e-3, steps=10, boundary="absorbing", mask_width=0.3)
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=1e-3, steps=10, boundary="absorbing", mask_width=0.0)
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=1e-3, steps=10, record_every=0)


def test_cfl_guard():
    units, grid, pair = setup()
    st = gaussian_product_metastate(grid, 0.0, 0.6, 0.0)
    # dx = 0.125: stability needs dt < pi hbar / (4 E_kin_max) ~ 2.49e-3
    cfg = EvolutionConfig(dt=5e-3, steps=10)
    with pytest.raises(CFLViolation) as err:
        evolve(st, ExternalPotential.null(), pair, cfg)
    assert "largest stable dt" in str(err.value)
    # just inside the bound is accepted
    evolve(st, ExternalPotential.null(), pair, EvolutionConfig(dt=2.4e-3, steps=1))


def test_requires_normalized_input():
    units, grid, pair = setup()
    st = gaussian_product_metastate(grid, 0.0, 0.6, 0.0)
    bad = MetaState(grid=grid, amplitudes=1.5 * st.amplitudes)
    with pytest.raises(ValidationError):
        evolve(bad, ExternalPotential.null(), pair, EvolutionConfig(dt=1e-3, steps=1))


def test_free_norm_conservation():
    units, grid, pair = setup()
    st = gaussian_product_metastate(grid, 0.0, 0.6, 1.0)
    rec = evolve(st, ExternalPotential.null(), pair,
                 EvolutionConfig(dt=1e-3, steps=300, record_every=50))
    assert np.max(np.abs(rec.norms - 1.0)) < 1e-12


def test_free_spreading_law():
    """Variance growth of a free packet against the closed form."""
    units, grid, pair = setup(n=256, half_span=20.0)
    sigma0 = 0.5
    st = gaussian_product_metastate(grid, 0.0, sigma0, 0.0)
    t_double = math.sqrt(3.0) * 2.0 * sigma0**2  # sigma doubles here
    steps = 500
    cfg = EvolutionConfig(dt=t_double / steps, steps=steps, record_every=50)
    rec = evolve(st, ExternalPotential.null(), pair, cfg,
                 observer=lambda s: {"var": moments(s)[1]})
    var = np.array([o["var"] for o in rec.reduced_observables])
    expected = sigma0**2 * (1.0 + (rec.times / (2.0 * sigma0**2)) ** 2)
    np.testing.assert_allclose(var, expected, rtol=1e-4)
    np.testing.assert_allclose(var[-1], 4.0 * sigma0**2, rtol=1e-4)


def test_harmonic_center_oscillation():
    """Ehrenfest check: <x>(t) = x0 cos(t) for a displaced packet, omega = 1."""
    units, grid, pair = setup(n=128, half_span=10.0)
    st = gaussian_product_metastate(grid, 1.0, 1.0 / math.sqrt(2.0), 0.0)
    period = 2.0 * math.pi
    steps = 2000
    cfg = EvolutionConfig(dt=period / steps, steps=steps, record_every=100)
    rec = evolve(st, ExternalPotential.harmonic(omega=1.0), pair, cfg,
                 observer=lambda s: {"mean": moments(s)[0]})
    mean = np.array([o["mean"] for o in rec.reduced_observables])
    np.testing.assert_allclose(mean, np.cos(rec.times), atol=1e-4)
    np.testing.assert_allclose(mean[-1], 1.0, atol=1e-4)


def test_exchange_symmetry_preserved():
    units, grid, pair = setup(g=1.0)
    st = gaussian_product_metastate(grid, 0.5, 0.7, 0.8)
    rec = evolve(st, ExternalPotential.harmonic(omega=0.5), pair,
                 EvolutionConfig(dt=1e-3, steps=400))
    assert rec.final_state.exchange_asymmetry() < 1e-10


def test_time_reversal_fidelity():
    units, grid, pair = setup(g=1.0)
    st = gaussian_product_metastate(grid, 0.0, 0.7, 1.0)
    cfg = EvolutionConfig(dt=1e-3, steps=300)
    fwd = evolve(st, ExternalPotential.null(), pair, cfg).final_state
    back_in = MetaState(grid=grid, amplitudes=np.conj(fwd.amplitudes))
    back = evolve(back_in, ExternalPotential.null(), pair, cfg).final_state
    overlap = np.vdot(st.amplitudes, np.conj(back.amplitudes)) * grid.dx**2
    assert abs(overlap) > 1.0 - 1e-8


def test_splitting_order_is_two():
    """Error against a dt/4 reference: ratio e1/e2 pins the order.

    With errors C dt^p against the dt/4 run, e1/e2 = (4^p - 1)/(4^p/2^p - 1),
    so p = log2(e1/e2 - 1).  Strang should land in [1.8, 2.2].
    """
    units, grid, pair = setup(g=0.8)
    st = gaussian_product_metastate(grid, 0.5, 0.7, 0.0)
    pot = ExternalPotential.harmonic(omega=1.0)
    T = 0.1
    finals = {}
    for div in (1, 2, 4):
        cfg = EvolutionConfig(dt=1e-3 / div, steps=100 * div)
        finals[div] = evolve(st, pot, pair, cfg).final_state.amplitudes
    e1 = np.linalg.norm(finals[1] - finals[4])
    e2 = np.linalg.norm(finals[2] - finals[4])
    p = math.log2(e1 / e2 - 1.0)
    assert 1.8 < p < 2.2


def test_record_points():
    units, grid, pair = setup()
    st = gaussian_product_metastate(grid, 0.0, 0.6, 0.0)
    rec = evolve(st, ExternalPotential.null(), pair,
                 EvolutionConfig(dt=1e-3, steps=95, record_every=30))
    np.testing.assert_allclose(rec.times, np.array([0, 30, 60, 90, 95]) * 1e-3, rtol=1e-12)
    assert rec.final_state.time == rec.times[-1]
    assert rec.snapshots is None and rec.reduced_observables is None


def test_snapshots_kept_on_request():
    units, grid, pair = setup()
    st = gaussian_product_metastate(grid, 0.0, 0.6, 0.0)
    rec = evolve(st, ExternalPotential.null(), pair,
                 EvolutionConfig(dt=1e-3, steps=40, record_every=20),
                 keep_snapshots=True)
    assert len(rec.snapshots) == 3
    assert rec.snapshots[0].time == 0.0


def test_absorbing_boundary_drains_norm():
    units, grid, pair = setup(n=128, half_span=8.0)
    st = gaussian_product_metastate(grid, 0.0, 0.6, 4.0)
    cfg = EvolutionConfig(dt=2e-3, steps=900, boundary="absorbing",
                          mask_width=0.125, mask_strength=5.0, record_every=50)
    rec = evolve(st, ExternalPotential.null(), pair, cfg)
    assert np.all(np.diff(rec.norms) <= 1e-12)
    assert rec.norms[-1] < 0.99


def test_nan_abort_with_diagnostic():
    units, grid, pair = setup()
    st = gaussian_product_metastate(grid, 0.0, 0.6, 0.0)
    amps = st.amplitudes
    amps.setflags(write=True)
    amps[0, 0] = np.nan  # simulate an upstream blow-up
    with pytest.raises(NumericalAbort) as err:
        evolve(st, ExternalPotential.null(), pair, EvolutionConfig(dt=1e-3, steps=5))
    assert "step" in str(err.value)


def test_dyson_zero_coupling_kills_correction():
    units, grid, pair = setup(g=0.0)
    st = gaussian_product_metastate(grid, 0.0, 0.7, 0.0)
    psi0, psi1 = dyson_first_order(st, ExternalPotential.null(), pair,
                                   EvolutionConfig(dt=1e-3, steps=50))
    assert np.all(psi1.amplitudes == 0.0)
    np.testing.assert_allclose(psi0.norm(), 1.0, atol=1e-12)


def test_dyson_zeroth_channel_matches_free_run():
    # psi0 must be the g = 0 discretization exactly, not merely close
    units, grid, pair = setup(g=0.5)
    _, _, free_pair = setup(g=0.0)
    st = gaussian_product_metastate(grid, 0.0, 0.7, 0.5)
    cfg = EvolutionConfig(dt=1e-3, steps=100)
    pot = ExternalPotential.harmonic(omega=1.0)
    psi0, _ = dyson_first_order(st, pot, pair, cfg)
    ref = evolve(st, pot, free_pair, cfg).final_state
    assert np.max(np.abs(psi0.amplitudes - ref.amplitudes)) < 1e-12


def test_dyson_residual_quarter_scaling():
    """Halving g must quarter the first-order residual (second-order remainder)."""
    st = None
    residuals = {}
    for g in (0.5, 0.25):
        units, grid, pair = setup(g=g)
        if st is None:
            st = gaussian_product_metastate(grid, 0.0, 0.7, 0.0)
        cfg = EvolutionConfig(dt=5e-4, steps=200)
        pot = ExternalPotential.harmonic(omega=1.0)
        psi0, psi1 = dyson_first_order(st, pot, pair, cfg)
        full = evolve(st, pot, pair, cfg).final_state
        residuals[g] = np.linalg.norm(
            full.amplitudes - psi0.amplitudes - psi1.amplitudes
        )
    ratio = residuals[0.5] / residuals[0.25]
    assert 3.5 < ratio < 4.5


def test_dyson_density_mass_conserved():
    units, grid, pair = setup(g=0.5)
    st = gaussian_product_metastate(grid, 0.0, 0.7, 0.0)
    psi0, psi1 = dyson_first_order(st, ExternalPotential.null(), pair,
                                   EvolutionConfig(dt=1e-3, steps=80))
    pr = first_order_position_density(psi0, psi1)
    np.testing.assert_allclose(np.sum(pr) * grid.dx, 1.0, atol=1e-8)


def test_dyson_precondition_guard():
    units, grid, pair = setup(g=20.0)
    st = gaussian_product_metastate(grid, 0.0, 0.7, 0.0)
    with pytest.raises(ValidationError):
        dyson_first_order(st, ExternalPotential.null(), pair,
                          EvolutionConfig(dt=2e-3, steps=500))


def test_dyson_rejects_absorbing_boundary():
    units, grid, pair = setup(g=0.1)
    st = gaussian_product_metastate(grid, 0.0, 0.7, 0.0)
    cfg = EvolutionConfig(dt=1e-3, steps=10, boundary="absorbing")
    with pytest.raises(ValidationError):
        dyson_first_order(st, ExternalPotential.null(), pair, cfg)
