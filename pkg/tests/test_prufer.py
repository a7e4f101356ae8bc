import math

import numpy as np
import pytest

from starkspec.potentials import PotentialSpec, load_tabulated, preset
from starkspec.prufer import (
    MAX_STEP,
    PruferState,
    RangeError,
    SpectralVerdict,
    StiffnessError,
    UnreliableTailError,
    amplitude_bound,
    control_decaying,
    control_profile,
    control_slope,
    control_smooth,
    convergence_verdict,
    gamma_residual,
    initial_state,
    integral6_partial,
    integrate_prufer,
    sigma_gamma,
    trajectory_table,
)
from starkspec.transforms import b_term, effective_potential, push_solution, x_of_xi

from .conftest import airy_data, omega_reference, trajectory, u_reference

PRESETS = ["zero", "power_law", "resonant", "weierstrass_smooth"]


def test_initial_state_matches_airy():
    th, amp = airy_data()
    q = preset("zero")
    s = initial_state(q, 0.0, th, xi0=2.0 / 3.0, amplitude=amp)
    from scipy.special import airy
    ai, aip, _, _ = airy(-1.0)
    w, dw = push_solution(ai, -aip, 1.0)
    assert s.xi == pytest.approx(2.0 / 3.0)
    assert math.exp(2 * s.logR) == pytest.approx(w * w + dw * dw, rel=1e-8)
    assert math.sin(s.theta) * math.exp(s.logR) == pytest.approx(w, rel=1e-8)


@pytest.mark.parametrize("theta0", [0.0, 0.4, math.pi / 2, 2.5])
def test_initial_state_matches_direct_reference(theta0):
    q = preset("power_law")
    s = initial_state(q, 1.0, theta0)
    x1 = x_of_xi(1.0)
    u, du = u_reference("power_law", 1.0, 0.0, math.sin(theta0), math.cos(theta0),
                        np.array([0.0, x1]), max_step=0.01)
    w, dw = push_solution(u[-1], du[-1], x1)
    R = math.exp(s.logR)
    assert R > 0
    assert R * math.sin(s.theta) == pytest.approx(w, abs=1e-9)
    assert R * math.cos(s.theta) == pytest.approx(dw, abs=1e-9)


def test_initial_state_phase_branch_continuous():
    s = initial_state(preset("zero"), 0.0, math.pi / 2)
    assert abs(s.theta - math.pi / 2) < math.pi


def test_initial_state_rejects_bad_input():
    with pytest.raises(ValueError):
        initial_state(preset("zero"), 0.0, 0.0, xi0=0.0)
    with pytest.raises(ValueError):
        initial_state(preset("zero"), 0.0, 0.0, amplitude=0.0)


@pytest.mark.parametrize("name", PRESETS)
@pytest.mark.parametrize("lam", [-2.0, 0.0, 1.0, 3.0])
def test_integral6_identity(name, lam):
    traj = trajectory(name, lam, 1e3)
    N = traj.diag_xi
    lhs = integral6_partial(traj, N)
    rhs = 2.0 * (traj.diag_y[:, 0] - traj.logR[0])
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_integral6_partial_examples():
    traj = trajectory("zero", 0.0, 1e3)
    assert integral6_partial(traj, traj.xi0) == 0.0
    assert abs(integral6_partial(traj, traj.Xi)) <= 5.0 / 36.0
    with pytest.raises(RangeError):
        integral6_partial(traj, 2e3)
    with pytest.raises(RangeError):
        integral6_partial(traj, 0.5)


@pytest.mark.parametrize("name", PRESETS)
def test_stored_partials_match_recomputation(name):
    traj = trajectory(name, 1.0, 1e3)
    np.testing.assert_allclose(integral6_partial(traj, traj.xi), traj.integral6, rtol=0, atol=1e-10)
    np.testing.assert_allclose(integral6_partial(traj, traj.diag_xi), traj.diag_integral6,
                               rtol=0, atol=1e-10)


def test_zero_potential_amplitude_bound():
    traj = trajectory("zero", 0.0, 100.0)
    assert abs(traj.logR[-1] - traj.logR[0]) <= 5.0 / 72.0
    assert amplitude_bound(traj) <= 5.0 / 72.0


def test_zero_potential_phase_grows_linearly():
    traj = trajectory("zero", 0.0, 1e3)
    rate = (traj.theta[-1] - traj.theta[0]) / (traj.Xi - traj.xi0)
    assert rate == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("name", PRESETS)
def test_phase_monotone_where_v_small(name):
    traj = trajectory(name, 1.0, 1e3)
    a, b = traj.xi[:-1], traj.xi[1:]
    vmax = np.maximum(np.abs(effective_potential(traj.q, a, 1.0)),
                      np.abs(effective_potential(traj.q, b, 1.0)))
    mid = np.abs(effective_potential(traj.q, 0.5 * (a + b), 1.0))
    vmax = np.maximum(vmax, mid)
    dth = np.diff(traj.theta)
    sel = vmax < 0.5
    # allow for |V| varying between the three sample points
    assert np.all(dth[sel] >= (1.0 - 1.5 * vmax[sel]) * (b - a)[sel] - 1e-10)


@pytest.mark.parametrize("name", PRESETS)
@pytest.mark.parametrize("lam", [-2.0, 0.0, 1.0, 3.0])
def test_oracle_equivalence(name, lam):
    traj = trajectory(name, lam, 1e3)
    xi = np.linspace(1.0, 100.0, 400)
    w0, dw0 = traj.omega(1.0)
    w, dw = omega_reference(name, lam, 1.0, w0[0], dw0[0], xi, max_step=0.1)
    R2 = np.exp(2.0 * traj.evaluate(xi)[:, 0])
    assert np.max(np.abs(R2 - (w * w + dw * dw)) / R2) < 1e-6


def test_samples_ordered_and_bounded():
    traj = trajectory("power_law", 1.0, 1e3)
    assert traj.xi[0] == traj.xi0 and traj.xi[-1] == traj.Xi
    assert np.all(np.diff(traj.xi) > 0)
    assert np.all(np.diff(traj.xi) <= MAX_STEP * (1 + 1e-12))
    s = traj.samples
    assert isinstance(s[0], PruferState) and len(s) == len(traj.xi)
    assert traj.step_stats["steps"] >= len(traj.xi) - 1
    N, v = traj.integral6_partials
    assert N.size == v.size and N[0] == traj.xi0


def test_trajectory_is_immutable():
    traj = trajectory("zero", 0.0, 100.0)
    with pytest.raises(ValueError):
        traj.y[0, 0] = 1.0


def test_integrate_prufer_argument_checks():
    q = preset("zero")
    s = initial_state(q, 0.0, 0.0)
    with pytest.raises(ValueError):
        integrate_prufer(q, 0.0, s, 0.5)
    with pytest.raises(ValueError):
        integrate_prufer(q, 0.0, s, 10.0, rtol=1e-2)
    with pytest.raises(ValueError):
        integrate_prufer(q, 0.0, s, 10.0, rtol=1e-14)


def test_tabulated_range_is_enforced(tmp_path):
    path = tmp_path / "q.csv"
    x = np.linspace(0, 20, 201)
    path.write_text("x,q\n" + "\n".join(f"{a},{0.1 / (1 + a)}" for a in x))
    q = load_tabulated(path)
    s = initial_state(q, 0.0, 0.0)
    traj = integrate_prufer(q, 0.0, s, 50.0)
    assert traj.Xi == 50.0
    with pytest.raises(RangeError):
        integrate_prufer(q, 0.0, s, 100.0)


def test_stiffness_error_carries_payload():
    # a huge potential forces the step size to the floor
    q = PotentialSpec("power_law", amplitude=1e30, decay_exponent=0.0)
    s = PruferState(1.0, 0.0, 0.3)
    with pytest.raises(StiffnessError) as info:
        integrate_prufer(q, 0.0, s, 10.0)
    assert info.value.reached >= 1.0
    assert "steps" in info.value.stats


def test_convergence_verdict_examples():
    N = np.geomspace(1.0, 1e4, 257)
    cv = convergence_verdict((N, np.full_like(N, 0.3)))
    assert cv.converged and cv.oscillation == 0.0
    cv = convergence_verdict((N, np.log(N)))
    assert not cv.converged
    assert cv.oscillation == pytest.approx(math.log(10.0), rel=1e-12)
    assert cv.drift == pytest.approx(math.log(10.0), rel=1e-12)
    # list-of-pairs input is accepted too
    cv2 = convergence_verdict(list(zip(N, np.log(N))))
    assert cv2.oscillation == cv.oscillation


def test_convergence_verdict_rate_slope():
    N = np.geomspace(1.0, 1e6, 1201)
    cv = convergence_verdict((N, N ** -0.5 * np.sin(N)))
    assert cv.converged
    assert cv.rate_slope == pytest.approx(-0.5, abs=0.1)


def test_convergence_verdict_needs_two_decades():
    N = np.geomspace(1.0, 50.0, 30)
    with pytest.raises(RangeError):
        convergence_verdict((N, N))


def test_power_law_converges_at_lambda_one():
    traj = trajectory("power_law", 1.0, 1e4)
    cv = convergence_verdict(traj.integral6_partials)
    assert cv.converged and cv.oscillation < 0.05


def test_sigma_gamma_zero_potential():
    traj = trajectory("zero", 0.0, 100.0)
    sg = sigma_gamma(traj)
    b = -5.0 / (36.0 * sg.xi ** 2)
    np.testing.assert_allclose(sg.b, b, rtol=1e-13)
    # sigma' = 2 - b here, so sigma - 2 xi = (5/36)(1/xi0 - 1/xi), a constant plus O(1/xi)
    np.testing.assert_allclose(sg.sigma - 2 * sg.xi, 5.0 / 36.0 * (1.0 - 1.0 / sg.xi), atol=1e-10)
    np.testing.assert_allclose(sg.gamma, 2 * sg.theta - sg.sigma, rtol=0, atol=0)
    assert sg.gamma[0] == 2 * traj.theta[0] - sg.sigma[0]


@pytest.mark.parametrize("name", PRESETS)
@pytest.mark.parametrize("lam", [0.0, 1.5])
def test_gamma_residual(name, lam):
    traj = trajectory(name, lam, 1e3)
    assert gamma_residual(traj) <= 1e-6


def test_tilde_pair_uses_v():
    traj = trajectory("power_law", 1.0, 100.0)
    sg = sigma_gamma(traj, [2.0, 50.0])
    xi = np.linspace(1.0, 50.0, 200001)
    ref = 2 * 50.0 - np.trapezoid(effective_potential(traj.q, xi, 1.0), xi)
    assert sg.sigma_tilde[1] == pytest.approx(ref, abs=1e-6)


def test_control_decaying_zero_potential_bound():
    traj = trajectory("zero", 0.0, 1e3)
    for xi in (2.0, 10.0, 50.0):
        c = control_decaying(traj.q, 0.0, traj, xi)
        assert 0 <= c.value <= (5.0 / 36.0) ** 3 * xi ** -4 * (1 + 1e-9)
        assert abs(c.tail) <= 5.0 / (36.0 * xi)


def test_control_smooth_zero_potential_bound():
    traj = trajectory("zero", 0.0, 1e3)
    for xi in (2.0, 10.0, 50.0):
        c = control_smooth(traj.q, 0.0, traj, xi)
        assert abs(c.w_plus) <= 5.0 / (36.0 * xi)
        assert c.w_minus == c.w_plus.conjugate()
        assert c.control >= 0


def test_control_tail_against_direct_quadrature():
    traj = trajectory("power_law", 1.0, 1e3)
    xi = np.linspace(20.0, 1e3, 400001)
    sg = sigma_gamma(traj, xi)
    ref = np.trapezoid(sg.b * np.exp(1j * sg.sigma), xi)
    c = control_decaying(traj.q, 1.0, traj, 20.0)
    assert abs(c.tail - ref) < 1e-6


def test_control_argument_checks():
    traj = trajectory("zero", 0.0, 1e3)
    with pytest.raises(ValueError):
        control_decaying(preset("power_law"), 0.0, traj, 10.0)
    with pytest.raises(ValueError):
        control_decaying(traj.q, 1.0, traj, 10.0)
    with pytest.raises(ValueError):
        control_decaying(traj.q, 0.0, traj, 10.0, Xi_max=500.0)


def test_unreliable_tail_near_end():
    traj = trajectory("power_law", 1.0, 1e3)
    with pytest.raises(UnreliableTailError):
        control_decaying(traj.q, 1.0, traj, 999.9)


def test_power_law_decaying_control_slope():
    traj = trajectory("power_law", 1.0, 1e4)
    prof = control_profile(traj, "decaying", 1e2, 1e4)
    assert np.all(prof.value >= 0)
    assert control_slope(prof) <= -1.0


def test_weierstrass_smooth_control_slope():
    traj = trajectory("weierstrass_smooth", 1.0, 1e4)
    prof = control_profile(traj, "smooth", 1e2, 1e4)
    assert control_slope(prof) <= -1.23


def test_trajectory_table_columns():
    traj = trajectory("power_law", 1.0, 100.0)
    t = trajectory_table(traj)
    assert list(t) == ["xi", "logR", "theta", "V", "b", "sigma", "gamma"]
    np.testing.assert_allclose(t["gamma"], 2 * t["theta"] - t["sigma"])
    np.testing.assert_allclose(t["b"], b_term(traj.q, t["xi"]))
    assert len(trajectory_table(traj, "steps")["xi"]) == len(traj.xi)
    with pytest.raises(ValueError):
        trajectory_table(traj, "nowhere")


def test_spectral_verdict_validation():
    with pytest.raises(ValueError):
        SpectralVerdict(1.0, verdict="maybe")
    with pytest.raises(ValueError):
        SpectralVerdict(1.0, verdict="ac_consistent")
    v = SpectralVerdict(1.0, amplitude_bound=0.1, integral6_oscillation=0.01, verdict="ac_consistent")
    assert v.to_dict()["verdict"] == "ac_consistent"


def test_amplitude_bound_settles_for_power_law():
    traj = trajectory("power_law", 1.0, 1e4)
    assert amplitude_bound(traj) - amplitude_bound(traj, 1e3) <= 0.05
