import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from bdsim import observables
from bdsim.hilbert import (
    SpaceLayout,
    basis_state,
    embed,
    ket,
    local_operator,
    sigma_minus,
    sigma_plus,
    sigma_x,
    sigma_y,
    sigma_z,
)
from bdsim.lindblad import LocalBath, dissipator_apply, local_liouvillian
from bdsim.observables import (
    cfi_projective,
    concurrence,
    effective_temperature,
    excitation_current_bath,
    fidelity,
    heat_current,
    order_parameters,
    qfi_diagonal,
    rectification_and_contrast,
    spin_current,
    variance_derivative_argmax,
    von_neumann_entropy,
    work_rate,
)
from bdsim.solver import steady_state_direct


def random_density(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_unitary(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def bell_minus():
    psi = (np.kron(ket(0, 2), ket(1, 2)) - np.kron(ket(1, 2), ket(0, 2))) / np.sqrt(2)
    return np.outer(psi, psi)


class TestExcitationCurrent:
    def test_equilibrium_vanishes(self):
        n = 0.4
        rho = np.diag([(n + 1) / (2 * n + 1), n / (2 * n + 1)]).astype(complex)
        j = excitation_current_bath(0.7, n, sigma_minus(), rho)
        assert abs(j) < 1e-14

    def test_two_level_transport_formula(self):
        g_l, g_r, n_l, n_r = 0.8, 0.5, 0.6, 0.1
        liou = local_liouvillian(
            0.5 * sigma_z(),
            [
                LocalBath(sigma_minus(), g_l * (n_l + 1)),
                LocalBath(sigma_plus(), g_l * n_l),
                LocalBath(sigma_minus(), g_r * (n_r + 1)),
                LocalBath(sigma_plus(), g_r * n_r),
            ],
        )
        rho = steady_state_direct(liou)
        j_l = excitation_current_bath(g_l, n_l, sigma_minus(), rho)
        expected = (
            (n_l - n_r) * g_l * g_r / (g_l * (1 + 2 * n_l) + g_r * (1 + 2 * n_r))
        )
        assert j_l == pytest.approx(expected, abs=1e-12)
        # conservation: left in equals right out
        j_r = excitation_current_bath(g_r, n_r, sigma_minus(), rho)
        assert abs(j_l + j_r) < 1e-9

    def test_symmetric_baths_no_current(self):
        g, n = 0.6, 0.3
        liou = local_liouvillian(
            0.5 * sigma_z(),
            [
                LocalBath(sigma_minus(), 2 * g * (n + 1)),
                LocalBath(sigma_plus(), 2 * g * n),
            ],
        )
        rho = steady_state_direct(liou)
        assert abs(excitation_current_bath(g, n, sigma_minus(), rho)) < 1e-9


class TestSpinCurrent:
    def test_product_state_vanishes(self):
        layout = SpaceLayout((2, 2))
        psi = basis_state((0, 0), layout)
        assert spin_current(np.outer(psi, psi), 0, 1, 1.0, layout) == pytest.approx(0.0)

    def test_link_conservation_in_chain(self):
        # boundary-driven 3-qubit XX chain: current through link (0,1)
        # equals current through link (1,2) in the steady state
        layout = SpaceLayout((2, 2, 2))
        j = 1.0
        ham = sum(
            j
            * (
                embed(sigma_x(), i, layout) @ embed(sigma_x(), i + 1, layout)
                + embed(sigma_y(), i, layout) @ embed(sigma_y(), i + 1, layout)
            )
            for i in range(2)
        )
        baths = [
            LocalBath(embed(sigma_plus(), 0, layout), 0.9),
            LocalBath(embed(sigma_minus(), 0, layout), 0.3),
            LocalBath(embed(sigma_minus(), 2, layout), 1.1),
        ]
        rho = steady_state_direct(local_liouvillian(ham, baths))
        j01 = spin_current(rho, 0, 1, j, layout)
        j12 = spin_current(rho, 1, 2, j, layout)
        assert abs(j01 - j12) < 1e-8


class TestHeatCurrent:
    def test_zero_dissipator(self):
        assert heat_current(sigma_z(), np.zeros((2, 2))) == 0.0

    def test_steady_state_balance(self):
        # two baths at different occupations: heat in = heat out
        rng = np.random.default_rng(4)
        omega = 1.0
        ham = 0.5 * omega * sigma_z()
        hot = [
            LocalBath(sigma_minus(), 1.5), LocalBath(sigma_plus(), 0.9)]
        cold = [LocalBath(sigma_minus(), 0.8), LocalBath(sigma_plus(), 0.1)]
        rho = steady_state_direct(local_liouvillian(ham, hot + cold))
        k_hot = heat_current(
            ham,
            1.5 * dissipator_apply(sigma_minus(), rho)
            + 0.9 * dissipator_apply(sigma_plus(), rho),
        )
        k_cold = heat_current(
            ham,
            0.8 * dissipator_apply(sigma_minus(), rho)
            + 0.1 * dissipator_apply(sigma_plus(), rho),
        )
        assert abs(k_hot + k_cold) < 1e-10


class TestWorkRate:
    def test_static_hamiltonian(self):
        rho = np.diag([0.5, 0.5]).astype(complex)
        assert work_rate(np.zeros((2, 2)), rho) == 0.0

    def test_linear_ramp(self):
        rng = np.random.default_rng(5)
        v = rng.standard_normal((3, 3))
        v = v + v.T
        rho = random_density(rng, 3)
        assert work_rate(v, rho) == pytest.approx(np.trace(v @ rho).real)


class TestRectificationAndContrast:
    def test_symmetric_currents(self):
        r, c = rectification_and_contrast(1.0, -1.0)
        assert r == pytest.approx(1.0)
        assert c == pytest.approx(0.0)

    def test_perfect_diode_limit(self):
        r, c = rectification_and_contrast(1.0, -1e-15)
        assert c == pytest.approx(1.0, abs=1e-12)
        assert r > 1e12

    def test_zero_reverse_marker(self):
        r, _ = rectification_and_contrast(1.0, 0.0)
        assert r == np.inf

    def test_undefined_contrast(self):
        with pytest.raises(ValueError):
            rectification_and_contrast(0.0, 0.0)


class TestConcurrence:
    def test_bell_state(self):
        assert concurrence(bell_minus()) == pytest.approx(1.0, abs=1e-12)

    def test_product_state(self):
        rng = np.random.default_rng(6)
        rho = np.kron(random_density(rng, 2), random_density(rng, 2))
        assert concurrence(rho) == pytest.approx(0.0, abs=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.0, 1.0))
    def test_werner_state(self, p):
        rho = p * bell_minus() + (1 - p) * np.eye(4) / 4
        assert concurrence(rho) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-10)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_local_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(rng, 4)
        u = np.kron(random_unitary(rng, 2), random_unitary(rng, 2))
        assert concurrence(u @ rho @ u.conj().T) == pytest.approx(
            concurrence(rho), abs=1e-8
        )

    def test_rejects_negative_state(self):
        with pytest.raises(ValueError):
            concurrence(np.diag([0.6, 0.5, -0.1, 0.0]))


class TestEntropy:
    def test_pure_state(self):
        assert von_neumann_entropy(np.diag([1.0, 0.0])) == pytest.approx(0.0)

    def test_maximally_mixed(self):
        assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(np.log(2))

    def test_thermal_two_thirds(self):
        assert von_neumann_entropy(np.diag([2 / 3, 1 / 3])) == pytest.approx(
            0.6365, abs=1e-4
        )

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(rng, 5)
        u = random_unitary(rng, 5)
        assert von_neumann_entropy(u @ rho @ u.conj().T) == pytest.approx(
            von_neumann_entropy(rho), abs=1e-10
        )


class TestFidelity:
    def test_identical_states(self):
        rng = np.random.default_rng(7)
        rho = random_density(rng, 3)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal_pure_states(self):
        assert fidelity(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(0.0)

    def test_pure_vs_mixed_is_expectation(self):
        rng = np.random.default_rng(8)
        rho = random_density(rng, 4)
        psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi /= np.linalg.norm(psi)
        assert fidelity(rho, psi) == pytest.approx(
            np.real(psi.conj() @ rho @ psi), abs=1e-12
        )

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(rng, 3)
        sigma = random_density(rng, 3)
        assert fidelity(rho, sigma) == pytest.approx(fidelity(sigma, rho), abs=1e-10)


class TestEffectiveTemperature:
    def test_unit_occupation(self):
        assert effective_temperature(1.0) == pytest.approx(1 / np.log(2))

    def test_small_occupation_limit(self):
        assert effective_temperature(1e-8) < 0.06

    def test_monotone(self):
        samples = [effective_temperature(n) for n in (0.2, 0.5, 1.5)]
        assert samples[0] < samples[1] < samples[2]

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            effective_temperature(0.0)


class TestQfiDiagonal:
    def test_parameter_independent_family(self):
        rho = np.diag([0.7, 0.3]).astype(complex)
        res = qfi_diagonal(lambda theta: rho, 0.5)
        assert res.value == pytest.approx(0.0, abs=1e-8)

    def test_lorentzian_two_outcome_family(self):
        # p(theta) = A / (theta^2 + (L/2)^2): QFI of a binary diagonal
        # family equals the classical Fisher information of (p, 1-p)
        lam = 0.02
        amp = (lam / 2) ** 2  # p(0) = 1

        def family(theta):
            p = amp / (theta**2 + (lam / 2) ** 2)
            return np.diag([p, 1 - p]).astype(complex)

        theta0 = lam / 2
        res = qfi_diagonal(family, theta0, step=lam * 1e-3)
        p0 = amp / (theta0**2 + (lam / 2) ** 2)
        dp = -amp * 2 * theta0 / (theta0**2 + (lam / 2) ** 2) ** 2
        expected = dp**2 / p0 + dp**2 / (1 - p0)
        assert res.value == pytest.approx(expected, rel=0.01)

    def test_cramer_rao_bound(self):
        # binomial estimation of theta from outcome probability p(theta)
        def family(theta):
            p = 0.5 + 0.4 * np.sin(theta)
            return np.diag([p, 1 - p]).astype(complex)

        theta0 = 0.3
        res = qfi_diagonal(family, theta0, step=1e-4)
        rng = np.random.default_rng(9)
        shots = 1000
        p_true = 0.5 + 0.4 * np.sin(theta0)
        estimates = []
        for _ in range(200):
            k = rng.binomial(shots, p_true)
            p_hat = np.clip(k / shots, 0.11, 0.89)
            estimates.append(np.arcsin((p_hat - 0.5) / 0.4))
        var = np.var(estimates)
        assert var >= 1.0 / (res.value * shots) * 0.8  # finite-shot slack


class TestCfiProjective:
    def test_two_spin_oscillation(self):
        # closed transfer: P(down_1, t) = cos^2(J t) measured at fixed t,
        # estimating J; I = 16 t^2 at J t = pi/4 where p = 1/2
        t = 0.7

        def probs(j):
            p = np.cos(j * t) ** 2
            return np.array([p, 1 - p])

        j0 = np.pi / (4 * t)
        res = cfi_projective(probs, j0, step=1e-5)
        assert res.value == pytest.approx(16 * t**2 / 4, rel=1e-4)

    def test_deterministic_outcome(self):
        res = cfi_projective(lambda theta: np.array([1.0, 0.0]), 0.2)
        assert res.value == pytest.approx(0.0, abs=1e-8)

    def test_bounded_by_qfi(self):
        def family(theta):
            p = 0.5 + 0.3 * np.tanh(theta)
            return np.diag([p, 1 - p]).astype(complex)

        def probs(theta):
            p = 0.5 + 0.3 * np.tanh(theta)
            return np.array([p, 1 - p])

        theta0 = 0.4
        q = qfi_diagonal(family, theta0).value
        c = cfi_projective(probs, theta0).value
        assert c <= q * (1 + 1e-6)


class TestOrderParameters:
    def test_mott_state(self):
        layout = SpaceLayout((4, 4, 4, 4))
        psi = basis_state((1, 1, 1, 1), layout)
        n, a, kappa = order_parameters(np.outer(psi, psi), layout)
        assert (n, a, kappa) == (
            pytest.approx(1.0),
            pytest.approx(0.0, abs=1e-12),
            pytest.approx(0.0, abs=1e-12),
        )

    def test_number_eigenstate_has_zero_a(self):
        layout = SpaceLayout((3, 3))
        psi = (basis_state((2, 0), layout) + basis_state((1, 1), layout)) / np.sqrt(2)
        _, a, _ = order_parameters(np.outer(psi, psi), layout)
        assert a == pytest.approx(0.0, abs=1e-12)

    def test_product_superposition(self):
        layout = SpaceLayout((2, 2))
        single = (ket(0, 2) + ket(1, 2)) / np.sqrt(2)
        psi = np.kron(single, single)
        n, a, kappa = order_parameters(np.outer(psi, psi), layout)
        assert a == pytest.approx(0.5, abs=1e-12)
        assert kappa == pytest.approx(0.0, abs=1e-12)
        assert n == pytest.approx(0.5)

    def test_kappa_and_a_nonnegative(self):
        layout = SpaceLayout((3, 3))
        rho = random_density(np.random.default_rng(10), 9)
        _, a, kappa = order_parameters(rho, layout)
        assert a >= 0.0
        assert kappa >= 0.0


class TestVarianceDerivativeArgmax:
    def test_quadratic_flags_boundary(self):
        j = np.linspace(0.0, 1.0, 11)
        with pytest.warns(UserWarning, match="boundary"):
            j_star, flagged = variance_derivative_argmax(j, j**2)
        assert flagged
        assert j_star > 0.85

    def test_sigmoid_inflection(self):
        j = np.linspace(0.0, 0.12, 121)
        center = 0.06
        var = 1.0 / (1.0 + np.exp(-(j - center) / 0.01))
        j_star, flagged = variance_derivative_argmax(j, var)
        assert not flagged
        assert j_star == pytest.approx(center, abs=0.001)

    def test_requires_five_points(self):
        with pytest.raises(ValueError):
            variance_derivative_argmax(np.array([0.0, 0.1, 0.2]), np.zeros(3))
