import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from hypothesis import given
from hypothesis import strategies as st

from muskat_energy import solver as S
from muskat_energy.mesh import build_phase_mesh
from muskat_energy.model import Boundary, DomainSpec, FluidParams, InterfaceProfile, validate_config
from muskat_energy.profiles import gaussian_bumps
from muskat_energy.solver import (
    NoConvergence,
    SingularForm,
    assemble,
    build_meshes,
    interface_mass_matrix,
    interface_velocity,
    jump_data,
    minimize,
    one_fluid_dtn,
    one_fluid_solve,
    pcg,
    solve_problem,
    stiffness_matrix,
)

from conftest import two_phase


def spd(n, rng):
    Q = rng.standard_normal((n, n))
    return sp.csr_matrix(Q @ Q.T + n * np.eye(n))


# -- conjugate gradients -------------------------------------------------------


def test_pcg_matches_dense_solve(rng):
    A = spd(40, rng)
    b = rng.standard_normal(40)
    res = pcg(A, b, rtol=1e-12)
    assert res.converged and res.residual <= 1e-12
    assert np.allclose(res.x, np.linalg.solve(A.toarray(), b), rtol=1e-10)
    assert res.min_ritz > 0


def test_pcg_zero_rhs_returns_zero():
    res = pcg(sp.eye(5, format="csr"), np.zeros(5), x0=np.ones(5))
    assert res.iterations == 0 and not np.any(res.x)


def test_pcg_detects_indefinite():
    A = sp.diags([1.0, 1.0, -1.0, 1.0], format="csr")
    with pytest.raises(SingularForm):
        pcg(A, np.array([0.0, 0.0, 1.0, 0.0]))
    with pytest.raises(SingularForm):
        pcg(sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]])), np.array([1.0, -1.0]))


def test_pcg_reports_non_convergence(rng):
    A = sp.diags(np.linspace(1, 1e6, 200), format="csr") + sp.csr_matrix(
        1e-3 * np.ones((200, 200))
    )
    res = pcg(A, rng.standard_normal(200), maxiter=2)
    assert not res.converged and res.iterations == 2


def test_minimize_raises_no_convergence(tent_problem, monkeypatch):
    form = assemble(build_meshes(tent_problem, 16, 8), tent_problem.params, np.ones(17))
    real = S.pcg
    monkeypatch.setattr(S, "pcg", lambda *a, **k: real(*a, **{**k, "maxiter": 1}))
    with pytest.raises(NoConvergence) as exc:
        minimize(form)
    assert exc.value.iterations == 1


def test_minimize_rejects_bad_tolerance(tent_problem):
    form = assemble(build_meshes(tent_problem, 8, 4), tent_problem.params, np.ones(9))
    with pytest.raises(ValueError):
        minimize(form, rel_tol=0.1)


# -- assembly ------------------------------------------------------------------


def test_stiffness_matrix_properties():
    eta = gaussian_bumps(5)
    m = build_phase_mesh(DomainSpec.flat(4.0, 4.0), eta, 64, 8)
    A = stiffness_matrix(m)
    assert abs(A - A.T).max() < 1e-14
    assert np.allclose(A @ np.ones(m.n_nodes), 0.0, atol=1e-12)
    # D(y) = area for the function y
    _, y = m.points()
    assert y @ (A @ y) == pytest.approx(m.area(), rel=1e-12)


def test_stiffness_matrix_hand_assembly():
    # two stacked unit squares: nodes (i, j) for i, j in {0, 1} x {0, 1, 2}
    eta = InterfaceProfile(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    dom = DomainSpec(0.5, Boundary(level=-1.0), Boundary(level=2.0))
    m = build_phase_mesh(dom, InterfaceProfile(eta.x_nodes - 0.5, eta.eta_values), 1, 2, "minus")
    Ke = np.array([[4, -1, -2, -1], [-1, 4, -1, -2], [-2, -1, 4, -1], [-1, -2, -1, 4]]) / 6
    A = np.zeros((6, 6))
    for j in range(2):
        nodes = [m.node_index(0, j), m.node_index(1, j), m.node_index(1, j + 1), m.node_index(0, j + 1)]
        A[np.ix_(nodes, nodes)] += Ke
    assert np.allclose(stiffness_matrix(m).toarray(), A, atol=1e-14)


def test_interface_mass_matrix_integrates_products(rng):
    x = np.sort(rng.uniform(-1, 1, 9))
    M = interface_mass_matrix(x)
    assert M @ np.ones(9) @ np.ones(9) == pytest.approx(x[-1] - x[0])
    # int x^2 dx exactly for the linear interpolant of x
    assert x @ (M @ x) == pytest.approx((x[-1] ** 3 - x[0] ** 3) / 3, rel=1e-12)


def kkt_oracle(form):
    """Dense Lagrange-multiplier solve of the constrained minimization."""
    p = form.params
    Am, Ap = form.A_minus.toarray(), form.A_plus.toarray()
    nm, npl = Am.shape[0], Ap.shape[0]
    H = np.zeros((nm + npl, nm + npl))
    H[:nm, :nm] = p.mu_minus * Am
    H[nm:, nm:] = p.mu_plus * Ap
    im = form.meshes.minus.interface_nodes
    ip = form.meshes.plus.interface_nodes
    nt = im.size
    C = np.zeros((nt + 1, nm + npl))
    C[np.arange(nt), im] = 1.0
    C[np.arange(nt), nm + ip] = -1.0
    C[nt, form.grounded] = 1.0
    d = np.concatenate([form.jump, [0.0]])
    K = np.block([[H, C.T], [C, np.zeros((nt + 1, nt + 1))]])
    sol = np.linalg.solve(K, np.concatenate([np.zeros(nm + npl), d]))
    f = sol[: nm + npl]
    return f[:nm], f[nm:], float(f @ H @ f)


@pytest.mark.parametrize("mu", [(1.0, 1.0), (0.01, 1.0), (5.0, 0.2)])
def test_minimizer_matches_kkt_oracle(mu):
    prob = two_phase(InterfaceProfile.tent(0.8, 1.0), mu=mu, X=2.0, D=2.0)
    meshes = build_meshes(prob, 16, 8)
    form = assemble(meshes, prob.params, jump_data(prob.params, meshes.trace_profile()))
    sol = minimize(form, rel_tol=1e-12)
    fm, fp, E = kkt_oracle(form)
    assert sol.energy == pytest.approx(E, rel=1e-9)
    assert np.allclose(sol.f_minus, fm, atol=1e-8)
    assert np.allclose(sol.f_plus, fp, atol=1e-8)


def test_lift_phase_does_not_change_the_minimizer():
    prob = two_phase(InterfaceProfile.tent(0.8, 1.0), mu=(0.1, 1.0), X=2.0, D=2.0)
    meshes = build_meshes(prob, 32, 16)
    jump = jump_data(prob.params, meshes.trace_profile())
    a = minimize(assemble(meshes, prob.params, jump, "minus"), 1e-12)
    b = minimize(assemble(meshes, prob.params, jump, "plus"), 1e-12)
    assert a.energy == pytest.approx(b.energy, rel=1e-9)
    assert np.allclose(a.f_minus, b.f_minus, atol=1e-8)


def test_pcg_matches_sparse_direct(tent_problem):
    meshes = build_meshes(tent_problem, 128, 64)
    form = assemble(meshes, tent_problem.params, jump_data(tent_problem.params, meshes.trace_profile()))
    sol = minimize(form, rel_tol=1e-12)
    w = spla.spsolve(form.K.tocsc(), -form.c)
    assert sol.energy == pytest.approx(form.value(w), rel=1e-10)
    assert np.allclose(sol.w, w, atol=1e-8 * np.abs(w).max())


def test_minimizer_is_independent_of_start(tent_problem, rng):
    meshes = build_meshes(tent_problem, 32, 16)
    form = assemble(meshes, tent_problem.params, jump_data(tent_problem.params, meshes.trace_profile()))
    a = minimize(form, 1e-12)
    b = minimize(form, 1e-12, x0=rng.standard_normal(form.n_dof))
    assert np.allclose(a.w, b.w, atol=1e-8)


def test_assembled_pairs_are_admissible(tent_problem, rng):
    meshes = build_meshes(tent_problem, 32, 16)
    jump = rng.standard_normal(33)
    form = assemble(meshes, tent_problem.params, jump)
    fm, fp = form.expand(rng.standard_normal(form.n_dof))
    assert np.allclose(form.pair_jump(fm, fp), jump, atol=1e-14)
    assert fm[form.grounded] == 0.0


@given(st.integers(0, 2**32 - 1))
def test_minimizer_beats_admissible_perturbations(seed):
    r = np.random.default_rng(seed)
    prob = two_phase(InterfaceProfile.tent(1.0, 1.0), mu=(r.uniform(0.1, 2), r.uniform(0.1, 2)))
    meshes = build_meshes(prob, 16, 8)
    form = assemble(meshes, prob.params, jump_data(prob.params, meshes.trace_profile()))
    sol = minimize(form, 1e-12)
    dw = r.standard_normal(form.n_dof) * 10.0 ** r.uniform(-3, 0)
    fm, fp = form.expand(sol.w + dw)
    assert form.energy_of_pair(fm, fp) >= sol.energy * (1 - 1e-12)


def test_zero_jump_needs_no_iterations():
    prob = two_phase(InterfaceProfile.flat(1.0))
    ps = solve_problem(prob, 32, 16)
    assert ps.energy == 0.0 and ps.solution.iterations == 0
    assert not np.any(ps.flux.velocity)


def test_energy_is_quadratic_in_density_jump(tent):
    base = solve_problem(two_phase(tent), 64, 32, 1e-12).energy
    scaled = solve_problem(two_phase(tent, rho=(0.0, 3.0)), 64, 32, 1e-12).energy
    assert scaled == pytest.approx(9 * base, rel=1e-9)


# -- interface flux ------------------------------------------------------------


def test_flux_green_identity_and_mass(tent_problem):
    ps = solve_problem(tent_problem, 128, 64, 1e-12)
    V = ps.flux
    # discrete Green identity: int V J dx = -E_h
    assert V.pair_with(ps.solution.jump) == pytest.approx(-ps.energy, rel=1e-9)
    # the lower fluid is incompressible with a grounded Neumann box: zero net flux
    assert abs(V.integral()) <= 1e-8 * np.abs(V.velocity).max()
    # the crest falls
    k = int(np.argmax(ps.flux.x == 0.0))
    assert V.velocity[k] < 0


def test_flux_requires_solution_consistency(tent_problem):
    ps = solve_problem(tent_problem, 32, 16, 1e-12)
    f = interface_velocity(ps.solution)
    assert np.array_equal(f.velocity, ps.flux.velocity)


def test_sigma_jump_is_first_variation_of_area(rng):
    # int sigma kappa_v psi dx equals the derivative of sigma * rArea along psi
    from muskat_energy.model import renormalized_area

    x = np.linspace(-2, 2, 33)
    eta = InterfaceProfile(x, np.concatenate([[0.0], rng.uniform(-0.5, 0.5, 31), [0.0]]))
    params = FluidParams(1, 1, 0, 1, sigma=1.0)
    kv = jump_data(params, eta) - params.rho_jump * eta.eta_values
    M = interface_mass_matrix(x)
    psi = np.concatenate([[0.0], rng.standard_normal(31), [0.0]])
    e = 1e-6
    fd = (
        renormalized_area(InterfaceProfile(x, eta.eta_values + e * psi))
        - renormalized_area(InterfaceProfile(x, eta.eta_values - e * psi))
    ) / (2 * e)
    assert kv @ (M @ psi) == pytest.approx(fd, rel=1e-6)


# -- one fluid ------------------------------------------------------------------


def one_fluid(eta, X=4.0, D=4.0):
    return validate_config(FluidParams(0, 1, 0, 1, one_fluid=True), eta, DomainSpec.flat_one_fluid(X, D))


def test_one_fluid_flat_gives_zero():
    s = one_fluid_dtn(one_fluid(InterfaceProfile.flat(1.0)), 32, 32)
    assert s.dirichlet_energy == 0.0 and not np.any(s.dtn)


def test_one_fluid_constant_data_has_zero_dtn():
    m = build_phase_mesh(DomainSpec.flat_one_fluid(2.0, 2.0), InterfaceProfile.flat(1.0), 16, 16)
    s = one_fluid_solve(m, np.full(17, 0.7), 1e-12)
    assert np.allclose(s.dtn, 0.0, atol=1e-10) and s.dirichlet_energy < 1e-12


def test_one_fluid_tent_apex_approaches_one_from_above(tent):
    apex = []
    for n in (64, 128):
        s = one_fluid_dtn(one_fluid(tent), n, n, 1e-12)
        apex.append(s.dtn.max())
    # the corner value of G(eta)eta is exactly 1; the discrete value creeps down to it
    assert 1 < apex[1] < apex[0] < 1.02


def test_one_fluid_energy_pairs_with_dtn(tent):
    s = one_fluid_dtn(one_fluid(tent), 64, 64, 1e-12)
    M = interface_mass_matrix(s.mesh.x)
    assert s.mesh.interface_y @ (M @ s.dtn) == pytest.approx(s.dirichlet_energy, rel=1e-10)
