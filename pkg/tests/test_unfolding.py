import numpy as np
import pytest

from equnfold import d3
from equnfold.delays import DelayOperator, ExpVector
from equnfold.errors import UnfoldingError
from equnfold.frames import SpectralFrame
from equnfold.groups import close_generators, commutant_basis, equivariant_average
from equnfold.unfolding import (OrbitGeometry, UnfoldingFamily,
                                build_R_matrices, exponential_delay_matrix,
                                gamma_orbit_geometry, jordan_codimension,
                                orbit_geometry, project_unfolding_directions,
                                realify, scaled_det, select_delays,
                                semisimple_jordan_spec,
                                solve_delay_realization, theta_extract,
                                verify_gamma_versality)

I3 = np.eye(3)
J3 = np.ones((3, 3))


def random_jordan(rng, c):
    """A Jordan matrix of size c with a random block structure."""
    spec = []
    blocks = []
    remaining = c
    k = 0
    while remaining > 0:
        g = int(rng.integers(1, remaining + 1))
        sizes = []
        left = g
        while left > 0:
            b = int(rng.integers(1, left + 1))
            sizes.append(b)
            left -= b
        lam = (5.0 * k + rng.uniform(0, 1)) + 1j * rng.uniform(-1, 1)
        spec.append((lam, tuple(sizes)))
        for s in sizes:
            blocks.append(lam * np.eye(s) + np.eye(s, k=1))
        remaining -= g
        k += 1
    n = sum(b.shape[0] for b in blocks)
    B = np.zeros((n, n), dtype=complex)
    pos = 0
    for b in blocks:
        s = b.shape[0]
        B[pos:pos + s, pos:pos + s] = b
        pos += s
    return B, spec


class TestJordanCodimension:
    def test_worked_case_codimensions(self):
        simple = [(1j, (1,)), (-1j, (1,)), (2j, (1,)), (-2j, (1,))]
        double = [(1j, (1, 1)), (-1j, (1, 1)), (2j, (1, 1)), (-2j, (1, 1))]
        assert jordan_codimension(simple) == 4
        assert jordan_codimension(double) == 16

    def test_single_jordan_block(self):
        # one block of size n costs n; n 1x1 blocks cost n^2
        assert jordan_codimension([(0.0, (4,))]) == 4
        assert jordan_codimension([(0.0, (1, 1, 1, 1))]) == 16

    def test_semisimple_spec_builder(self):
        spec = semisimple_jordan_spec([1j, 1j, -1j, 3.0])
        assert spec == [(1j, (1, 1)), (-1j, (1,)), (3.0 + 0j, (1,))]


class TestOrbitGeometry:
    def test_distinct_diagonal(self):
        B = np.diag([1j, -1j, 2j, -2j])
        geo = orbit_geometry(B, semisimple_jordan_spec(np.diag(B)))
        assert geo.delta == 4
        expected = [np.zeros((4, 4)) for _ in range(4)]
        for i in range(4):
            expected[i][i, i] = 1.0
        for W, E in zip(geo.W_basis, expected):
            assert np.allclose(W, E)

    def test_double_diagonal_slot_order(self):
        B = np.diag([1j, 1j, -1j, -1j, 2j, 2j, -2j, -2j])
        geo = orbit_geometry(B, semisimple_jordan_spec(np.diag(B)))
        assert geo.delta == 16
        positions = [tuple(int(x) for x in np.argwhere(np.abs(W) > 0.5)[0])
                     for W in geo.W_basis]
        assert positions[:4] == [(0, 0), (2, 2), (4, 4), (6, 6)]
        assert positions[4:8] == [(1, 0), (3, 2), (5, 4), (7, 6)]
        assert positions[8:12] == [(0, 1), (2, 3), (4, 5), (6, 7)]
        assert positions[12:] == [(1, 1), (3, 3), (5, 5), (7, 7)]

    def test_zero_matrix(self):
        c = 3
        B = np.zeros((c, c))
        geo = orbit_geometry(B, [(0.0, (1,) * c)])
        assert geo.delta == c * c
        assert len(geo.T_basis) == 0

    def test_rank_matches_formula_on_random_specs(self, rng):
        for _ in range(20):
            c = int(rng.integers(2, 9))
            B, spec = random_jordan(rng, c)
            geo = orbit_geometry(B, spec)
            assert geo.delta == jordan_codimension(spec)

    def test_wrong_spec_rejected(self):
        B = np.diag([1.0, 1.0])
        with pytest.raises(UnfoldingError):
            orbit_geometry(B, [(1.0, (2,))])   # claims one 2-block, B has two 1-blocks

    def test_nondiagonal_complement_coordinates(self, rng):
        # away from diagonal form the complement comes from an SVD basis;
        # its own elements must have identity Theta coordinates
        B, spec = random_jordan(rng, 5)
        assert np.max(np.abs(B - np.diag(np.diag(B)))) > 0.5   # truly non-diagonal
        geo = orbit_geometry(B, spec)
        report = theta_extract(geo, list(geo.W_basis))
        assert np.max(np.abs(report.theta - np.eye(geo.delta))) < 1e-9
        assert report.selected_rows == tuple(range(geo.delta))

    def test_conjugated_jordan_matrix(self, rng):
        # a well-conditioned similarity keeps the rank tests and the
        # codimension intact even though B is dense
        J, spec = random_jordan(rng, 6)
        S = np.eye(6) + 0.3 * rng.standard_normal((6, 6))
        B = S @ J @ np.linalg.inv(S)
        geo = orbit_geometry(B, spec)
        assert geo.delta == jordan_codimension(spec)
        full = geo.basis_matrix()
        assert np.linalg.matrix_rank(full) == 36


class TestGammaOrbitGeometry:
    def test_trivial_group_reduces_to_plain_geometry(self):
        B = np.diag([1j, -1j, 2j, -2j])
        rep1 = close_generators([np.eye(4)])
        geo = gamma_orbit_geometry(B, rep1)
        assert geo.commutant_dim == 16
        assert geo.tangent_dim == 12
        assert geo.Z_dim == 4

    def test_simple_case_dimensions(self, simple_case):
        frame = simple_case.frame
        geo = gamma_orbit_geometry(frame.B, frame.G)
        assert (geo.commutant_dim, geo.tangent_dim, geo.Z_dim) == (16, 12, 4)

    def test_double_case_dimensions(self, double_case):
        frame = double_case.frame
        geo = gamma_orbit_geometry(frame.B, frame.G)
        assert (geo.commutant_dim, geo.tangent_dim, geo.Z_dim) == (16, 12, 4)

    def test_appendix_rank_nullity(self, double_case):
        geo = gamma_orbit_geometry(double_case.frame.B, double_case.frame.G)
        assert geo.commutant_dim == geo.tangent_dim + geo.Z_dim

    def test_noncommuting_matrix_rejected(self, simple_case):
        G = simple_case.frame.G
        B = np.diag([1.0, 2.0, 3.0, 4.0])
        bad = B.copy()
        bad[0, 1] = 1.0
        # B itself commutes with a trivial action, so force a real group
        rep = d3.triangle_rep()
        with pytest.raises(UnfoldingError):
            gamma_orbit_geometry(np.array([[0.0, 1.0, 0], [0, 0, 0], [0, 0, 1.0]]), rep)


class TestProjectDirections:
    def test_equivariant_direction_unchanged(self, double_case):
        G = double_case.frame.G
        comm = commutant_basis(G)
        D = comm[0] + 0.5 * comm[3]
        out = project_unfolding_directions([D], G)[0]
        assert np.max(np.abs(out - D)) < 1e-12

    def test_trivial_projection(self, rng):
        rep1 = close_generators([np.eye(4)])
        D = rng.standard_normal((4, 4))
        out = project_unfolding_directions([D], rep1)[0]
        assert np.max(np.abs(out - D)) < 1e-14

    def test_double_case_kills_mixed_slots(self, double_case):
        # projecting the sixteen raw center directions annihilates the
        # eight off-diagonal block slots and reproduces the assembly output
        frame = double_case.frame
        raw = [frame.Psi0 @ R for R in double_case.assembly.r_matrices]
        projected = project_unfolding_directions(raw, frame.G)
        for m, P in enumerate(projected):
            assert np.max(np.abs(P - double_case.assembly.directions[m])) < 1e-12
            if 4 <= m < 12:
                assert np.max(np.abs(P)) < 1e-12


class TestThetaExtract:
    def test_omega_basis_gives_identity(self):
        B = np.diag([1j, -1j, 2j, -2j])
        geo = orbit_geometry(B, semisimple_jordan_spec(np.diag(B)))
        report = theta_extract(geo, list(geo.W_basis))
        assert np.max(np.abs(report.theta - np.eye(4))) < 1e-12
        assert report.selected_rows == (0, 1, 2, 3)

    def test_earliest_rows_win(self):
        B = np.diag([1j, -1j, 2j, -2j])
        geo = orbit_geometry(B, semisimple_jordan_spec(np.diag(B)))
        dirs = [geo.W_basis[0], geo.W_basis[0], geo.W_basis[1]]
        report = theta_extract(geo, dirs)
        assert report.selected_rows == (0, 2)

    def test_tangent_directions_select_nothing(self):
        B = np.diag([1j, -1j, 2j, -2j])
        geo = orbit_geometry(B, semisimple_jordan_spec(np.diag(B)))
        Y = np.arange(16.0).reshape(4, 4)
        report = theta_extract(geo, [B @ Y - Y @ B])
        assert report.selected_rows == ()
        assert np.max(np.abs(report.theta)) < 1e-9

    def test_broken_complement_detected(self):
        B = np.diag([1j, -1j, 2j, -2j])
        geo = orbit_geometry(B, semisimple_jordan_spec(np.diag(B)))
        # hand-build a geometry whose "complement" sits inside the tangent space
        bad = OrbitGeometry(B=geo.B, jordan_spec=geo.jordan_spec,
                            T_basis=geo.T_basis,
                            W_basis=(geo.T_basis[0], geo.T_basis[1],
                                     geo.T_basis[2], geo.T_basis[3]),
                            delta=4)
        with pytest.raises(UnfoldingError, match="complementary"):
            theta_extract(bad, [geo.W_basis[0]])


def scalar_frame(psi0=2.0, lam=0.5):
    """Hand-built one-dimensional frame with a prescribed Psi(0)."""
    op = DelayOperator(n=1, terms=((0.0, [[lam]]),))
    u = 1.0 / psi0
    phi = (ExpVector([u], lam, side="column"),)
    psi = (ExpVector([psi0], lam, side="row"),)
    return SpectralFrame(op=op, lambdas=(complex(lam),), phi=phi, psi=psi,
                         B=np.array([[lam]], dtype=complex))


class TestBuildRMatrices:
    def test_scalar_minimal_norm(self):
        frame = scalar_frame(psi0=2.0)
        geo = orbit_geometry(frame.B, semisimple_jordan_spec(frame.lambdas))
        (R,) = build_R_matrices(frame, geo)
        assert np.allclose(R, [[0.5]])

    def test_simple_case_normalization_and_conjugates(self, simple_case):
        frame = simple_case.frame
        Rs = simple_case.assembly.r_matrices
        Psi0 = frame.Psi0
        for j, R in enumerate(Rs):
            col = R[:, j]
            assert abs(Psi0[j] @ col - 1.0) < 1e-10     # Pi_j(v_j) = 1
            others = [k for k in range(4) if k != j]
            assert np.max(np.abs(R[:, others])) == 0.0
        assert np.max(np.abs(Rs[1][:, 1] - Rs[0][:, 0].conj())) < 1e-12
        assert np.max(np.abs(Rs[3][:, 3] - Rs[2][:, 2].conj())) < 1e-12

    def test_double_case_block_projections(self, double_case):
        frame = double_case.frame
        Rs = double_case.assembly.r_matrices
        Psi0 = frame.Psi0
        # slot m = 0 targets row 1 of block (rows 0, 1): Pi_1(v) = (1, 0)
        v = Rs[0][:, 0]
        assert np.max(np.abs(Psi0[:2] @ v - np.array([1.0, 0.0]))) < 1e-10
        # slot m = 12 targets row 2 of block (rows 0, 1) in column 1
        v = Rs[12][:, 1]
        assert np.max(np.abs(Psi0[:2] @ v - np.array([0.0, 1.0]))) < 1e-10

    def test_realizes_complement_mod_tangent(self, simple_case):
        frame = simple_case.frame
        geo = orbit_geometry(frame.B, semisimple_jordan_spec(frame.lambdas))
        Rs = build_R_matrices(frame, geo)
        report = theta_extract(geo, [frame.Psi0 @ R for R in Rs])
        assert np.max(np.abs(report.theta - np.eye(4))) < 1e-9


class TestExponentialDelayMatrix:
    def test_equal_delays_singular(self):
        lams = [1j, -1j, 2j, -2j]
        M = exponential_delay_matrix(lams, [0.0, 1.0, 1.0, 3.0])
        assert abs(np.linalg.det(M)) < 1e-12

    def test_equal_frequencies_singular(self):
        M = exponential_delay_matrix([1j, -1j, 1j, -1j], [0.0, 1.0, 2.0, 3.0])
        assert abs(np.linalg.det(M)) < 1e-12

    def test_generic_delays_well_conditioned(self):
        M = exponential_delay_matrix([1j, -1j, 2j, -2j], [0.0, 1.0, 2.0, 3.0])
        assert scaled_det(M) > 1e-6

    def test_unit_target_solve(self):
        # distinct frequencies 1, 2 and integer lags: solve M s = e_1
        M = exponential_delay_matrix([1j, -1j, 2j, -2j], [0.0, 1.0, 2.0, 3.0])
        s = np.linalg.solve(M, np.array([1.0, 0, 0, 0]))
        assert np.linalg.norm(M @ s - np.array([1.0, 0, 0, 0])) < 1e-10


class TestSolveDelayRealization:
    def test_random_target(self, simple_case, rng):
        frame = simple_case.frame
        delays = simple_case.delays
        R = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        As = solve_delay_realization(frame, delays, R)
        recon = sum(A @ frame.Phi_at(-r) for A, r in zip(As, delays))
        assert np.max(np.abs(recon - R)) < 1e-9

    def test_coincident_delays_rejected(self, simple_case):
        frame = simple_case.frame
        tau_s = simple_case.point.tau_s
        with pytest.raises(UnfoldingError, match="rank"):
            solve_delay_realization(frame, [0.0, tau_s, tau_s, 3.0],
                                    np.zeros((3, 4)))

    def test_infeasible_mask_rejected(self, double_case):
        # a raw single-column slot cannot be realized under the structural
        # masks in the double case: eight equations, six unknowns per row
        frame = double_case.frame
        delays = double_case.delays
        R = double_case.assembly.r_matrices[0]
        with pytest.raises(UnfoldingError, match="mask"):
            solve_delay_realization(frame, delays, R, sparsity=d3.structure_masks())

    def test_lag_outside_horizon_rejected(self, simple_case):
        frame = simple_case.frame
        with pytest.raises(UnfoldingError, match="horizon"):
            solve_delay_realization(frame, [0.0, 1.0, 2.0, frame.op.tau + 1.0],
                                    np.zeros((3, 4)))


class TestAssembledPipeline:
    def test_tangent_space_projection_identity(self, double_case, rng):
        # the commutant projection maps the full tangent space onto the
        # equivariant one: mutual containment via projection residuals
        frame = double_case.frame
        geo = orbit_geometry(frame.B, semisimple_jordan_spec(frame.lambdas))
        ggeo = gamma_orbit_geometry(frame.B, frame.G)
        T = np.column_stack([T.reshape(-1) for T in geo.T_basis])
        TG = np.column_stack([T.reshape(-1) for T in ggeo.T_basis])
        # project full tangent basis, check containment in equivariant tangent
        for k in range(T.shape[1]):
            D = equivariant_average(frame.G, frame.G, T[:, k].reshape(8, 8))
            v = D.reshape(-1)
            resid = v - TG @ np.linalg.lstsq(TG, v, rcond=None)[0]
            assert np.linalg.norm(resid) < 1e-10
        # and conversely the equivariant tangent is fixed by the projection
        for k in range(TG.shape[1]):
            D = TG[:, k].reshape(8, 8)
            assert np.max(np.abs(equivariant_average(frame.G, frame.G, D) - D)) < 1e-10

    def test_center_projection_commutes_with_reduction(self, double_case, rng):
        # for equivariant A the center direction of pi(A) equals the
        # commutant projection of the center direction of A
        frame = double_case.frame
        rep = double_case.rep
        tau_star = double_case.delays[2]
        A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        lhs = equivariant_average(frame.G, frame.G,
                                  frame.Psi0 @ A @ frame.Phi_at(-tau_star))
        rhs = frame.Psi0 @ equivariant_average(rep, rep, A) @ frame.Phi_at(-tau_star)
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_reconstruction_and_equivariance(self, simple_case):
        asm = simple_case.assembly
        frame = simple_case.frame
        fam = asm.family
        assert fam.max_equivariance_residual() < 1e-10
        for m, slot in enumerate(asm.theta.selected_rows):
            recon = sum(A @ frame.Phi_at(-r)
                        for A, r in zip(fam.directions[m], fam.delays))
            assert np.max(np.abs(recon - asm.projected_r[slot])) < 1e-9

    def test_direct_sums(self, double_case):
        frame = double_case.frame
        geo = orbit_geometry(frame.B, semisimple_jordan_spec(frame.lambdas))
        full = geo.basis_matrix()
        assert np.linalg.matrix_rank(full) == frame.c ** 2
        ver = double_case.assembly.versality
        assert ver.achieved_rank == ver.commutant_dim

    def test_family_as_operator(self, simple_case):
        fam = simple_case.assembly.family
        op0 = fam.as_operator(np.zeros(fam.n_parameters))
        for (r0, A0), (r1, A1) in zip(sorted(op0.terms), sorted(fam.base.terms)):
            assert r0 == pytest.approx(r1)
            assert np.allclose(A0, A1)
        op1 = fam.as_operator([1e-3, 0, 0, 0])
        assert len(op1.terms) == len({*fam.delays, *[r for r, _ in fam.base.terms]})


class TestRealify:
    def test_real_directions_unchanged(self, simple_case):
        fam = simple_case.assembly.family
        # rows 0 and 2 are not conjugates of one another, so their real
        # parts stay independent
        real_dirs = tuple(tuple(A.real.astype(complex) for A in row)
                          for row in (fam.directions[0], fam.directions[2]))
        f2 = UnfoldingFamily(base=fam.base, delays=fam.delays,
                             directions=real_dirs, names=("p1", "p2"))
        out, _ = realify(f2)
        assert out.names == ("p1", "p2")
        for row_in, row_out in zip(f2.directions, out.directions):
            for A, B in zip(row_in, row_out):
                assert np.max(np.abs(A - B)) == 0.0

    def test_unpaired_direction_rejected(self, simple_case):
        fam = simple_case.assembly.family
        f2 = UnfoldingFamily(base=fam.base, delays=fam.delays,
                             directions=(fam.directions[0],), names=("p1",))
        with pytest.raises(UnfoldingError, match="conjugate"):
            realify(f2)

    def test_simple_case_reparametrization(self, simple_case):
        E = simple_case.real_reparam
        assert E.shape == (4, 4)
        s = np.linalg.svd(E, compute_uv=False)
        assert s[-1] > 1e-8 * s[0]
        # all real-family coefficients are real matrices
        for row in simple_case.real_family.directions:
            for A in row:
                assert np.max(np.abs(A.imag)) < 1e-12


class TestVerifyGammaVersality:
    def test_simple_case_passes(self, simple_case):
        asm = simple_case.assembly
        frame = simple_case.frame
        sel = [asm.directions[m] for m in asm.theta.selected_rows]
        rep = verify_gamma_versality(frame.B, frame.G, sel)
        assert rep.versal and rep.mini_versal
        assert (rep.tangent_dim, rep.n_directions, rep.commutant_dim) == (12, 4, 16)

    def test_double_case_passes(self, double_case):
        asm = double_case.assembly
        frame = double_case.frame
        sel = [asm.directions[m] for m in asm.theta.selected_rows]
        rep = verify_gamma_versality(frame.B, frame.G, sel)
        assert rep.versal and rep.mini_versal
        assert (rep.tangent_dim, rep.n_directions, rep.commutant_dim) == (12, 4, 16)

    def test_tangent_directions_fail_with_deficiency(self, simple_case):
        frame = simple_case.frame
        comm = commutant_basis(frame.G)
        dirs = []
        for K in comm:
            C = frame.B @ K - K @ frame.B
            if np.max(np.abs(C)) > 1e-8:
                dirs.append(C)
            if len(dirs) == 4:
                break
        report = verify_gamma_versality(frame.B, frame.G, dirs)
        assert not report.versal
        assert report.deficiency == 4


class TestSelectDelays:
    def test_extends_native_lags(self, simple_case):
        frame = simple_case.frame
        lags = select_delays(frame)
        assert 0.0 in lags
        assert len(lags) >= 4
        stacked = np.vstack([frame.Phi_at(-r) for r in lags])
        assert np.linalg.matrix_rank(stacked) == frame.c
