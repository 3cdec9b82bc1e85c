"""Three identical delay-coupled cells with triangle symmetry.

The model is

    u_j'(t) = -u_j(t) + alpha u_j(t - tau_s) + beta [u_{j-1}(t - tau_n)
              + u_{j+1}(t - tau_n)],        j mod 3,

whose linear operator commutes with the permutation action of the
dihedral group of the triangle.  Its characteristic determinant factors
as ``Delta_1 * Delta_2**2``; curves of purely imaginary roots of either
factor are available in closed form, their crossings are double-Hopf
points, and at such points the full equivariant mini-versal unfolding
pipeline runs end to end, in both the simple-eigenvalue (first factor)
and double-eigenvalue (second factor) cases.
"""

from dataclasses import dataclass

import numpy as np

from .delays import DelayOperator, check_equivariance
from .errors import EqunfoldError, UnfoldingError
from .frames import eigenbasis, induce_representation
from .groups import close_generators
from .unfolding import (assemble_gamma_unfolding, exponential_delay_matrix,
                        orbit_geometry, realify, scaled_det,
                        semisimple_jordan_spec, slot_reparametrization)

OMEGA = np.exp(2j * np.pi / 3)
U_SYM = np.array([1.0, 1.0, 1.0])                       # symmetric direction
V_ROT = np.array([1.0, OMEGA, OMEGA.conjugate()])       # rotation eigenvector

KAPPA_MAT = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=float)
GAMMA_MAT = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)


def triangle_rep():
    """Permutation representation of the 6-element triangle group on C^3.

    Generated by the swap ``kappa`` and the 3-cycle ``gamma``; their element
    indices are recorded on the group (``generator_indices``).
    """
    return close_generators([KAPPA_MAT, GAMMA_MAT])


@dataclass(frozen=True)
class D3ModelParams:
    """Gains and lags of the three-cell model."""

    alpha: float
    beta: float
    tau_s: float
    tau_n: float


def d3_operator(p):
    """The model's linear operator: -I at lag 0, alpha I at tau_s,
    beta (J - I) at tau_n."""
    I = np.eye(3)
    J = np.ones((3, 3))
    return DelayOperator(n=3, terms=(
        (0.0, -I),
        (p.tau_s, p.alpha * I),
        (p.tau_n, p.beta * (J - I)),
    ))


def delta1(lam, p):
    """First characteristic factor (symmetric mode)."""
    return lam + 1.0 - p.alpha * np.exp(-lam * p.tau_s) - 2.0 * p.beta * np.exp(-lam * p.tau_n)


def delta2(lam, p):
    """Second characteristic factor (rotation modes; squared in det)."""
    return lam + 1.0 - p.alpha * np.exp(-lam * p.tau_s) + p.beta * np.exp(-lam * p.tau_n)


def _factor_coupling(factor):
    if factor in (1, "delta1"):
        return 2.0
    if factor in (2, "delta2"):
        return -1.0
    raise EqunfoldError(f"unknown factor {factor!r}; use 'delta1' or 'delta2'")


def factor_value(factor, lam, alpha, beta, tau_s, tau_n):
    c = _factor_coupling(factor)
    return lam + 1.0 - alpha * np.exp(-lam * tau_s) - c * beta * np.exp(-lam * tau_n)


def hopf_curve(factor, omega, beta, tau_n, sign=1, branch=0):
    """Point (alpha, tau_s) on a curve of imaginary roots of a factor.

    Solving ``factor(i omega) = 0`` for alpha and tau_s at fixed beta,
    tau_n gives  alpha cos(omega tau_s) = C  and  alpha sin(omega tau_s) = S
    with C = 1 - c beta cos(omega tau_n), S = -omega - c beta sin(omega tau_n)
    (c = 2 for the first factor, -1 for the second).  ``sign`` picks the
    branch alpha = +-sqrt(C^2 + S^2); ``branch`` adds full turns to the
    angle so tau_s covers every positive solution.

    Accepts scalar or array ``omega``.
    """
    c = _factor_coupling(factor)
    omega = np.asarray(omega, dtype=float)
    C = 1.0 - c * beta * np.cos(omega * tau_n)
    S = -omega - c * beta * np.sin(omega * tau_n)
    alpha = np.hypot(C, S)
    if sign < 0:
        alpha = -alpha
        theta = np.arctan2(-S, -C)
    else:
        theta = np.arctan2(S, C)
    tau_s = (theta + 2.0 * np.pi * branch) / omega
    return alpha, tau_s


def sweep_curves(factor, beta, tau_n, omegas, signs=(1, -1), branches=(0, 1, 2, 3)):
    """Sample all requested curve branches.

    Returns a dict keyed by (sign, branch) whose values are (m, 3) arrays of
    rows (omega, alpha, tau_s).
    """
    omegas = np.asarray(omegas, dtype=float)
    out = {}
    for sg in signs:
        for br in branches:
            a, t = hopf_curve(factor, omegas, beta, tau_n, sign=sg, branch=br)
            out[(sg, br)] = np.column_stack([omegas, a, t])
    return out


def _segment_intersections(P, Q):
    """Crossings of two polylines in the plane.

    P, Q are (m, 2) arrays; yields (i, j, t, u, point) for each pair of
    segments P[i:i+2], Q[j:j+2] that intersect, with local parameters
    t, u in [0, 1].
    """
    A, Bp = P[:-1], P[1:]
    C, D = Q[:-1], Q[1:]
    r = Bp - A
    s = D - C
    hits = []
    for i in range(len(A)):
        denom = r[i, 0] * s[:, 1] - r[i, 1] * s[:, 0]
        dx = C[:, 0] - A[i, 0]
        dy = C[:, 1] - A[i, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (dx * s[:, 1] - dy * s[:, 0]) / denom
            u = (dx * r[i, 1] - dy * r[i, 0]) / denom
        ok = np.isfinite(t) & np.isfinite(u) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
        for j in np.nonzero(ok)[0]:
            hits.append((i, int(j), float(t[j]), float(u[j]), A[i] + t[j] * r[i]))
    return hits


@dataclass(frozen=True)
class DoubleHopfPoint:
    factor: str
    beta: float
    tau_n: float
    alpha: float
    tau_s: float
    omega1: float
    omega2: float
    residual: float

    def params(self):
        return D3ModelParams(alpha=self.alpha, beta=self.beta,
                             tau_s=self.tau_s, tau_n=self.tau_n)


def find_double_hopf(factor, beta, tau_n, seed, tol=1e-10, max_iter=100):
    """Newton refinement of a double-Hopf point of one factor.

    ``seed`` is (alpha, tau_s, omega1, omega2); the four real equations are
    the real and imaginary parts of the factor at i omega_1 and i omega_2,
    solved for (alpha, tau_s, omega_1, omega_2) with an analytic Jacobian.

    Raises
    ------
    EqunfoldError
        If the seeded frequencies coincide, the iteration stalls, or the
        refined frequencies collide (resonant point).
    """
    c = _factor_coupling(factor)
    name = "delta1" if c == 2.0 else "delta2"
    x = np.array(seed, dtype=float)
    if abs(x[2] - x[3]) < 1e-6:
        raise EqunfoldError("seed frequencies coincide; not a non-resonant double Hopf")
    res = np.inf
    for _ in range(max_iter):
        a, ts, o1, o2 = x
        F = np.empty(4)
        Jm = np.zeros((4, 4))
        for k, w in enumerate((o1, o2)):
            lam = 1j * w
            es = np.exp(-lam * ts)
            f = lam + 1.0 - a * es - c * beta * np.exp(-lam * tau_n)
            F[2 * k] = f.real
            F[2 * k + 1] = f.imag
            dfda = -es
            dfdts = a * lam * es
            dfdw = 1j * (1.0 + a * ts * es + c * beta * tau_n * np.exp(-lam * tau_n))
            Jm[2 * k, 0], Jm[2 * k, 1] = dfda.real, dfdts.real
            Jm[2 * k + 1, 0], Jm[2 * k + 1, 1] = dfda.imag, dfdts.imag
            Jm[2 * k, 2 + k] = dfdw.real
            Jm[2 * k + 1, 2 + k] = dfdw.imag
        res = float(np.max(np.abs(F)))
        if res < tol:
            break
        try:
            step = np.linalg.solve(Jm, F)
        except np.linalg.LinAlgError:
            raise EqunfoldError(f"singular Jacobian at {x} (residual {res:.3e})")
        x = x - step
    if res >= tol:
        raise EqunfoldError(f"double-Hopf refinement stalled at residual {res:.3e}; trace ends at {x}")
    if abs(x[2] - x[3]) < 1e-6:
        raise EqunfoldError("refined frequencies collide; not a non-resonant double Hopf")
    o1, o2 = sorted((abs(x[2]), abs(x[3])))
    return DoubleHopfPoint(factor=name, beta=beta, tau_n=tau_n, alpha=float(x[0]),
                           tau_s=float(x[1]), omega1=float(o1), omega2=float(o2),
                           residual=res)


def locate_double_hopf(factor, beta, tau_n, omegas=None, signs=(1, -1),
                       branches=(0, 1, 2, 3), alpha_window=(-4.0, 4.0),
                       tau_s_window=(0.0, 10.0), require_distinct_factor=True):
    """Sweep curve branches, intersect them, refine every crossing.

    Returns the surviving :class:`DoubleHopfPoint` list sorted by
    (tau_s, alpha, omega1), deduplicated.  ``require_distinct_factor``
    drops points where the *other* factor also vanishes (higher
    codimension than double Hopf).
    """
    if omegas is None:
        omegas = np.arange(0.05, 5.0, 0.005)
    curves = sweep_curves(factor, beta, tau_n, omegas, signs=signs, branches=branches)
    keys = sorted(curves)
    step = float(omegas[1] - omegas[0])
    points = []
    for ii in range(len(keys)):
        for jj in range(ii, len(keys)):
            P = curves[keys[ii]][:, 1:3]
            Q = curves[keys[jj]][:, 1:3]
            for i, j, t, u, pt in _segment_intersections(P, Q):
                wA = float(omegas[i]) + t * step
                wB = float(omegas[j]) + u * step
                if abs(wA - wB) < 1e-3:
                    continue            # the same root, or a resonance
                a0, t0 = pt
                if not (alpha_window[0] <= a0 <= alpha_window[1]
                        and tau_s_window[0] < t0 <= tau_s_window[1]):
                    continue
                try:
                    dh = find_double_hopf(factor, beta, tau_n, (a0, t0, wA, wB))
                except EqunfoldError:
                    continue
                if not (alpha_window[0] <= dh.alpha <= alpha_window[1]
                        and tau_s_window[0] < dh.tau_s <= tau_s_window[1]):
                    continue
                if dh.omega1 <= 0 or abs(dh.tau_s - tau_n) < 1e-6:
                    continue
                if require_distinct_factor:
                    other = "delta2" if dh.factor == "delta1" else "delta1"
                    p = dh.params()
                    if min(abs(factor_value(other, 1j * dh.omega1, p.alpha, beta, p.tau_s, tau_n)),
                           abs(factor_value(other, 1j * dh.omega2, p.alpha, beta, p.tau_s, tau_n))) < 1e-6:
                        continue
                points.append(dh)

    uniq = []
    for dh in sorted(points, key=lambda d: (d.tau_s, d.alpha, d.omega1)):
        if all(abs(dh.alpha - q.alpha) > 1e-5 or abs(dh.tau_s - q.tau_s) > 1e-5
               for q in uniq):
            uniq.append(dh)
    return uniq


def default_delays(point, max_retries=10, det_floor=1e-10):
    """Lags {0, tau_s, tau_n, tau_3} with tau_3 chosen generically.

    tau_3 starts from the largest multiple of tau/7 in (0, tau] distinct
    from the other lags (tau = history horizon) and is halved, at most
    ``max_retries`` times, until the row-scaled exponential-delay matrix
    over the four critical eigenvalues is safely nonsingular.
    """
    tau = max(point.tau_s, point.tau_n)
    others = [0.0, point.tau_s, point.tau_n]
    tau3 = None
    for k in range(7, 0, -1):
        cand = tau * k / 7.0
        if all(abs(cand - r) > 1e-9 for r in others):
            tau3 = cand
            break
    if tau3 is None:
        raise UnfoldingError("no admissible fourth lag on the tau/7 grid")
    lams = np.array([1j * point.omega1, -1j * point.omega1,
                     1j * point.omega2, -1j * point.omega2])
    for _ in range(max_retries):
        M = exponential_delay_matrix(lams, others + [tau3])
        if scaled_det(M) > det_floor and all(abs(tau3 - r) > 1e-9 for r in others):
            return others + [tau3]
        tau3 = tau3 / 2.0
    raise UnfoldingError("could not find a generic fourth lag (determinant stays small)")


def structure_masks():
    """Per-lag sparsity masks preserving the model's coupling structure:
    diagonal coefficients at lags {0, tau_s}, off-diagonal at {tau_n, tau_3}."""
    diag = np.eye(3, dtype=bool)
    return [diag, diag, ~diag, ~diag]


@dataclass(frozen=True)
class D3CaseResult:
    """Artifacts of one end-to-end run at a double-Hopf point."""

    case: str                     # "simple" or "double"
    point: DoubleHopfPoint
    op: DelayOperator
    rep: object
    frame: object
    delays: tuple
    assembly: object              # GammaUnfolding
    real_family: object
    real_reparam: np.ndarray
    complex_reparam: np.ndarray


_CASE_DEFAULTS = {
    "simple": dict(factor="delta1", beta=-0.5, tau_n=4.0),
    "double": dict(factor="delta2", beta=0.5, tau_n=3.0),
}


def default_point(case):
    """First double-Hopf point of the case's default parameter slice."""
    cfg = _CASE_DEFAULTS[case]
    pts = locate_double_hopf(cfg["factor"], cfg["beta"], cfg["tau_n"])
    if not pts:
        raise EqunfoldError(f"no double-Hopf point found for case {case!r}")
    return pts[0]


def run_case(case, point=None, delays=None):
    """Run the whole pipeline at a double-Hopf point of either factor.

    ``case="simple"`` expects a point of the first factor (four simple
    imaginary eigenvalues, c = 4); ``case="double"`` a point of the second
    (four double eigenvalues, c = 8).  The eigenbasis is seeded with the
    symmetric/rotation directions so the basis and its ordering are
    deterministic.  Structural facts (trivial or block-diagonal induced
    action, Theta profile, coefficient patterns, conjugate pairing,
    reparametrization rank) are asserted before returning.
    """
    if case not in _CASE_DEFAULTS:
        raise EqunfoldError(f"unknown case {case!r}")
    if point is None:
        point = default_point(case)
    expected_factor = _CASE_DEFAULTS[case]["factor"]
    if point.factor != expected_factor:
        raise EqunfoldError(f"case {case!r} needs a {expected_factor} point, got {point.factor}")

    params = point.params()
    if abs(params.tau_s - params.tau_n) < 1e-9:
        raise EqunfoldError("tau_s and tau_n coincide; unfolding lags would collide")
    op = d3_operator(params)
    rep = triangle_rep()
    if check_equivariance(op, rep) > 1e-12:
        raise EqunfoldError("model lost equivariance (corrupted parameters?)")

    lambdas = [1j * point.omega1, -1j * point.omega1,
               1j * point.omega2, -1j * point.omega2]
    if case == "simple":
        seeds = {i: [U_SYM] for i in range(4)}
        expected_c = 4
    else:
        seeds = {0: [V_ROT, V_ROT.conj()], 1: [V_ROT.conj(), V_ROT],
                 2: [V_ROT, V_ROT.conj()], 3: [V_ROT.conj(), V_ROT]}
        expected_c = 8

    frame = eigenbasis(op, lambdas, seeds=seeds)
    if frame.c != expected_c:
        raise EqunfoldError(f"center space dimension {frame.c} != {expected_c}; "
                            "the located point is not of the expected factor type")
    frame = induce_representation(frame, rep)

    if delays is None:
        delays = default_delays(point)
    geometry = orbit_geometry(frame.B, semisimple_jordan_spec(frame.lambdas))
    assembly = assemble_gamma_unfolding(frame, rep, delays, geometry=geometry,
                                        sparsity=structure_masks())
    _assert_case_structure(case, frame, assembly)

    complex_reparam = slot_reparametrization(assembly.family)
    if np.linalg.matrix_rank(complex_reparam) < assembly.family.n_parameters:
        raise EqunfoldError("complex epsilon reparametrization is rank deficient")
    real_family, real_reparam = realify(assembly.family)

    return D3CaseResult(case=case, point=point, op=op, rep=rep, frame=frame,
                        delays=tuple(float(r) for r in delays), assembly=assembly,
                        real_family=real_family, real_reparam=real_reparam,
                        complex_reparam=complex_reparam)


def _assert_case_structure(case, frame, assembly):
    c = frame.c
    G = frame.G
    theta = assembly.theta

    if case == "simple":
        for g in G.group.elements():
            if np.max(np.abs(G.matrices[g] - np.eye(c))) > 1e-8:
                raise EqunfoldError("induced action is not trivial in the simple case")
        offdiag = np.max(np.abs(theta.theta - np.diag(np.diag(theta.theta))))
        if offdiag > 1e-8 or np.min(np.abs(np.diag(theta.theta))) < 1e-8:
            raise EqunfoldError("Theta is not diagonal with nonzero diagonal")
        if theta.selected_rows != (0, 1, 2, 3):
            raise EqunfoldError(f"expected all four rows selected, got {theta.selected_rows}")
    else:
        zero_rows = np.max(np.abs(theta.theta[4:12])) if theta.theta.shape[0] >= 12 else np.inf
        dup = np.max(np.abs(theta.theta[12:16] - theta.theta[0:4]))
        if zero_rows > 1e-8 or dup > 1e-8:
            raise EqunfoldError("Theta does not show the zero/duplicate row profile")
        if theta.rank != 4 or theta.selected_rows != (0, 1, 2, 3):
            raise EqunfoldError(f"expected rank 4 with rows 1-4 selected, got "
                                f"rank {theta.rank}, rows {theta.selected_rows}")
        for m in range(4, 12):
            if np.max(np.abs(assembly.directions[m])) > 1e-9:
                raise EqunfoldError(f"projected direction {m + 1} should vanish")

    if not assembly.versality.mini_versal:
        raise EqunfoldError("assembled family is not mini-versal")

    I = np.eye(3)
    offp = np.ones((3, 3)) - I
    patterns = [I, I, offp, offp]
    for m, row in enumerate(assembly.family.directions):
        for A, pat in zip(row, patterns):
            coef = np.vdot(pat, A) / np.vdot(pat, pat)
            if np.max(np.abs(A - coef * pat)) > 1e-8 * max(1.0, float(np.max(np.abs(A)))):
                raise EqunfoldError(
                    f"coefficient of parameter {m + 1} does not follow the structure pattern"
                )


def eta_pair(v):
    """The two rotation-character functionals of a 3-vector: how a direction
    splits over the rotation eigenvectors (both vanish on the symmetric mode)."""
    v = np.asarray(v, dtype=complex).reshape(3)
    w = OMEGA
    return (v[0] + w.conjugate() * v[1] + w * v[2],
            v[0] + w * v[1] + w.conjugate() * v[2])
