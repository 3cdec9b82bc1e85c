"""Re-verification of unfold artifacts.

Everything a produced artifact claims is re-derived from its own data:
representation validity, model equivariance, frame residuals, induced
action, coefficient equivariance, reconstruction of the projected
unfolding slots, Theta consistency, and the equivariant span (versality)
of the stored directions.  A perturbed coefficient or a dropped direction
therefore fails a specific named check.
"""

from dataclasses import dataclass

import numpy as np

from .delays import check_equivariance
from .errors import EqunfoldError, SchemaError
from .groups import check_representation, equivariant_average
from .jsonio import (SCHEMA, decode_cmatrix, frame_from_doc, model_from_doc,
                     rep_from_doc)
from .unfolding import (UnfoldingFamily, build_R_matrices, orbit_geometry,
                        semisimple_jordan_spec, theta_extract,
                        verify_gamma_versality)

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def lines(self):
        return [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks]


def _require(doc, key, context="artifact"):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"{context} is missing required key {key!r}")
    return doc[key]


def parse_artifact(doc):
    """Decode the artifact document; schema violations raise SchemaError."""
    if not isinstance(doc, dict):
        raise SchemaError("artifact must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise SchemaError(f"unsupported schema {doc.get('schema')!r}; expected {SCHEMA!r}")
    op = model_from_doc(_require(doc, "model"))
    rep = rep_from_doc(_require(doc, "group"))
    frame = frame_from_doc(_require(doc, "frame"), op, group=rep.group)
    if frame.G is None:
        raise SchemaError("artifact frame carries no induced representation")

    unf = _require(doc, "unfolding")
    delays = [float(r) for r in _require(unf, "delays", "unfolding")]
    names = list(_require(unf, "parameters", "unfolding"))
    coeff_doc = _require(unf, "coefficients", "unfolding")
    if len(coeff_doc) != len(names):
        raise SchemaError("one coefficient list per parameter required")
    directions = []
    for row in coeff_doc:
        if len(row) != len(delays):
            raise SchemaError("one coefficient matrix per delay required")
        directions.append(tuple(decode_cmatrix(A) for A in row))
    selected = [int(i) for i in _require(unf, "selected_rows", "unfolding")]
    if len(selected) != len(names):
        raise SchemaError("selected_rows must list one slot per parameter")

    theta_doc = _require(doc, "theta")
    theta = decode_cmatrix(_require(theta_doc, "matrix", "theta"))

    family = UnfoldingFamily(base=op, delays=tuple(delays), directions=tuple(directions),
                             names=tuple(names), rep=None)
    return op, rep, frame, family, selected, theta


def verify_artifact(doc, tol=DEFAULT_TOL):
    """Run the full invariant suite against an artifact document."""
    op, rep, frame, family, selected, theta_stored = parse_artifact(doc)
    checks = []

    def record(name, residual, bound=tol, extra=""):
        passed = residual <= bound
        detail = f"residual {residual:.3e} (tol {bound:.1e})" + (f"; {extra}" if extra else "")
        checks.append(CheckResult(name=name, passed=passed, detail=detail))
        return passed

    rep_report = check_representation(rep, tol=tol)
    checks.append(CheckResult(
        "group.representation", rep_report.ok,
        f"max residual {rep_report.max_residual:.3e}, "
        f"{len(rep_report.violated_pairs)} violated pairs"))

    record("model.equivariance", check_equivariance(op, rep))

    c = frame.c
    null_res = 0.0
    for v in frame.phi:
        D = op.char_matrix(v.exponent)
        null_res = max(null_res, float(np.linalg.norm(D @ v.direction) / np.linalg.norm(v.direction)))
    for w in frame.psi:
        D = op.char_matrix(w.exponent)
        null_res = max(null_res, float(np.linalg.norm(w.direction @ D) / np.linalg.norm(w.direction)))
    record("frame.null_vectors", null_res)
    record("frame.gram_identity", float(np.max(np.abs(frame.gram() - np.eye(c)))))
    record("frame.reduced_matrix",
           float(np.max(np.abs(frame.B - np.diag(np.array(frame.lambdas))))))

    G = frame.G
    g_report = check_representation(G, tol=tol)
    checks.append(CheckResult(
        "frame.induced_rep", g_report.ok,
        f"max residual {g_report.max_residual:.3e}"))
    bg = max(float(np.max(np.abs(frame.B @ G.matrices[g] - G.matrices[g] @ frame.B)))
             for g in G.group.elements())
    record("frame.B_commutes_with_G", bg)
    thetas = np.linspace(-op.tau, 0.0, 5) if op.tau > 0 else [0.0]
    pw = 0.0
    for g in G.group.elements():
        R = rep.matrices[g]
        for th in thetas:
            P = frame.Phi_at(th)
            pw = max(pw, float(np.max(np.abs(R @ P - P @ G.matrices[g]))))
    record("frame.phi_intertwines", pw)

    equiv = 0.0
    for row in family.directions:
        for A in row:
            for g in rep.group.elements():
                R = rep.matrices[g]
                equiv = max(equiv, float(np.max(np.abs(R @ A - A @ R))))
    record("family.coefficient_equivariance", equiv)

    # center directions from the stored coefficients, and their projections
    Phis = [frame.Phi_at(-r) for r in family.delays]
    bhats = []
    proj_res = 0.0
    for m in range(family.n_parameters):
        Bh = sum(frame.Psi0 @ A @ P for A, P in zip(family.directions[m], Phis))
        bhats.append(Bh)
        proj_res = max(proj_res, float(np.max(np.abs(
            equivariant_average(G, G, Bh) - Bh))))
    record("directions.projection_fixed_point", proj_res)

    try:
        geometry = orbit_geometry(frame.B, semisimple_jordan_spec(frame.lambdas))
        Rs = build_R_matrices(frame, geometry)
        Rbars = [equivariant_average(rep, G, R) for R in Rs]
        theta_re = theta_extract(geometry, [frame.Psi0 @ Rb for Rb in Rbars])
        dtheta = float(np.max(np.abs(theta_re.theta - theta_stored))) \
            if theta_re.theta.shape == theta_stored.shape else np.inf
        record("theta.matrix_consistency", dtheta)
        checks.append(CheckResult(
            "theta.selected_rows", tuple(theta_re.selected_rows) == tuple(selected),
            f"stored {tuple(selected)}, recomputed {tuple(theta_re.selected_rows)}"))
        recon = 0.0
        for m, slot in enumerate(selected):
            target = Rbars[slot]
            got = sum(A @ P for A, P in zip(family.directions[m], Phis))
            recon = max(recon, float(np.max(np.abs(got - target))))
        record("unfolding.reconstruction", recon)
    except EqunfoldError as exc:
        checks.append(CheckResult("theta.recompute", False, str(exc)))

    ver = verify_gamma_versality(frame.B, G, bhats)
    checks.append(CheckResult(
        "versality.span", ver.versal,
        f"rank {ver.achieved_rank} of {ver.commutant_dim} "
        f"(tangent {ver.tangent_dim} + {ver.n_directions} directions)"))
    checks.append(CheckResult(
        "versality.mini", ver.mini_versal,
        f"{ver.n_directions} parameters vs codimension {ver.codimension}"))

    return VerificationReport(checks=tuple(checks))
