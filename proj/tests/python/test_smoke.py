import json
import math

import numpy as np
import pytest

import geonewton as g


def test_sphere_exp_and_distance():
    s = g.Manifold.sphere(3)
    p = s.point(np.array([1.0, 0.0, 0.0]))
    v = s.tangent(p, np.array([0.0, math.pi / 2, 0.0]))
    q = s.exp(v)
    assert np.allclose(q.coords, [0.0, 1.0, 0.0], atol=1e-15)
    assert s.distance(p, q) == pytest.approx(math.pi / 2)
    assert np.allclose(s.log(p, q).coords, v.coords, atol=1e-15)


def test_invalid_point_raises():
    s = g.Manifold.sphere(3)
    with pytest.raises(g.ContractViolation):
        s.point(np.array([1.0, 1.0, 0.0]))


def test_gradient_matches_closed_form():
    s = g.Manifold.sphere(3)
    j = g.Objective.rayleigh(np.diag([3.0, 2.0, 1.0]))
    p = s.point(np.array([1.0, 1.0, 0.0]) / math.sqrt(2))
    grad = g.gradient_fd(j, s, g.RetractionSpec(g.RetractionFamily.Projection), p)
    c = 1 / math.sqrt(2)
    assert np.allclose(grad.vector.coords, [c, -c, 0.0], atol=1e-8)


def test_newton_run_converges():
    s = g.Manifold.sphere(3)
    j = g.Objective.rayleigh(np.diag([3.0, 2.0, 1.0]))
    x = np.array([0.1, 0.1, 1.0])
    cfg = g.NewtonConfig()
    cfg.retraction = g.RetractionSpec(g.RetractionFamily.PerturbedOrder1)
    trace = g.newton_run(j, s, cfg, s.point(x / np.linalg.norm(x)))
    assert trace.status == g.NewtonStatus.Converged
    assert trace.grad_norms[-1] <= 1e-12
    assert trace.iterations <= 6
    errors = [s.distance(p, s.point(np.array([0.0, 0.0, 1.0]))) for p in trace.points]
    assert 1.8 <= g.convergence_rate(errors).fitted_rate <= 2.2


def test_cayley_retraction_on_rotations():
    so3 = g.Manifold.rotations3()
    ident = so3.point(np.eye(3).flatten(order="F"))
    gen = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    v = so3.tangent(ident, (0.2 * gen).flatten(order="F"))
    r = so3.retract(g.RetractionSpec(g.RetractionFamily.Cayley), v)
    dense = np.linalg.solve(np.eye(3) - 0.1 * gen, np.eye(3) + 0.1 * gen)
    assert np.allclose(r.coords.reshape(3, 3, order="F"), dense, atol=1e-15)


def test_fit_loglog_and_rate():
    est = g.fit_loglog([0.1, 0.01, 0.001], [1e-2, 1e-4, 1e-6])
    assert est.slope == pytest.approx(2.0)
    assert est.r_squared == pytest.approx(1.0)
    assert g.convergence_rate([1e-1, 1e-2, 1e-4, 1e-8]).fitted_rate == pytest.approx(2.0)
    with pytest.raises(g.InsufficientData):
        g.convergence_rate([1e-1, 1e-2])


def test_singular_hessian_status():
    s = g.Manifold.sphere(3)
    j = g.Objective.rayleigh(np.diag([3.0, 1.0, 1.0]))
    x = np.array([0.1, 1.0, 0.0])
    trace = g.newton_run(j, s, g.NewtonConfig(), s.point(x / np.linalg.norm(x)))
    assert trace.status == g.NewtonStatus.SingularHessian


def test_run_cli_in_process():
    code, out, err = g.run_cli(["order", "--retraction", "projection", "--format", "json"])
    assert code == 0
    report = json.loads(out)
    assert set(report) == {"config", "rows", "summary", "version"}
    assert 2.8 <= report["summary"]["slope"] <= 3.2
    assert g.run_cli(["order", "--retraction", "cayley"])[0] == 2
