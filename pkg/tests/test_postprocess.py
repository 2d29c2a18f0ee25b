import numpy as np
import pytest

from xvem.assembly import assemble
from xvem.discretization import evaluate_dofs
from xvem.postprocess import (ErrorReport, compute_errors, discrete_seminorm, energy_norm, fit_rates,
                              fit_report_rates, projected_norms)


def test_rates_of_synthetic_data():
    h = 2.0 ** -np.arange(1, 6)
    fit = fit_rates(h, 3 * h**2, dofs=h**-2)
    np.testing.assert_allclose(fit.h_slopes, 2.0)
    np.testing.assert_allclose(fit.dof_slopes, -1.0)
    assert fit.h_slope == pytest.approx(2.0) and fit.dof_slope == pytest.approx(-1.0)


def test_rate_uses_last_three_points():
    h = np.array([1.0, 0.5, 0.25, 0.125])
    err = np.array([1.0, 1.0, 0.25, 0.0625])  # pre-asymptotic first step
    assert fit_rates(h, err).h_slope == pytest.approx(2.0)
    assert fit_rates(h, err, last=4).h_slope < 2.0


def test_non_monotone_mesh_sizes_rejected():
    with pytest.raises(ValueError):
        fit_rates([0.5, 0.25, 0.3], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_rates([0.5], [1.0])


def test_report_fit():
    reps = [ErrorReport(h, 1, 1, 1, int(h**-2), h, h**2) for h in (0.5, 0.25, 0.125)]
    assert fit_report_rates(reps, "H1Error").h_slope == pytest.approx(2.0)
    assert fit_report_rates(reps, "L2Error").dof_slope == pytest.approx(-0.5)


@pytest.mark.parametrize("mode", ["none", "local", "global"])
def test_seminorm_matches_stiffness(fracture4, frac_space, disc_factory, rng, mode):
    disc = disc_factory(fracture4, 2, frac_space, mode, 0.15)
    v = rng.standard_normal(disc.n_dofs)
    A = assemble(disc).A
    direct = np.sqrt(v @ (A @ v))
    assert discrete_seminorm(disc, v) == pytest.approx(direct, rel=1e-10)
    assert energy_norm(disc, v) == pytest.approx(direct, rel=1e-12)


def test_seminorm_of_zero_and_constants(fracture4, disc_factory):
    disc = disc_factory(fracture4, 3)
    assert discrete_seminorm(disc, np.zeros(disc.n_dofs)) == 0.0
    one = evaluate_dofs(disc, lambda p, r: np.full(len(p), 2.0))
    assert discrete_seminorm(disc, one) < 1e-12


def test_projected_norms_of_linear_function(fracture4, disc_factory):
    disc = disc_factory(fracture4, 1)
    v = evaluate_dofs(disc, lambda p, r: p[:, 0] + 2 * p[:, 1])
    n0, n1 = projected_norms(disc, v)
    # |grad|^2 = 5 on a domain of area 4
    assert n1.sum() == pytest.approx(20.0)
    # int (x + 2y)^2 over (-1, 1)^2 = 4/3 + 16/3
    assert n0.sum() == pytest.approx(20.0 / 3.0)


def test_errors_of_the_interpolant_vanish(fracture4, frac_space, disc_factory):
    disc = disc_factory(fracture4, 2, frac_space, "local", 0.15)
    u = lambda p, r: np.sin(p[:, 0]) + frac_space.values(p, r)[0]
    rep = compute_errors(disc, evaluate_dofs(disc, u), u)
    assert rep.L2Error == 0.0 and rep.H1Error == 0.0
    assert (rep.NbCells, rep.NbVertices) == (16, fracture4.n_vertices)
    assert set(rep.as_dict()) == {"MeshSize", "NbCells", "NbEdges", "NbVertices", "DOFs", "L2Error", "H1Error",
                                  "CondEst"}
