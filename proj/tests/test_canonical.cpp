#include <doctest.h>

#include "models.hpp"
#include "nhqm/canonical.hpp"
#include "nhqm/errors.hpp"

#include <cmath>
#include <memory>
#include <numbers>

using namespace nhqm;
using namespace nhqm::test;

namespace {

std::shared_ptr<const BiorthoSystem> basis_of(const Matrix& m, double hbar = 1.0) {
    return std::make_shared<const BiorthoSystem>(diagonalize_biortho(Hamiltonian(m, hbar)));
}

FieldPair conjugate_pair(const Vector& psi) { return {psi, psi.conjugate()}; }

}  // namespace

TEST_CASE("state_from_right: single Hermitian eigenmode with the default gauge") {
    const auto basis = basis_of(pauli_x());
    const auto s = state_from_right(basis, basis->right(0));
    CHECK(std::abs(s.c()(0) - 1.0) < 1e-14);
    CHECK(std::abs(s.c()(1)) == 0.0);
    CHECK(std::abs(s.c_bar()(0) - 1.0) < 1e-14);
    CHECK(std::abs(s.c_bar()(1)) == 0.0);
    CHECK(s.gauge()(1) == 0.0);
}

TEST_CASE("state_from_right: PT-unbroken equal mixture") {
    const auto basis = basis_of(pt2x2(1.0, 0.5));
    // psi0 from the analytic eigenvectors put in the library's gauge.
    const cplx e = pt2x2_energy(1.0, 0.5);
    Vector psi0 = Vector::Zero(2);
    for (cplx ej : {-e, e}) {
        Vector a = pt2x2_right(1.0, 0.5, 0.0, ej);
        a /= a.norm();
        Eigen::Index peak;
        a.cwiseAbs().maxCoeff(&peak);
        a *= std::conj(a(peak)) / std::abs(a(peak));
        psi0 += a;
    }
    const RealVector ones = RealVector::Ones(2);
    const auto raw = state_from_right(basis, psi0, ones, {.normalize = false});
    CHECK(std::abs(raw.c()(0) - 1.0) < 1e-10);
    CHECK(std::abs(raw.c()(1) - 1.0) < 1e-10);
    CHECK(std::abs(raw.c_bar()(0) - 1.0) < 1e-10);
    CHECK(std::abs(raw.c_bar()(1) - 1.0) < 1e-10);

    const auto norm = state_from_right(basis, psi0, ones);
    CHECK(std::abs(total_probability(norm) - 1.0) < 1e-10);
    for (Eigen::Index j = 0; j < 2; ++j) {
        CHECK(std::abs(norm.c_bar()(j) * norm.c()(j) - 0.5) < 1e-10);
    }
}

TEST_CASE("state_from_right: gauge conflicts") {
    const auto basis = basis_of(pt2x2(1.0, 0.5));
    const RealVector ones = RealVector::Ones(2);
    CHECK_THROWS_AS(state_from_right(basis, basis->right(0), ones), GaugeConflict);
    RealVector zero_on_present(2);
    zero_on_present << 0.0, 1.0;
    CHECK_THROWS_AS(state_from_right(basis, basis->right(0), zero_on_present), GaugeConflict);
    CHECK_THROWS_AS(state_from_right(basis, Vector::Ones(3), ones), DimensionMismatch);
}

TEST_CASE("evolve_spectral: closed-form phases") {
    const auto basis = basis_of(pt2x2(1.0, 0.5));
    const auto s0 = state_from_right(basis, basis->right(0) + basis->right(1));

    const auto same = evolve_spectral(s0, 0.0);
    CHECK(same.c() == s0.c());
    CHECK(same.c_bar() == s0.c_bar());

    // E = 1, t = pi: both coefficients flip sign
    Matrix one = Matrix::Identity(1, 1);
    const auto single = basis_of(one);
    const auto s1 = evolve_spectral(state_from_right(single, Vector::Ones(1)), std::numbers::pi);
    CHECK(std::abs(s1.c()(0) + 1.0) < 1e-15);
    CHECK(std::abs(s1.c_bar()(0) + 1.0) < 1e-15);
    CHECK(std::abs(s1.c_bar()(0) * s1.c()(0) - 1.0) < 1e-15);
    CHECK(s1.time() == doctest::Approx(std::numbers::pi));

    // PT-broken mode E = +i sqrt(3): |c| grows by e^{sqrt3}, |c_bar| shrinks
    const auto broken = basis_of(pt2x2(1.0, 2.0));
    REQUIRE(broken->eigenvalue(1).imag() > 0.0);
    const auto sb = state_from_right(broken, broken->right(1));
    const auto sb1 = evolve_spectral(sb, 1.0);
    const double growth = std::exp(std::sqrt(3.0));
    CHECK(std::abs(sb1.c()(1)) / std::abs(sb.c()(1)) == doctest::Approx(growth).epsilon(1e-12));
    CHECK(std::abs(growth - 5.6522) < 1e-4);
    CHECK(std::abs(sb1.c_bar()(1)) / std::abs(sb.c_bar()(1)) ==
          doctest::Approx(1.0 / growth).epsilon(1e-12));
    CHECK(std::abs(1.0 / growth - 0.17692) < 1e-5);
    CHECK(std::abs(sb1.c_bar()(1) * sb1.c()(1) - 1.0) < 1e-12);
}

TEST_CASE("evolve_spectral honors hbar") {
    const auto basis = basis_of(2.0 * Matrix::Identity(1, 1), 2.0);
    const auto s = evolve_spectral(state_from_right(basis, Vector::Ones(1)), std::numbers::pi);
    // E t / hbar = pi
    CHECK(std::abs(s.c()(0) + 1.0) < 1e-15);
}

TEST_CASE("total_probability") {
    const auto basis = basis_of(pt2x2(1.0, 2.0));
    const Vector psi0 = basis->right(0) + 0.3 * basis->right(1);
    const auto s = state_from_right(basis, psi0);
    CHECK(std::abs(total_probability(s) - 1.0) < 1e-10);

    RealVector g(2);
    g << 2.0, 3.0;
    const auto raw = state_from_right(basis, psi0, g, {.normalize = false});
    CHECK(std::abs(total_probability(raw) - 5.0) < 1e-12);

    const auto later = evolve_spectral(raw, 7.0);
    CHECK(std::abs(total_probability(later) - total_probability(raw)) < 1e-12);
    CHECK(std::abs(total_probability(to_fields(later)) - 5.0) < 1e-6);
}

TEST_CASE("local_probability") {
    const auto herm = basis_of(pauli_x());
    const auto sh = state_from_right(herm, herm->right(1));
    const Vector rho = local_probability(to_fields(sh));
    for (Eigen::Index k = 0; k < 2; ++k) {
        CHECK(std::abs(rho(k).imag()) < 1e-15);
        CHECK(rho(k).real() >= 0.0);
        CHECK(std::abs(rho(k) - std::norm(herm->right(1)(k))) < 1e-15);
    }
    CHECK(std::abs(rho.sum() - 1.0) < 1e-14);

    // PT-unbroken mode 1 from closed-form vectors: (phi_1 psi_1, phi_2 psi_2)
    // with psi = a, phi_bar = b^dagger / <b|a>.
    const cplx e = pt2x2_energy(1.0, 0.5);
    const Vector a = pt2x2_right(1.0, 0.5, 0.0, -e);
    const Vector b = pt2x2_left(1.0, 0.5, 0.0, -e);
    const Vector expected = (b.conjugate().cwiseProduct(a)) / b.dot(a);
    const auto pt = basis_of(pt2x2(1.0, 0.5));
    const Vector got = local_probability(to_fields(state_from_right(pt, pt->right(0))));
    CHECK(max_abs(got - expected) < 1e-10);
    CHECK(std::abs(got.sum() - 1.0) < 1e-12);

    const FieldPair zero{Vector::Zero(3), Vector::Zero(3)};
    CHECK(local_probability(zero).isZero());
}

TEST_CASE("expectation") {
    const auto z = basis_of(pauli_z());
    const auto up = state_from_right(z, z->right(1));
    CHECK(std::abs(expectation(to_fields(up), pauli_z()) - 1.0) < 1e-14);

    const auto basis = basis_of(pt2x2(1.0, 2.0));
    const auto s = state_from_right(basis, basis->right(0) + 2.0 * basis->right(1));
    const auto f = to_fields(s);
    CHECK(std::abs(expectation(f, Matrix::Identity(2, 2)) - total_probability(s)) < 1e-12);

    const auto pt = basis_of(pt2x2(1.0, 0.5));
    const auto single = state_from_right(pt, pt->right(1));
    CHECK(std::abs(expectation(to_fields(single), pt2x2(1.0, 0.5)) - 0.8660254037844386) < 1e-10);

    CHECK_THROWS_AS(expectation(f, Matrix::Identity(3, 3)), DimensionMismatch);
}

TEST_CASE("field_energy") {
    const auto pt = basis_of(pt2x2(1.0, 0.5));
    const auto single = state_from_right(pt, pt->right(0));
    CHECK(std::abs(field_energy(single) - pt->eigenvalue(0)) < 1e-14);

    const auto broken = basis_of(pt2x2(1.0, 2.0));
    const auto mix = state_from_right(broken, broken->right(0) + broken->right(1));
    CHECK(std::abs(field_energy(mix)) < 1e-12);
    CHECK(std::abs(field_energy(evolve_spectral(mix, 3.0)) - field_energy(mix)) < 1e-12);

    const CanonicalState empty(pt, Vector::Zero(2), Vector::Zero(2), RealVector::Zero(2));
    CHECK(field_energy(empty) == cplx(0.0));
}

TEST_CASE("fields re-project onto the generating state") {
    const auto basis = basis_of(pt2x2(0.7, 0.3, 0.4));
    const auto s = state_from_right(basis, Vector::Ones(2));
    const auto m = project(to_fields(s), *basis);
    CHECK(max_abs(m.c - s.c()) < 1e-10);
    CHECK(max_abs(m.c_bar - s.c_bar()) < 1e-10);
}

TEST_CASE("evolve_ode: Hermitian limit conserves the norm and keeps phi_bar = psi^dagger") {
    std::mt19937 rng(3);
    const Matrix g = random_complex(4, rng);
    const Hamiltonian h(0.25 * (g + g.adjoint()));
    Vector psi0 = random_vector(4, rng);
    psi0 /= psi0.norm();
    const double emax = Eigen::ComplexEigenSolver<Matrix>(h.matrix(), false).eigenvalues().cwiseAbs().maxCoeff();
    const auto traj = evolve_ode(conjugate_pair(psi0), h, {0.0, 10.0}, 0.05 / emax, {.sample_every = 10});
    for (const auto& s : traj.samples) {
        CHECK(std::abs(s.norm2 - 1.0) < 1e-7);
        CHECK(max_abs(s.fields.phi_bar - s.fields.psi.conjugate()) < 1e-8);
    }
}

TEST_CASE("evolve_ode: broken PT phase conserves phi_bar psi while |psi|^2 grows") {
    const Hamiltonian h(pt2x2(1.0, 2.0));
    const auto basis = std::make_shared<const BiorthoSystem>(diagonalize_biortho(h));
    const auto s0 = state_from_right(basis, basis->right(0) + basis->right(1));
    const auto traj = evolve_ode(to_fields(s0), h, {0.0, 10.0}, 1e-3, {.sample_every = 100});
    REQUIRE(traj.samples.size() == 101);
    const double rate = 2.0 * std::sqrt(3.0);
    for (const auto& s : traj.samples) {
        CAPTURE(s.t);
        CHECK(std::abs(s.probability - 1.0) < 1e-7);
        CHECK(std::abs(s.energy - field_energy(s0)) < 1e-7);
        const auto exact = to_fields(evolve_spectral(s0, s.t));
        CHECK(s.norm2 == doctest::Approx(exact.psi.squaredNorm()).epsilon(1e-6));
        for (Eigen::Index j = 0; j < 2; ++j) {
            CHECK(std::abs(s.c_bar(j) * s.c(j) - s0.gauge()(j)) < 1e-7);
        }
    }
    const double ratio = traj.samples.back().norm2 / traj.samples[50].norm2;
    CHECK(ratio == doctest::Approx(std::exp(rate * 5.0)).epsilon(1e-3));
}

TEST_CASE("evolve_ode agrees with the spectral solution") {
    for (const Matrix& m : {pt2x2(1.0, 0.5), pt2x2(0.8, 0.2, 0.5), pauli_x()}) {
        const Hamiltonian h(m);
        const auto basis = std::make_shared<const BiorthoSystem>(diagonalize_biortho(h));
        const auto s0 = state_from_right(basis, Vector::Ones(2));
        const double dt = 0.05 / basis->eigenvalues().cwiseAbs().maxCoeff();
        const auto traj = evolve_ode(to_fields(s0), h, {0.0, 10.0}, dt, {.sample_every = 20});
        for (const auto& s : traj.samples) {
            const auto exact = to_fields(evolve_spectral(s0, s.t));
            CHECK(max_abs(s.fields.psi - exact.psi) < 1e-6);
            CHECK(max_abs(s.fields.phi_bar - exact.phi_bar) < 1e-6);
            CHECK(std::abs(s.probability - 1.0) < 1e-7);
        }
    }
    // Broken phase: compare relative to the growing field
    const Hamiltonian h(pt2x2(1.0, 2.0));
    const auto basis = std::make_shared<const BiorthoSystem>(diagonalize_biortho(h));
    const auto s0 = state_from_right(basis, Vector::Ones(2));
    const auto traj = evolve_ode(to_fields(s0), h, {0.0, 10.0}, 0.05 / std::sqrt(3.0), {.sample_every = 20});
    for (const auto& s : traj.samples) {
        const auto exact = to_fields(evolve_spectral(s0, s.t));
        CHECK(max_abs(s.fields.psi - exact.psi) / exact.psi.norm() < 1e-6);
    }
}

TEST_CASE("evolve_ode satisfies the canonical equations along the trajectory") {
    // d(i hbar psi)/dt = dH/dphi_bar = h psi, dphi_bar/dt = -dH/d(i hbar psi) = (i/hbar) phi_bar h
    const double hbar = 1.5;
    const Matrix m = pt2x2(1.0, 0.4, 0.3);
    const Hamiltonian h(m, hbar);
    const Vector psi0 = Vector::Ones(2);
    const Vector phi0 = Vector::Constant(2, cplx(0.5, 0.2));
    for (double spacing : {0.02, 0.01}) {
        const std::size_t every = static_cast<std::size_t>(std::lround(spacing / 1e-3));
        const auto traj = evolve_ode({psi0, phi0}, h, {0.0, 2.0}, 1e-3, {.sample_every = every});
        double worst = 0.0;
        for (std::size_t k = 1; k + 1 < traj.samples.size(); ++k) {
            const auto& prev = traj.samples[k - 1].fields;
            const auto& next = traj.samples[k + 1].fields;
            const auto& here = traj.samples[k].fields;
            const Vector dpsi = (next.psi - prev.psi) / (2.0 * spacing);
            const Vector dphi = (next.phi_bar - prev.phi_bar) / (2.0 * spacing);
            const Vector lhs_q = cplx(0.0, hbar) * dpsi;
            const Vector rhs_q = m * here.psi;
            const Vector rhs_p = cplx(0.0, 1.0 / hbar) * (m.transpose() * here.phi_bar);
            worst = std::max({worst, max_abs(lhs_q - rhs_q), max_abs(dphi - rhs_p)});
        }
        CAPTURE(spacing);
        CHECK(worst < 0.2 * spacing * spacing);
    }
}

TEST_CASE("evolve_ode guards") {
    const Hamiltonian h(pt2x2(1.0, 2.0));
    const FieldPair f{Vector::Ones(2), Vector::Ones(2)};
    CHECK_THROWS_AS(evolve_ode(f, h, {0.0, 1.0}, 0.2 / std::sqrt(3.0)), StepTooLarge);
    CHECK_THROWS_AS(evolve_ode(f, h, {0.0, 1.0}, -1.0), InputError);
    CHECK_THROWS_AS(evolve_ode({Vector::Ones(3), Vector::Ones(3)}, h, {0.0, 1.0}, 1e-3),
                    DimensionMismatch);

    const Hamiltonian runaway(pt2x2(1.0, 100.0));
    CHECK_THROWS_AS(evolve_ode(f, runaway, {0.0, 10.0}, 1e-3, {.sample_every = 1000}), NonFinite);
}

TEST_CASE("evolve_ode at an exceptional point still integrates") {
    const Hamiltonian h(pt2x2(1.0, 1.0));
    const FieldPair f{Vector::Ones(2), Vector::Ones(2)};
    const auto traj = evolve_ode(f, h, {0.0, 1.0}, 1e-2);
    CHECK_FALSE(traj.basis);
    CHECK(traj.samples.back().c.size() == 0);
    CHECK(std::abs(traj.samples.back().probability - traj.samples.front().probability) < 1e-10);
}
