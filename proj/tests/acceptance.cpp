// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "models.hpp"
#include "nhqm/biortho.hpp"
#include "nhqm/builders.hpp"
#include "nhqm/canonical.hpp"
#include "nhqm/errors.hpp"
#include "nhqm/fock.hpp"
#include "nhqm/geometric.hpp"
#include "nhqm/gp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace nhqm;
using namespace nhqm::test;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what, double value) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s%s=%.3g", detail.empty() ? "" : ", ", what.c_str(), value);
        detail += buf;
        if (!ok) {
            pass = false;
            detail += "(!)";
        }
    }
};

struct Criterion {
    int id;
    std::string title;
    double time_limit;  // seconds; 0 means none
    std::function<Outcome()> body;
};

RealVector vec(std::initializer_list<double> xs) {
    RealVector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

ParametricFamily pt_family() {
    return {"pt2x2", 2, [](const RealVector& r) { return pt2x2(r(0), r(1)); }};
}

ParametricFamily pt_plane(double gamma) {
    return {"pt2x2", 2, [gamma](const RealVector& r) { return pt2x2(r(0), gamma, r(1)); }};
}

ParametricFamily spin_family() {
    return {"spin_half", 3, [](const RealVector& r) { return spin_half(r(0), r(1), r(2)); }};
}

// ---------------------------------------------------------------- 1

Outcome pt_spectrum() {
    Outcome o;
    const auto reg = BuilderRegistry::with_defaults();
    const auto unbroken = diagonalize_biortho(Hamiltonian(reg.build_matrix("pt2x2", {{"kappa", 1}, {"gamma", 0.5}})));
    const auto broken = diagonalize_biortho(Hamiltonian(reg.build_matrix("pt2x2", {{"kappa", 1}, {"gamma", 2}})));
    const double e1 = 0.866025403784;
    const double e2 = 1.732050807569;
    const double err1 = std::max(std::abs(unbroken.eigenvalue(0) - cplx(-e1, 0)),
                                 std::abs(unbroken.eigenvalue(1) - cplx(e1, 0)));
    const double err2 = std::max(std::abs(broken.eigenvalue(0) - cplx(0, -e2)),
                                 std::abs(broken.eigenvalue(1) - cplx(0, e2)));
    o.require(err1 < 1e-10, "err(gamma=0.5)", err1);
    o.require(err2 < 1e-10, "err(gamma=2)", err2);
    return o;
}

// ---------------------------------------------------------------- 2, 3

struct BrokenRun {
    double worst_probability = 0.0;
    double worst_energy = 0.0;
    double growth = 0.0;
    double growth_expected = 0.0;
};

BrokenRun run_trajectory(double kappa, double gamma, bool pure_growing) {
    const Hamiltonian h(pt2x2(kappa, gamma));
    const auto basis = std::make_shared<const BiorthoSystem>(diagonalize_biortho(h));
    const Vector psi0 = pure_growing ? Vector(basis->right(1)) : Vector(basis->right(0) + basis->right(1));
    const auto s0 = state_from_right(basis, psi0);
    const auto traj = evolve_ode(to_fields(s0), h, {0.0, 10.0}, 1e-3);
    BrokenRun r;
    const cplx e0 = field_energy(s0);
    for (const auto& s : traj.samples) {
        r.worst_probability = std::max(r.worst_probability, std::abs(s.probability - 1.0));
        r.worst_energy = std::max(r.worst_energy, std::abs(s.energy - e0));
    }
    r.growth = traj.samples.back().norm2 / traj.samples.front().norm2;
    r.growth_expected = to_fields(evolve_spectral(s0, 10.0)).psi.squaredNorm() /
                        to_fields(s0).psi.squaredNorm();
    return r;
}

Outcome probability_conservation() {
    Outcome o;
    const BrokenRun pure = run_trajectory(1.0, 2.0, true);
    const BrokenRun mixed = run_trajectory(1.0, 2.0, false);
    const double factor = std::exp(2.0 * std::sqrt(3.0) * 10.0);
    o.require(std::max(pure.worst_probability, mixed.worst_probability) < 1e-7, "max|P-1|",
              std::max(pure.worst_probability, mixed.worst_probability));
    const double rel_pure = std::abs(pure.growth / factor - 1.0);
    const double rel_mixed = std::abs(mixed.growth / mixed.growth_expected - 1.0);
    o.require(rel_pure < 1e-2, "growth vs e^(20 sqrt3)", rel_pure);
    o.require(rel_mixed < 1e-2, "growth vs closed form", rel_mixed);
    return o;
}

Outcome energy_conservation() {
    Outcome o;
    double worst = 0.0;
    for (bool pure : {true, false}) {
        worst = std::max(worst, run_trajectory(1.0, 2.0, pure).worst_energy);   // complex E
        worst = std::max(worst, run_trajectory(1.0, 0.5, pure).worst_energy);   // real E
    }
    o.require(worst < 1e-7, "max|H(t)-H(0)|", worst);
    return o;
}

// ---------------------------------------------------------------- 4

Outcome conjugation() {
    Outcome o;
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_a = 0.0;
    const auto fam = pt_family();
    for (int i = 0; i < 50; ++i) {
        const double gamma = 2.0 * u(rng);
        // Keep |kappa - gamma| >= 0.2 on either side of the exceptional line.
        const double kappa = u(rng) < 0.5 ? gamma + 0.2 + 1.5 * u(rng) : std::max(0.0, gamma - 0.2) * u(rng);
        if (std::abs(kappa - gamma) < 0.2) continue;
        const RealVector r = vec({kappa, gamma});
        for (Eigen::Index j = 0; j < 2; ++j) {
            const Vector a = berry_connection_right(fam, r, j);
            const Vector b = berry_connection_left(fam, r, j);
            worst_a = std::max(worst_a, (b - a.conjugate()).cwiseAbs().maxCoeff());
        }
    }
    double worst_b = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double gamma = 0.6 * u(rng);
        const double radius = gamma + 0.3 + u(rng);
        const RealVector c = vec({0.3 * (u(rng) - 0.5), 0.3 * (u(rng) - 0.5)});
        const auto path = circle_path(pt_plane(gamma), c, radius, 400);
        for (Eigen::Index j = 0; j < 2; ++j) {
            const auto r = geometric_phase_loop(path, j);
            worst_b = std::max(worst_b, std::abs(r.geometric_phase_left - std::conj(r.geometric_phase_right)));
        }
    }
    o.require(worst_a < 1e-8, "max|Abar-A*|", worst_a);
    o.require(worst_b < 1e-8, "max|betabar-beta*|", worst_b);
    return o;
}

// ---------------------------------------------------------------- 5

Outcome hermitian_berry() {
    Outcome o;
    const double theta = pi / 3.0;
    const auto path = circle_path(spin_family(), vec({0.0, 0.0, std::cos(theta)}), std::sin(theta), 400);
    const auto r = geometric_phase_loop(path, 1);
    const double expected = -pi * (1.0 - std::cos(theta));
    const double err = std::abs(std::remainder(r.geometric_phase_right.real() - expected, 2.0 * pi));
    o.require(err < 2e-3, "|Re beta + 1.570796|", err);
    o.require(std::abs(r.geometric_phase_right.imag()) < 1e-8, "|Im beta|", std::abs(r.geometric_phase_right.imag()));
    const Vector b = berry_curvature(spin_family(), vec({0.0, 0.0, 1.0}), 1);
    const double bz = std::abs(b(2) - cplx(-0.5, 0.0));
    o.require(bz < 1e-4, "|B_z + 0.5|", bz);
    return o;
}

// ---------------------------------------------------------------- 6

Outcome loop_occupation() {
    Outcome o;
    const auto path = circle_path(pt_plane(0.5), vec({0.0, 0.0}), 1.0, 1000);
    const auto report = adiabatic_evolve(path, 1, 1000.0, 0.02);
    o.require(std::abs(report.geometric_phase_right.imag()) > 0.1, "|Im beta|",
              std::abs(report.geometric_phase_right.imag()));
    const double err = std::abs(*report.loop_occupation - 1.0);
    o.require(err < 1e-6, "|cbar c - 1|", err);
    return o;
}

// ---------------------------------------------------------------- 7

Outcome fock_spectrum() {
    Outcome o;
    const auto space = std::make_shared<const FockSpace>(2, Statistics::boson, 3);
    Vector e(2);
    e << cplx(1.0, 0.3), cplx(0.5, -0.2);
    const Vector found = spectrum(build_free_hamiltonian(space, e));
    std::vector<cplx> expected;
    for (int n0 = 0; n0 <= 3; ++n0)
        for (int n1 = 0; n1 <= 3; ++n1) expected.push_back(double(n0) * e(0) + double(n1) * e(1));
    std::vector<bool> used(expected.size(), false);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < found.size(); ++i) {
        double best = 1e300;
        std::size_t pick = 0;
        for (std::size_t k = 0; k < expected.size(); ++k) {
            if (!used[k] && std::abs(found(i) - expected[k]) < best) best = std::abs(found(i) - expected[k]), pick = k;
        }
        used[pick] = true;
        worst = std::max(worst, best);
    }
    o.require(found.size() == 16 && worst < 1e-10, "max eigenvalue err", worst);

    const auto fspace = std::make_shared<const FockSpace>(3, Statistics::fermion);
    const auto ops = build_mode_operators(fspace);
    const Matrix id = Matrix::Identity(fspace->dim(), fspace->dim());
    double defect = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const Matrix cc = anticommutator(ops.lower[i].matrix(), ops.raise[j].matrix()) - (i == j ? id : Matrix(0 * id));
            defect = std::max({defect, max_abs(cc), max_abs(anticommutator(ops.lower[i].matrix(), ops.lower[j].matrix()))});
        }
    }
    o.require(defect == 0.0, "fermion anticommutator defect", defect);
    return o;
}

// ---------------------------------------------------------------- 8

Vector relax(const Grid1D& grid, const Vector& v, double c, double dtau, int steps) {
    const auto n = static_cast<Eigen::Index>(grid.n_points());
    Vector psi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = grid.x(static_cast<std::size_t>(i));
        psi(i) = std::exp(-0.3 * x * x);
    }
    psi /= grid.norm(psi);
    for (int s = 0; s < steps; ++s) {
        const Matrix h = build_gp_operator(grid, v, c, psi.cwiseAbs2().cast<cplx>()).matrix();
        psi -= dtau * (h * psi);
        psi /= grid.norm(psi);
    }
    return psi;
}

Outcome gp_self_consistency() {
    Outcome o;
    const Grid1D grid(128, -8.0, 8.0);
    const Vector v = complex_well_potential(grid, 1.0, 0.05);
    const auto sol = solve_self_consistent(grid, v, 1.0);
    o.require(sol.iterations < 200, "iterations", static_cast<double>(sol.iterations));
    o.require(sol.residual < 1e-8, "residual", sol.residual);
    const auto regen = gp_propose(grid, v, 1.0, sol.psi, sol.phi_bar, sol.mu);
    const double mismatch = grid.norm(regen.phi_bar - sol.phi_bar) / grid.norm(sol.phi_bar);
    o.require(mismatch < 1e-8, "regenerated phi_bar mismatch", mismatch);

    const Vector vh = harmonic_potential(grid, 1.0);
    const auto herm = solve_self_consistent(grid, vh, 1.0);
    const Vector ref = relax(grid, vh, 1.0, 0.01, 6000);
    const double dpsi = grid.norm(herm.psi - ref);
    const Matrix h = build_gp_operator(grid, vh, 1.0, ref.cwiseAbs2().cast<cplx>()).matrix();
    const double dmu = std::abs(herm.mu - grid.integrate(ref.conjugate(), h * ref));
    o.require(dpsi < 1e-6, "Hermitian |psi - oracle|", dpsi);
    o.require(dmu < 1e-6, "Hermitian |mu - oracle|", dmu);
    return o;
}

// ---------------------------------------------------------------- 9

Outcome action_invariants() {
    Outcome o;
    double worst = 0.0;
    for (double hbar : {1.0, 2.0}) {
        // Spectrum {1, 2} in units of hbar: mode k closes after 2 pi hbar / E_k.
        const Matrix h = hbar * (pt2x2(0.625, 0.375) + 1.5 * Matrix::Identity(2, 2));
        const auto basis = std::make_shared<const BiorthoSystem>(diagonalize_biortho(Hamiltonian(h, hbar)));
        RealVector gauge(2);
        gauge << 0.3, 0.7;
        const auto state = state_from_right(basis, basis->right(0) + 2.0 * basis->right(1), gauge);
        const double period = 2.0 * pi;
        const auto traj = evolve_ode(to_fields(state), Hamiltonian(h, hbar), {0.0, period}, period / 8000.0);
        const cplx i0 = action_variable(modal_samples(traj, 0, 8000), 0, hbar);
        const cplx i1 = action_variable(modal_samples(traj, 0, 4000), 1, hbar);
        worst = std::max(worst, std::abs(i0 - hbar * state.c_bar()(0) * state.c()(0)));
        worst = std::max(worst, std::abs(i1 - hbar * state.c_bar()(1) * state.c()(1)));
    }
    o.require(worst < 1e-6, "max|I_k - hbar cbar c|", worst);
    return o;
}

// ---------------------------------------------------------------- 10

Outcome gauge_ledger() {
    Outcome o;
    const auto basis = std::make_shared<const BiorthoSystem>(diagonalize_biortho(Hamiltonian(pt2x2(1.0, 0.4, 0.3))));
    const Vector psi = basis->right(0) + cplx(0.5, 0.2) * basis->right(1);
    RealVector gauge(2);
    gauge << 0.25, 0.75;
    StateOptions raw;
    raw.normalize = false;
    const auto a = state_from_right(basis, psi, gauge, raw);
    bool exact = true;
    double generic = 0.0;
    for (double s : {4.0, 0.125}) {
        const auto b = state_from_right(basis, psi, RealVector(s * gauge), raw);
        for (Eigen::Index j = 0; j < 2; ++j) {
            exact = exact && b.c_bar()(j) * b.c()(j) == s * (a.c_bar()(j) * a.c()(j)) && b.c()(j) == a.c()(j);
        }
    }
    {
        const double s = 1.7;
        const auto b = state_from_right(basis, psi, RealVector(s * gauge), raw);
        for (Eigen::Index j = 0; j < 2; ++j) {
            generic = std::max(generic, std::abs(b.c_bar()(j) * b.c()(j) / (a.c_bar()(j) * a.c()(j)) - s));
        }
    }
    o.require(exact, "power-of-two rescale exact", exact ? 1.0 : 0.0);
    o.require(generic < 4 * std::numeric_limits<double>::epsilon(), "ratio err at s=1.7", generic);

    const auto space = std::make_shared<const FockSpace>(2, Statistics::boson, 3);
    const auto ops = build_mode_operators(space);
    Matrix plain = Matrix::Zero(space->dim(), space->dim());
    for (int j = 0; j < 2; ++j) plain += ops.raise[j].matrix() * ops.lower[j].matrix();
    const Vector n0 = spectrum(ManyBodyOperator(space, plain));
    const Vector counts = spectrum(total_number_operator(space));
    double worst = 0.0;
    for (double f : {2.0, 0.25, 3.7}) {
        Matrix n = Matrix::Zero(space->dim(), space->dim());
        for (int j = 0; j < 2; ++j) n += (ops.raise[j].matrix() / f) * (f * ops.lower[j].matrix());
        const Vector sp = spectrum(ManyBodyOperator(space, n));
        worst = std::max(worst, (sp - n0).cwiseAbs().maxCoeff());
        if (f != 3.7 && sp != n0) worst = std::max(worst, 1.0);
    }
    double integer_gap = 0.0;
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
        integer_gap = std::max(integer_gap, std::abs(counts(i) - std::round(counts(i).real())));
    }
    const double ulp_scale = 4 * std::numeric_limits<double>::epsilon() * n0.cwiseAbs().maxCoeff();
    o.require(worst <= ulp_scale, "number spectrum change", worst);
    o.require(integer_gap == 0.0, "number spectrum off integers", integer_gap);
    return o;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "PT 2x2 spectrum", 1.0, pt_spectrum},
        {2, "probability conservation in the broken phase", 5.0, probability_conservation},
        {3, "field-energy conservation", 0.0, energy_conservation},
        {4, "conjugation identities", 0.0, conjugation},
        {5, "Hermitian Berry phase and monopole curvature", 0.0, hermitian_berry},
        {6, "loop-occupation identity", 30.0, loop_occupation},
        {7, "Fock spectrum and fermion algebra", 0.0, fock_spectrum},
        {8, "GP self-consistency", 0.0, gp_self_consistency},
        {9, "action invariants", 0.0, action_invariants},
        {10, "gauge ledger", 0.0, gauge_ledger},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit > 0.0) o.require(secs < c.time_limit, "runtime_s", secs);
        std::printf("%s [%d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                    o.detail.c_str(), secs);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
