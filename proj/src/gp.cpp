#include "nhqm/gp.hpp"

#include "nhqm/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <string>

namespace nhqm {

namespace {

void check_length(const Grid1D& grid, const Vector& v, const char* what) {
    if (v.size() != static_cast<Eigen::Index>(grid.n_points())) {
        throw DimensionMismatch(std::string(what) + " has " + std::to_string(v.size()) +
                                " points, grid has " + std::to_string(grid.n_points()));
    }
}

struct Eigenpair {
    cplx value;
    Vector right;  // |a| = 1, largest component real positive
    Vector left;   // <b|a> = 1
};

// Two steps of shifted inverse iteration, enough once the shift sits on an
// eigenvalue to rounding accuracy.
Vector inverse_iterate(const Matrix& m, cplx shift) {
    const auto n = m.rows();
    const Eigen::PartialPivLU<Matrix> lu(m - shift * Matrix::Identity(n, n));
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(1.0 + 0.01 * static_cast<double>(i % 7), 0.003 * static_cast<double>(i % 5));
    for (int k = 0; k < 3; ++k) {
        v = lu.solve(v);
        v /= v.norm();
    }
    return v;
}

Eigenpair nearest_eigenpair(const Hamiltonian& h, cplx target) {
    const Matrix& m = h.matrix();
    Eigen::ComplexSchur<Matrix> schur(m, false);
    if (schur.info() != Eigen::Success) throw NonFinite("GP eigenvalue solve did not converge");
    const Vector values = schur.matrixT().diagonal();
    Eigen::Index pick = 0;
    for (Eigen::Index k = 1; k < values.size(); ++k) {
        if (std::abs(values(k) - target) < std::abs(values(pick) - target)) pick = k;
    }
    const cplx e = values(pick);
    const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        if (k != pick && std::abs(values(k) - e) < 1e-10 * scale) {
            throw ModeCollapse("GP target mode merges with another at mu = (" +
                               std::to_string(e.real()) + ", " + std::to_string(e.imag()) + ")");
        }
    }
    const cplx shift = e + cplx(1e-11, 1e-11) * scale;
    Vector a = inverse_iterate(m, shift);
    Vector b = inverse_iterate(m.adjoint(), std::conj(shift));
    Eigen::Index big = 0;
    for (Eigen::Index i = 1; i < a.size(); ++i) {
        if (std::abs(a(i)) > std::abs(a(big)) * (1.0 + 1e-12)) big = i;
    }
    a *= std::abs(a(big)) / a(big);
    const cplx overlap = b.dot(a);
    if (std::abs(overlap) < 1e-8) {
        throw ExceptionalPoint("GP operator is defective at the selected mode");
    }
    b /= std::conj(overlap);
    const cplx value = b.dot(m * a);
    return {value, std::move(a), std::move(b)};
}

}  // namespace

Grid1D::Grid1D(std::size_t n_points, double x_min, double x_max, Boundary boundary)
    : n_(n_points), x_min_(x_min), x_max_(x_max), boundary_(boundary) {
    if (n_ < 16) throw InputError("Grid1D needs at least 16 points");
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
        throw InputError("Grid1D needs finite x_min < x_max");
    }
    const double cells = boundary == Boundary::periodic ? static_cast<double>(n_)
                                                        : static_cast<double>(n_ - 1);
    spacing_ = (x_max - x_min) / cells;
}

RealVector Grid1D::points() const {
    RealVector x(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) x(static_cast<Eigen::Index>(i)) = this->x(i);
    return x;
}

cplx Grid1D::integrate(const Vector& f, const Vector& g) const {
    return spacing_ * (f.array() * g.array()).sum();
}

double Grid1D::norm(const Vector& f) const { return std::sqrt(spacing_) * f.norm(); }

Vector harmonic_potential(const Grid1D& grid, double omega, double mass, double x0) {
    Vector v(static_cast<Eigen::Index>(grid.n_points()));
    for (std::size_t i = 0; i < grid.n_points(); ++i) {
        const double d = grid.x(i) - x0;
        v(static_cast<Eigen::Index>(i)) = 0.5 * mass * omega * omega * d * d;
    }
    return v;
}

Vector complex_well_potential(const Grid1D& grid, double omega, double gamma, double width) {
    if (!(width > 0.0)) throw InputError("complex well width must be positive");
    Vector v(static_cast<Eigen::Index>(grid.n_points()));
    for (std::size_t i = 0; i < grid.n_points(); ++i) {
        const double x = grid.x(i);
        v(static_cast<Eigen::Index>(i)) =
            cplx(0.5 * omega * omega * x * x, gamma * std::exp(-x * x / (2.0 * width * width)));
    }
    return v;
}

Hamiltonian build_gp_operator(const Grid1D& grid, const Vector& potential, cplx c,
                              const Vector& density, const GPParameters& params) {
    check_length(grid, potential, "potential");
    check_length(grid, density, "density");
    if (!(params.hbar > 0.0) || !(params.mass > 0.0)) {
        throw InputError("hbar and mass must be positive");
    }
    const auto n = static_cast<Eigen::Index>(grid.n_points());
    const double t = params.hbar * params.hbar / (2.0 * params.mass * grid.spacing() * grid.spacing());
    Matrix h = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) = 2.0 * t + potential(i) + c * density(i);
        if (i + 1 < n) {
            h(i, i + 1) = -t;
            h(i + 1, i) = -t;
        }
    }
    if (grid.boundary() == Boundary::periodic) {
        h(0, n - 1) = -t;
        h(n - 1, 0) = -t;
    }
    return Hamiltonian(std::move(h), params.hbar);
}

GPProposal gp_propose(const Grid1D& grid, const Vector& potential, cplx c, const Vector& psi,
                      const Vector& phi_bar, cplx mu_prev, const GPOptions& opts) {
    check_length(grid, psi, "psi");
    check_length(grid, phi_bar, "phi_bar");
    if (!(opts.gauge > 0.0)) throw InputError("GP gauge constant must be positive");
    const Vector density = phi_bar.cwiseProduct(psi);
    const auto pair = nearest_eigenpair(build_gp_operator(grid, potential, c, density, opts.params), mu_prev);
    const double root_g = std::sqrt(opts.gauge);
    const double root_dx = std::sqrt(grid.spacing());
    return {root_g * pair.right / root_dx, pair.left.conjugate() / (root_g * root_dx), pair.value};
}

GPSolution solve_self_consistent(const Grid1D& grid, const Vector& potential, cplx c,
                                 const GPOptions& opts) {
    check_length(grid, potential, "potential");
    if (!(opts.mix > 0.0 && opts.mix <= 1.0)) throw InputError("mix must lie in (0, 1]");
    if (!(opts.tol > 0.0)) throw InputError("tol must be positive");

    // Linear start: smallest real part of the c = 0 spectrum.
    const auto n = static_cast<Eigen::Index>(grid.n_points());
    const Matrix linear = build_gp_operator(grid, potential, 0.0, Vector::Zero(n), opts.params).matrix();
    const Vector values = Eigen::ComplexSchur<Matrix>(linear, false).matrixT().diagonal();
    Eigen::Index lowest = 0;
    for (Eigen::Index k = 1; k < values.size(); ++k) {
        if (values(k).real() < values(lowest).real()) lowest = k;
    }
    const auto start = gp_propose(grid, potential, 0.0, Vector::Zero(n), Vector::Zero(n),
                                  values(lowest), opts);
    Vector psi = start.psi;
    Vector phi_bar = start.phi_bar;
    cplx mu = start.mu;

    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        const auto next = gp_propose(grid, potential, c, psi, phi_bar, mu, opts);
        Vector psi_new = (1.0 - opts.mix) * psi + opts.mix * next.psi;
        Vector phi_new = (1.0 - opts.mix) * phi_bar + opts.mix * next.phi_bar;
        phi_new /= grid.integrate(phi_new, psi_new);

        const double change = (psi_new - psi).norm() / psi.norm();
        const double left = (next.phi_bar - phi_bar).norm() / phi_bar.norm();
        psi = std::move(psi_new);
        phi_bar = std::move(phi_new);
        mu = next.mu;
        if (!psi.allFinite() || !phi_bar.allFinite()) {
            throw NonFinite("GP iteration diverged at pass " + std::to_string(it));
        }
        if (change < opts.tol && left < opts.tol) {
            GPSolution sol;
            const Hamiltonian h =
                build_gp_operator(grid, potential, c, phi_bar.cwiseProduct(psi), opts.params);
            sol.mu = grid.integrate(phi_bar, h.matrix() * psi) / grid.integrate(phi_bar, psi);
            sol.psi = std::move(psi);
            sol.phi_bar = std::move(phi_bar);
            sol.iterations = it;
            sol.gauge = {opts.gauge};
            const auto again = gp_propose(grid, potential, c, sol.psi, sol.phi_bar, sol.mu, opts);
            sol.left_mismatch = (again.phi_bar - sol.phi_bar).norm() / sol.phi_bar.norm();
            sol.residual = gp_residual(sol, grid, potential, c, opts.params);
            return sol;
        }
    }
    throw NoConvergence("GP self-consistency did not converge in " +
                        std::to_string(opts.max_iter) + " iterations");
}

double gp_residual(const GPSolution& solution, const Grid1D& grid, const Vector& potential,
                   cplx c, const GPParameters& params) {
    check_length(grid, solution.psi, "psi");
    check_length(grid, solution.phi_bar, "phi_bar");
    const Hamiltonian h = build_gp_operator(
        grid, potential, c, solution.phi_bar.cwiseProduct(solution.psi), params);
    const Vector right = h.matrix() * solution.psi - solution.mu * solution.psi;
    const Vector left = h.matrix().transpose() * solution.phi_bar - solution.mu * solution.phi_bar;
    return grid.norm(right) + grid.norm(left);
}

}  // namespace nhqm
