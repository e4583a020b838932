#pragma once

#include "nhqm/biortho.hpp"
#include "nhqm/types.hpp"

#include <cstddef>
#include <vector>

namespace nhqm {

enum class Boundary { dirichlet, periodic };

// Uniform 1D grid. Dirichlet grids include both end points and treat the
// field as zero one spacing beyond them; periodic grids omit x_max.
class Grid1D {
  public:
    Grid1D(std::size_t n_points, double x_min, double x_max, Boundary boundary = Boundary::dirichlet);

    std::size_t n_points() const { return n_; }
    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double spacing() const { return spacing_; }
    Boundary boundary() const { return boundary_; }
    double x(std::size_t i) const { return x_min_ + spacing_ * static_cast<double>(i); }
    RealVector points() const;

    // spacing * sum_i f_i g_i
    cplx integrate(const Vector& f, const Vector& g) const;
    // sqrt(spacing * sum_i |f_i|^2)
    double norm(const Vector& f) const;

  private:
    std::size_t n_;
    double x_min_;
    double x_max_;
    double spacing_;
    Boundary boundary_;
};

// 0.5 m omega^2 (x - x0)^2
Vector harmonic_potential(const Grid1D& grid, double omega, double mass = 1.0, double x0 = 0.0);

// 0.5 omega^2 x^2 + i gamma exp(-x^2 / (2 width^2))
Vector complex_well_potential(const Grid1D& grid, double omega, double gamma, double width = 1.0);

struct GPParameters {
    double hbar = 1.0;
    double mass = 1.0;
};

// -hbar^2/(2m) Laplacian (3-point) + V + c * density
Hamiltonian build_gp_operator(const Grid1D& grid, const Vector& potential, cplx c,
                              const Vector& density, const GPParameters& params = {});

struct GPOptions {
    double mix = 0.3;
    double tol = 1e-10;
    std::size_t max_iter = 500;
    // |C|^2 of the single occupied mode.
    double gauge = 1.0;
    GPParameters params;
};

struct GPSolution {
    Vector psi;
    Vector phi_bar;
    cplx mu;
    double residual = 0.0;
    std::size_t iterations = 0;
    std::vector<double> gauge;
    // Relative distance between phi_bar and the left state regenerated from
    // the converged fields.
    double left_mismatch = 0.0;
};

struct GPProposal {
    Vector psi;
    Vector phi_bar;
    cplx mu;
};

// One pass of the self-consistency map: build h from the density phi_bar psi,
// diagonalize, take the eigenpair nearest mu_prev, and return
// psi = sqrt(g) a / sqrt(dx), phi_bar = b^dagger / (sqrt(g) sqrt(dx)).
// Throws ModeCollapse when the selected eigenvalue is within 1e-10 of another.
GPProposal gp_propose(const Grid1D& grid, const Vector& potential, cplx c, const Vector& psi,
                      const Vector& phi_bar, cplx mu_prev, const GPOptions& opts = {});

// Starts from the c = 0 eigenpair with the smallest real part, then iterates
// with linear mixing. Throws NoConvergence after max_iter passes.
GPSolution solve_self_consistent(const Grid1D& grid, const Vector& potential, cplx c,
                                 const GPOptions& opts = {});

// |h psi - mu psi| + |phi_bar h - mu phi_bar| in the grid norm, h built from
// the solution's own density.
double gp_residual(const GPSolution& solution, const Grid1D& grid, const Vector& potential,
                   cplx c, const GPParameters& params = {});

}  // namespace nhqm
