#pragma once

#include "nhqm/biortho.hpp"
#include "nhqm/canonical.hpp"
#include "nhqm/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nhqm {

// h(R) for a real parameter vector R with 1 to 3 components.
struct ParametricFamily {
    std::string name;
    Eigen::Index n_params = 0;
    std::function<Matrix(const RealVector&)> build;
    double hbar = 1.0;

    Hamiltonian at(const RealVector& r) const;
};

// Ordered parameter samples. A closed path repeats its first point at the end.
class ParameterPath {
  public:
    // Throws DimensionError on inconsistent sample lengths, InputError on
    // repeated consecutive samples, NotClosed when `closed` is set but the
    // endpoints differ by more than 1e-12.
    ParameterPath(ParametricFamily family, std::vector<RealVector> samples, bool closed);

    const ParametricFamily& family() const { return family_; }
    const std::vector<RealVector>& samples() const { return samples_; }
    bool closed() const { return closed_; }
    std::size_t segments() const { return samples_.size() - 1; }

    // Piecewise-linear position at u in [0, segments()].
    RealVector at(double u) const;

  private:
    ParametricFamily family_;
    std::vector<RealVector> samples_;
    bool closed_;
};

// Circle of the given radius in the (axis0, axis1) plane around `center`,
// sampled at `points` distinct points plus the repeated start.
ParameterPath circle_path(ParametricFamily family, const RealVector& center, double radius,
                          std::size_t points, int axis0 = 0, int axis1 = 1);

struct PhaseReport {
    Eigen::Index mode_index = 0;
    std::optional<cplx> dynamical_phase;  // -int E_j dt / hbar
    cplx geometric_phase_right;           // beta_j
    cplx geometric_phase_left;            // beta_bar_j
    std::optional<cplx> loop_occupation;  // c_bar_j c_j after the loop
    std::optional<double> adiabaticity_ratio;
};

// Finite-difference step used when delta <= 0 is passed: 1e-5 max(1, |R|_inf).
double default_delta(const RealVector& r);

// A_j = i <b_j| d_R a_j> by central differences of gauge-aligned eigenvectors.
// Throws ExceptionalPoint from the stencil diagonalizations and
// ModeTrackingLost when the mode cannot be followed to a stencil point.
Vector berry_connection_right(const ParametricFamily& family, const RealVector& r,
                              Eigen::Index j, double delta = 0.0);

// A_bar_j = i <a_j| d_R b_j>
Vector berry_connection_left(const ParametricFamily& family, const RealVector& r,
                             Eigen::Index j, double delta = 0.0);

// i <grad b_j| x |grad a_j>. Throws DimensionError unless R has 3 components.
Vector berry_curvature(const ParametricFamily& family, const RealVector& r, Eigen::Index j,
                       double delta = 0.0);

struct LoopPhases {
    cplx right;
    cplx left;
    // Running value of the right phase after each step, closing step last.
    std::vector<cplx> cumulative;
};

// Overlap-product phases of a closed loop given the eigenvectors at each
// distinct sample (the loop closes back onto index 0). Invariant under
// a_k -> f_k a_k, b_k -> b_k / conj(f_k). Throws BranchJump when a step's
// overlap phase leaves (-pi/2, pi/2).
LoopPhases loop_phases(const std::vector<Vector>& right, const std::vector<Vector>& left);

// Follows mode j (indexed at the first sample) around a closed path and
// applies loop_phases. Throws InputError for open paths.
PhaseReport geometric_phase_loop(const ParameterPath& path, Eigen::Index j,
                                 std::vector<cplx>* cumulative = nullptr);

enum class Schedule { smooth, uniform };

struct AdiabaticOptions {
    // smooth: constant speed between cosine ramps of length ramp_fraction * T
    // at both ends, so the path starts and stops at rest. ramp_fraction = 0.5
    // gives s(t) = t/T - sin(2 pi t/T)/(2 pi).
    Schedule schedule = Schedule::smooth;
    double ramp_fraction = 0.1;
    double max_ratio = 0.1;
    double max_phase_step = 0.1;
    std::size_t record_every = 0;  // 0 records only the endpoints
};

struct AdiabaticSample {
    double t = 0.0;
    cplx c;
    cplx c_bar;
    cplx energy;
};

// Integrates both field equations along R(t) from (a_j, b_j^dagger) at R(0).
// Throws AdiabaticityViolated when hbar max|dh/dt|_2 / min gap^2 exceeds
// max_ratio, StepTooLarge for a coarse dt, NonFinite on overflow.
PhaseReport adiabatic_evolve(const ParameterPath& path, Eigen::Index j, double total_time,
                             double dt, const AdiabaticOptions& opts = {},
                             std::vector<AdiabaticSample>* trace = nullptr);

// I_k = (i hbar / 2 pi) sum over the closed contour of phi_bar_k d psi_k,
// trapezoidal in the sample index. Throws NotClosed when the first and last
// samples differ by more than 1e-6 relative.
std::vector<cplx> action_variables(const std::vector<FieldPair>& samples, double hbar = 1.0);

// The same for component k alone; only that component has to close.
cplx action_variable(const std::vector<FieldPair>& samples, Eigen::Index k, double hbar = 1.0);

// Samples of an evolve_ode trajectory in eigen-coordinates (psi -> c, phi_bar -> c_bar).
// Throws InputError if the trajectory carries no modal coefficients.
std::vector<FieldPair> modal_samples(const Trajectory& traj, std::size_t first = 0,
                                     std::size_t last = static_cast<std::size_t>(-1));

}  // namespace nhqm
