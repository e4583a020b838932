#pragma once

#include "nhqm/biortho.hpp"
#include "nhqm/types.hpp"

#include <cstddef>
#include <memory>
#include <vector>

namespace nhqm {

// Joint right/left field in site components: psi_k and the row phi_bar_k.
struct FieldPair {
    Vector psi;
    Vector phi_bar;
};

// Canonical pair (c_j, c_bar_j) over a biorthogonal basis with the gauge
// constants |C_j|^2 = c_bar_j c_j. Unoccupied modes carry c_j = c_bar_j = 0.
class CanonicalState {
  public:
    // Validates the gauge-product invariant; throws InputError otherwise.
    CanonicalState(std::shared_ptr<const BiorthoSystem> basis, Vector c, Vector c_bar,
                   RealVector gauge, double time = 0.0);

    const BiorthoSystem& basis() const { return *basis_; }
    const std::shared_ptr<const BiorthoSystem>& basis_ptr() const { return basis_; }
    Eigen::Index dim() const { return c_.size(); }
    const Vector& c() const { return c_; }
    const Vector& c_bar() const { return c_bar_; }
    const RealVector& gauge() const { return gauge_; }
    double time() const { return time_; }

  private:
    std::shared_ptr<const BiorthoSystem> basis_;
    Vector c_;
    Vector c_bar_;
    RealVector gauge_;
    double time_;
};

struct StateOptions {
    // Modes with |c_j| <= occ_threshold * |c| are unoccupied.
    double occ_threshold = 1e-12;
    // Rescale the gauge constants uniformly so that sum_j c_bar_j c_j = 1.
    bool normalize = true;
};

// c_j = <b_j|psi0>, c_bar_j = gauge_j / c_j. Throws GaugeConflict when the
// gauge disagrees with which modes psi0 actually occupies.
CanonicalState state_from_right(std::shared_ptr<const BiorthoSystem> basis, const Vector& psi0,
                                const RealVector& gauge, const StateOptions& opts = {});

// Same with |C_j|^2 = 1 on every occupied mode.
CanonicalState state_from_right(std::shared_ptr<const BiorthoSystem> basis, const Vector& psi0,
                                const StateOptions& opts = {});

// c_j -> c_j e^{-i E_j t/hbar}, c_bar_j -> c_bar_j e^{+i E_j t/hbar}; time += t.
CanonicalState evolve_spectral(const CanonicalState& state, double t);

// psi = sum_j c_j a_j, phi_bar = sum_j c_bar_j b_j^dagger
FieldPair to_fields(const CanonicalState& state);

struct ModalCoefficients {
    Vector c;
    Vector c_bar;
};

// c_j = <b_j|psi>, c_bar_j = phi_bar a_j
ModalCoefficients project(const FieldPair& fields, const BiorthoSystem& basis);

// sum_j c_bar_j c_j
cplx total_probability(const CanonicalState& state);
// phi_bar . psi
cplx total_probability(const FieldPair& fields);

// phi_bar_k psi_k. Not a positive density for a generic non-Hermitian h.
Vector local_probability(const FieldPair& fields);

// phi_bar O psi
cplx expectation(const FieldPair& fields, const Matrix& op);

// sum_j E_j c_bar_j c_j
cplx field_energy(const CanonicalState& state);

struct TimeSpan {
    double start = 0.0;
    double stop = 0.0;
};

struct OdeOptions {
    // Record every n-th step; the last step is always recorded.
    std::size_t sample_every = 1;
    // Guard on dt * max|E_j| / hbar.
    double max_phase_step = 0.1;
};

// One recorded point. The scalar diagnostics and modal coefficients are
// evaluated from the extended-precision state before it is rounded into
// `fields`, so they keep their accuracy when the fields span many decades.
struct TrajectorySample {
    double t = 0.0;
    FieldPair fields;
    cplx probability;  // phi_bar . psi
    cplx energy;       // phi_bar h psi
    double norm2 = 0.0;
    Vector c;      // empty when h has no biorthogonal basis
    Vector c_bar;  // empty when h has no biorthogonal basis
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::shared_ptr<const BiorthoSystem> basis;  // null at an exceptional point
    double hbar = 1.0;
};

// Classical RK4 on i hbar dpsi/dt = h psi and -i hbar dphi_bar/dt = phi_bar h
// in lockstep. Throws StepTooLarge when dt max|E|/hbar exceeds the guard and
// NonFinite when a field overflows.
Trajectory evolve_ode(const FieldPair& initial, const Hamiltonian& h, TimeSpan span, double dt,
                      const OdeOptions& opts = {});

}  // namespace nhqm
