#include "nhqm/canonical.hpp"

#include "nhqm/errors.hpp"
#include "rk4.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nhqm {

namespace {

using namespace std::complex_literals;

void require_basis(const std::shared_ptr<const BiorthoSystem>& basis) {
    if (!basis) throw InputError("canonical state needs a basis");
}

}  // namespace

CanonicalState::CanonicalState(std::shared_ptr<const BiorthoSystem> basis, Vector c, Vector c_bar,
                               RealVector gauge, double time)
    : basis_(std::move(basis)),
      c_(std::move(c)),
      c_bar_(std::move(c_bar)),
      gauge_(std::move(gauge)),
      time_(time) {
    require_basis(basis_);
    const auto n = basis_->dim();
    if (c_.size() != n || c_bar_.size() != n || gauge_.size() != n) {
        throw DimensionMismatch("CanonicalState: coefficient lengths must equal basis dimension " +
                                std::to_string(n));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!(gauge_(j) >= 0.0) || !std::isfinite(gauge_(j))) {
            throw InputError("CanonicalState: gauge constants must be finite and nonnegative");
        }
        if (gauge_(j) == 0.0) {
            if (c_(j) != 0.0 || c_bar_(j) != 0.0) {
                throw InputError("CanonicalState: unoccupied mode " + std::to_string(j) +
                                 " must have zero coefficients");
            }
            continue;
        }
        const double err = std::abs(c_bar_(j) * c_(j) - gauge_(j));
        if (!(err <= 1e-8 * gauge_(j))) {
            throw InputError("CanonicalState: c_bar c != |C|^2 on mode " + std::to_string(j));
        }
    }
}

CanonicalState state_from_right(std::shared_ptr<const BiorthoSystem> basis, const Vector& psi0,
                                const RealVector& gauge, const StateOptions& opts) {
    require_basis(basis);
    const auto n = basis->dim();
    if (psi0.size() != n || gauge.size() != n) {
        throw DimensionMismatch("state_from_right: psi0 and gauge must have length " +
                                std::to_string(n));
    }
    Vector c = basis->left().adjoint() * psi0;
    Vector c_bar = Vector::Zero(n);
    RealVector g = gauge;
    const double threshold = opts.occ_threshold * c.norm();
    for (Eigen::Index j = 0; j < n; ++j) {
        const bool present = std::abs(c(j)) > threshold;
        if (!present) {
            if (g(j) > 0.0) {
                throw GaugeConflict("state_from_right: gauge on mode " + std::to_string(j) +
                                    " is positive but the mode is absent from psi0");
            }
            c(j) = 0.0;
            g(j) = 0.0;
            continue;
        }
        if (!(g(j) > 0.0)) {
            throw GaugeConflict("state_from_right: mode " + std::to_string(j) +
                                " is present in psi0 but its gauge constant is zero");
        }
        c_bar(j) = g(j) / c(j);
    }
    const double total = g.sum();
    if (opts.normalize && total > 0.0) {
        g /= total;
        c_bar /= total;
    }
    return CanonicalState(std::move(basis), std::move(c), std::move(c_bar), std::move(g));
}

CanonicalState state_from_right(std::shared_ptr<const BiorthoSystem> basis, const Vector& psi0,
                                const StateOptions& opts) {
    require_basis(basis);
    if (psi0.size() != basis->dim()) {
        throw DimensionMismatch("state_from_right: psi0 has the wrong length");
    }
    const Vector c = basis->left().adjoint() * psi0;
    const double threshold = opts.occ_threshold * c.norm();
    RealVector gauge(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) gauge(j) = std::abs(c(j)) > threshold ? 1.0 : 0.0;
    return state_from_right(std::move(basis), psi0, gauge, opts);
}

CanonicalState evolve_spectral(const CanonicalState& state, double t) {
    const auto& e = state.basis().eigenvalues();
    const double hbar = state.basis().hbar();
    Vector c = state.c();
    Vector c_bar = state.c_bar();
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const cplx phase = -1i * e(j) * t / hbar;
        c(j) *= std::exp(phase);
        c_bar(j) *= std::exp(-phase);
    }
    if (!c.allFinite() || !c_bar.allFinite()) {
        throw NonFinite("evolve_spectral: coefficients overflowed at t = " +
                        std::to_string(state.time() + t));
    }
    return CanonicalState(state.basis_ptr(), std::move(c), std::move(c_bar), state.gauge(),
                          state.time() + t);
}

FieldPair to_fields(const CanonicalState& state) {
    const auto& basis = state.basis();
    return {basis.right() * state.c(), basis.left().conjugate() * state.c_bar()};
}

ModalCoefficients project(const FieldPair& fields, const BiorthoSystem& basis) {
    if (fields.psi.size() != basis.dim() || fields.phi_bar.size() != basis.dim()) {
        throw DimensionMismatch("project: field length differs from basis dimension");
    }
    return {basis.left().adjoint() * fields.psi, basis.right().transpose() * fields.phi_bar};
}

cplx total_probability(const CanonicalState& state) {
    return (state.c_bar().array() * state.c().array()).sum();
}

cplx total_probability(const FieldPair& fields) {
    if (fields.psi.size() != fields.phi_bar.size()) {
        throw DimensionMismatch("total_probability: psi and phi_bar lengths differ");
    }
    return (fields.phi_bar.array() * fields.psi.array()).sum();
}

Vector local_probability(const FieldPair& fields) {
    if (fields.psi.size() != fields.phi_bar.size()) {
        throw DimensionMismatch("local_probability: psi and phi_bar lengths differ");
    }
    return fields.phi_bar.cwiseProduct(fields.psi);
}

cplx expectation(const FieldPair& fields, const Matrix& op) {
    const auto n = fields.psi.size();
    if (fields.phi_bar.size() != n || op.rows() != n || op.cols() != n) {
        throw DimensionMismatch("expectation: operator is " + std::to_string(op.rows()) + "x" +
                                std::to_string(op.cols()) + " but fields have length " +
                                std::to_string(n));
    }
    return fields.phi_bar.transpose() * op * fields.psi;
}

cplx field_energy(const CanonicalState& state) {
    const auto& e = state.basis().eigenvalues();
    return (e.array() * state.c_bar().array() * state.c().array()).sum();
}

Trajectory evolve_ode(const FieldPair& initial, const Hamiltonian& h, TimeSpan span, double dt,
                      const OdeOptions& opts) {
    using namespace detail;
    const auto n = h.dim();
    if (initial.psi.size() != n || initial.phi_bar.size() != n) {
        throw DimensionMismatch("evolve_ode: fields must have length " + std::to_string(n));
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("evolve_ode: dt must be positive");
    if (!(span.stop >= span.start)) throw InputError("evolve_ode: t_span must be increasing");
    if (opts.sample_every == 0) throw InputError("evolve_ode: sample_every must be positive");

    Eigen::ComplexEigenSolver<Matrix> spectrum(h.matrix(), false);
    const double max_e = spectrum.eigenvalues().cwiseAbs().maxCoeff();
    if (dt * max_e / h.hbar() > opts.max_phase_step) {
        throw StepTooLarge("evolve_ode: dt * max|E| / hbar = " +
                           std::to_string(dt * max_e / h.hbar()) + " exceeds " +
                           std::to_string(opts.max_phase_step));
    }

    Trajectory traj;
    traj.hbar = h.hbar();
    try {
        traj.basis = std::make_shared<const BiorthoSystem>(diagonalize_biortho(h));
    } catch (const ExceptionalPoint&) {
    } catch (const PairingFailure&) {
    }
    XBasis xbasis;
    if (traj.basis) xbasis = refine_basis(h.matrix(), *traj.basis);

    const XMatrix hx(h.matrix());
    const xreal inv_hbar = xreal(1) / xreal(h.hbar());
    const double length = span.stop - span.start;
    const auto steps = static_cast<std::size_t>(std::ceil(length / dt - 1e-9));
    const xreal step = steps == 0 ? xreal(0) : xreal(length) / xreal(steps);

    XFields f{to_x(initial.psi), to_x(initial.phi_bar)};

    auto record = [&](std::size_t k) {
        TrajectorySample s;
        s.t = span.start + static_cast<double>(xreal(k) * step);
        s.fields = {to_double(f.psi), to_double(f.phi_bar)};
        if (!s.fields.psi.allFinite() || !s.fields.phi_bar.allFinite()) {
            throw NonFinite("evolve_ode: fields overflowed double range at t = " +
                            std::to_string(s.t));
        }
        s.probability = bilinear(f.phi_bar, f.psi).to_double();
        s.energy = bilinear(f.phi_bar, mat_vec(hx, f.psi)).to_double();
        xreal norm = 0;
        for (const auto& z : f.psi) norm += norm2(z);
        s.norm2 = static_cast<double>(norm);
        if (traj.basis) {
            s.c.resize(n);
            s.c_bar.resize(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto col = static_cast<std::size_t>(j);
                s.c(j) = inner(xbasis.left.col(col), f.psi).to_double();
                s.c_bar(j) = bilinear(f.phi_bar, xbasis.right.col(col)).to_double();
            }
        }
        traj.samples.push_back(std::move(s));
    };

    record(0);
    for (std::size_t k = 1; k <= steps; ++k) {
        rk4_step(f, hx, hx, hx, step, inv_hbar);
        if (k % opts.sample_every == 0 || k == steps) record(k);
    }
    return traj;
}

}  // namespace nhqm
