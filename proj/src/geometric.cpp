#include "nhqm/geometric.hpp"

#include "nhqm/errors.hpp"
#include "rk4.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace nhqm {

namespace {

using namespace std::complex_literals;
constexpr double pi = std::numbers::pi;
constexpr double tracking_fraction = 0.4;

// Smallest distance from e(j) to any other eigenvalue.
double local_gap(const Vector& e, Eigen::Index j) {
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < e.size(); ++k)
        if (k != j) gap = std::min(gap, std::abs(e(k) - e(j)));
    return gap;
}

// Index in `e` continuing an eigenvalue that sat at e_prev with local gap gap_prev.
Eigen::Index follow(const Vector& e, cplx e_prev, double gap_prev, const char* where) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = d1;
    Eigen::Index best = 0;
    for (Eigen::Index k = 0; k < e.size(); ++k) {
        const double d = std::abs(e(k) - e_prev);
        if (d < d1) {
            d2 = d1;
            d1 = d;
            best = k;
        } else if (d < d2) {
            d2 = d;
        }
    }
    const double window = tracking_fraction * gap_prev;
    if (!(d1 < window) || !(d2 >= gap_prev - window)) {
        throw ModeTrackingLost(std::string(where) + ": eigenvalue moved by " + std::to_string(d1) +
                               " against a local gap of " + std::to_string(gap_prev));
    }
    return best;
}

void check_mode(Eigen::Index j, Eigen::Index n) {
    if (j < 0 || j >= n) {
        throw InputError("mode index " + std::to_string(j) + " outside [0, " + std::to_string(n) +
                         ")");
    }
}

struct Pair {
    Vector a;
    Vector b;
};

// Eigenpair at a displaced point with the phase of component m made real positive,
// which is a smooth gauge near the reference point.
Pair aligned_pair(const ParametricFamily& family, const RealVector& r, cplx e_ref,
                  double gap_ref, Eigen::Index m) {
    const auto sys = diagonalize_biortho(family.at(r));
    const auto k = follow(sys.eigenvalues(), e_ref, gap_ref, "stencil");
    Pair p{sys.right(k), sys.left(k)};
    const double mod = std::abs(p.a(m));
    if (mod == 0.0) throw ModeTrackingLost("stencil: reference component vanished");
    const cplx u = std::conj(p.a(m)) / mod;
    p.a *= u;
    p.b *= u;
    return p;
}

struct Stencil {
    Pair center;
    std::vector<Pair> plus;
    std::vector<Pair> minus;
    double delta = 0.0;
};

Stencil stencil(const ParametricFamily& family, const RealVector& r, Eigen::Index j,
                double delta) {
    if (r.size() != family.n_params) {
        throw DimensionError("parameter point has " + std::to_string(r.size()) +
                             " components, family '" + family.name + "' takes " +
                             std::to_string(family.n_params));
    }
    const auto sys = diagonalize_biortho(family.at(r));
    check_mode(j, sys.dim());
    Stencil s;
    s.delta = delta > 0.0 ? delta : default_delta(r);
    s.center = {sys.right(j), sys.left(j)};
    // Same reference component as the eigensolver gauge: largest modulus,
    // lowest index among near-ties.
    const double peak = s.center.a.cwiseAbs().maxCoeff();
    Eigen::Index m = 0;
    while (std::abs(s.center.a(m)) < (1.0 - 1e-12) * peak) ++m;
    const cplx u = std::conj(s.center.a(m)) / std::abs(s.center.a(m));
    s.center.a *= u;
    s.center.b *= u;
    const cplx e = sys.eigenvalue(j);
    const double gap = local_gap(sys.eigenvalues(), j);
    for (Eigen::Index mu = 0; mu < r.size(); ++mu) {
        RealVector rp = r, rm = r;
        rp(mu) += s.delta;
        rm(mu) -= s.delta;
        s.plus.push_back(aligned_pair(family, rp, e, gap, m));
        s.minus.push_back(aligned_pair(family, rm, e, gap, m));
    }
    return s;
}

double wrap_angle(double x) { return std::remainder(x, 2.0 * pi); }

}  // namespace

Hamiltonian ParametricFamily::at(const RealVector& r) const {
    if (!build) throw InputError("parametric family '" + name + "' has no builder");
    return Hamiltonian(build(r), hbar);
}

ParameterPath::ParameterPath(ParametricFamily family, std::vector<RealVector> samples, bool closed)
    : family_(std::move(family)), samples_(std::move(samples)), closed_(closed) {
    if (samples_.size() < 2) throw InputError("parameter path needs at least two samples");
    const auto d = samples_.front().size();
    if (d < 1 || d > 3 || d != family_.n_params) {
        throw DimensionError("parameter path samples must have " +
                             std::to_string(family_.n_params) + " components (at most 3)");
    }
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        if (samples_[k].size() != d) {
            throw DimensionError("parameter sample " + std::to_string(k) + " has " +
                                 std::to_string(samples_[k].size()) + " components");
        }
        if (!samples_[k].allFinite()) throw InputError("parameter samples must be finite");
        if (k > 0 && samples_[k] == samples_[k - 1]) {
            throw InputError("parameter samples " + std::to_string(k - 1) + " and " +
                             std::to_string(k) + " coincide");
        }
    }
    if (closed_) {
        const double gap = (samples_.back() - samples_.front()).cwiseAbs().maxCoeff();
        if (gap > 1e-12) {
            throw NotClosed("closed path ends " + std::to_string(gap) + " away from its start");
        }
        samples_.back() = samples_.front();
        if (samples_.size() < 3) throw InputError("closed path needs at least two distinct points");
    }
}

RealVector ParameterPath::at(double u) const {
    const double n = static_cast<double>(segments());
    u = std::clamp(u, 0.0, n);
    const auto k = std::min(static_cast<std::size_t>(u), segments() - 1);
    const double frac = u - static_cast<double>(k);
    if (frac == 0.0) return samples_[k];
    if (frac == 1.0) return samples_[k + 1];
    return (1.0 - frac) * samples_[k] + frac * samples_[k + 1];
}

ParameterPath circle_path(ParametricFamily family, const RealVector& center, double radius,
                          std::size_t points, int axis0, int axis1) {
    if (points < 3) throw InputError("circle_path needs at least 3 points");
    if (axis0 == axis1 || axis0 < 0 || axis1 < 0 || axis0 >= center.size() ||
        axis1 >= center.size()) {
        throw DimensionError("circle_path: invalid plane axes");
    }
    std::vector<RealVector> samples;
    samples.reserve(points + 1);
    for (std::size_t k = 0; k < points; ++k) {
        const double phi = 2.0 * pi * static_cast<double>(k) / static_cast<double>(points);
        RealVector r = center;
        r(axis0) += radius * std::cos(phi);
        r(axis1) += radius * std::sin(phi);
        samples.push_back(std::move(r));
    }
    samples.push_back(samples.front());
    return ParameterPath(std::move(family), std::move(samples), true);
}

double default_delta(const RealVector& r) {
    const double scale = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    return 1e-5 * std::max(1.0, scale);
}

Vector berry_connection_right(const ParametricFamily& family, const RealVector& r,
                              Eigen::Index j, double delta) {
    const auto s = stencil(family, r, j, delta);
    const auto& c = s.center;
    Vector out(r.size());
    for (Eigen::Index mu = 0; mu < r.size(); ++mu) {
        const auto& p = s.plus[mu];
        const auto& m = s.minus[mu];
        const cplx t = c.b.dot(p.a - m.a) - (p.b - m.b).dot(c.a);
        out(mu) = 1i * t / (4.0 * s.delta);
    }
    return out;
}

Vector berry_connection_left(const ParametricFamily& family, const RealVector& r,
                             Eigen::Index j, double delta) {
    const auto s = stencil(family, r, j, delta);
    const auto& c = s.center;
    Vector out(r.size());
    for (Eigen::Index mu = 0; mu < r.size(); ++mu) {
        const auto& p = s.plus[mu];
        const auto& m = s.minus[mu];
        const cplx t = c.a.dot(p.b - m.b) - (p.a - m.a).dot(c.b);
        out(mu) = 1i * t / (4.0 * s.delta);
    }
    return out;
}

Vector berry_curvature(const ParametricFamily& family, const RealVector& r, Eigen::Index j,
                       double delta) {
    if (r.size() != 3) {
        throw DimensionError("berry_curvature needs a 3-component parameter point, got " +
                             std::to_string(r.size()));
    }
    const auto s = stencil(family, r, j, delta);
    std::vector<Vector> da, db;
    for (int mu = 0; mu < 3; ++mu) {
        da.push_back((s.plus[mu].a - s.minus[mu].a) / (2.0 * s.delta));
        db.push_back((s.plus[mu].b - s.minus[mu].b) / (2.0 * s.delta));
    }
    Vector out(3);
    for (int mu = 0; mu < 3; ++mu) {
        const int y = (mu + 1) % 3;
        const int z = (mu + 2) % 3;
        out(mu) = 1i * (db[y].dot(da[z]) - db[z].dot(da[y]));
    }
    return out;
}

LoopPhases loop_phases(const std::vector<Vector>& right, const std::vector<Vector>& left) {
    const std::size_t n = right.size();
    if (n < 2 || left.size() != n) {
        throw InputError("loop_phases needs at least two points with matching left vectors");
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (right[k].size() != right[0].size() || left[k].size() != right[0].size()) {
            throw DimensionMismatch("loop_phases: eigenvector lengths differ");
        }
    }
    LoopPhases out;
    out.cumulative.reserve(n);
    Vector a = right[0], b = left[0];
    cplx sum_r = 0.0, sum_l = 0.0;
    cplx closing = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t next = (k + 1) % n;
        Vector an = right[next], bn = left[next];
        // Transport the next pair so that <b_k|a_{k+1}> is real positive.
        const cplx ov = b.dot(an);
        if (ov == 0.0) throw BranchJump("loop step " + std::to_string(k) + " has zero overlap");
        const cplx u = std::conj(ov) / std::abs(ov);
        an *= u;
        bn *= u;
        const cplx ov1 = b.dot(an);
        const cplx ov2 = bn.dot(a);
        if (std::abs(std::arg(ov1 * ov2)) > pi / 2) {
            throw BranchJump("loop step " + std::to_string(k) + " overlap phase " +
                             std::to_string(std::arg(ov1 * ov2)) + " exceeds pi/2");
        }
        sum_r += 0.5i * (std::log(ov1) - std::log(ov2));
        sum_l += 0.5i * (std::log(a.dot(bn)) - std::log(an.dot(b)));
        if (next == 0) closing = left[0].dot(an);
        out.cumulative.push_back(sum_r);
        a = std::move(an);
        b = std::move(bn);
    }
    // The transported endpoint is closing * a_0.
    const double holonomy = std::arg(closing);
    out.right = sum_r + holonomy;
    out.left = sum_l + holonomy;
    out.cumulative.back() = out.right;
    return out;
}

PhaseReport geometric_phase_loop(const ParameterPath& path, Eigen::Index j,
                                 std::vector<cplx>* cumulative) {
    if (!path.closed()) throw InputError("geometric_phase_loop needs a closed path");
    const auto& samples = path.samples();
    const std::size_t n = path.segments();
    std::vector<Vector> right, left;
    right.reserve(n);
    left.reserve(n);
    cplx e_prev = 0.0;
    double gap_prev = 0.0;
    Eigen::Index first = j;
    for (std::size_t k = 0; k <= n; ++k) {
        if (k == n) {
            const auto sys = diagonalize_biortho(path.family().at(samples[0]));
            if (follow(sys.eigenvalues(), e_prev, gap_prev, "loop closure") != first) {
                throw ModeTrackingLost("mode " + std::to_string(j) +
                                       " does not return to itself around the loop");
            }
            break;
        }
        const auto sys = diagonalize_biortho(path.family().at(samples[k]));
        Eigen::Index idx = j;
        if (k == 0) {
            check_mode(j, sys.dim());
        } else {
            idx = follow(sys.eigenvalues(), e_prev, gap_prev, "loop");
        }
        right.push_back(sys.right(idx));
        left.push_back(sys.left(idx));
        e_prev = sys.eigenvalue(idx);
        gap_prev = local_gap(sys.eigenvalues(), idx);
    }
    auto phases = loop_phases(right, left);
    PhaseReport report;
    report.mode_index = j;
    report.geometric_phase_right = phases.right;
    report.geometric_phase_left = phases.left;
    if (cumulative) *cumulative = std::move(phases.cumulative);
    return report;
}

PhaseReport adiabatic_evolve(const ParameterPath& path, Eigen::Index j, double total_time,
                             double dt, const AdiabaticOptions& opts,
                             std::vector<AdiabaticSample>* trace) {
    using namespace detail;
    if (!path.closed()) throw InputError("adiabatic_evolve needs a closed path");
    if (!(total_time > 0.0) || !std::isfinite(total_time)) {
        throw InputError("adiabatic_evolve: total_time must be positive");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("adiabatic_evolve: dt must be positive");

    const auto& family = path.family();
    const double hbar = family.hbar;
    const auto& samples = path.samples();
    const std::size_t n_seg = path.segments();

    const auto sys0 = diagonalize_biortho(family.at(samples[0]));
    check_mode(j, sys0.dim());

    // Spectral scan along the samples: smallest gap of the followed mode,
    // fastest change of h and largest |E|.
    double min_gap = local_gap(sys0.eigenvalues(), j);
    double max_e = sys0.eigenvalues().cwiseAbs().maxCoeff();
    double max_dh = 0.0;
    {
        cplx e_prev = sys0.eigenvalue(j);
        double gap_prev = min_gap;
        Matrix h_prev = family.at(samples[0]).matrix();
        for (std::size_t k = 1; k <= n_seg; ++k) {
            const Matrix h = family.at(samples[k]).matrix();
            const Eigen::ComplexEigenSolver<Matrix> es(h, false);
            const auto idx = follow(es.eigenvalues(), e_prev, gap_prev, "adiabatic path");
            e_prev = es.eigenvalues()(idx);
            gap_prev = local_gap(es.eigenvalues(), idx);
            min_gap = std::min(min_gap, gap_prev);
            max_e = std::max(max_e, es.eigenvalues().cwiseAbs().maxCoeff());
            max_dh = std::max(max_dh, Eigen::JacobiSVD<Matrix>(h - h_prev).singularValues()(0));
            h_prev = h;
        }
    }
    const bool smooth = opts.schedule == Schedule::smooth;
    if (smooth && !(opts.ramp_fraction > 0.0 && opts.ramp_fraction <= 0.5)) {
        throw InputError("adiabatic_evolve: ramp_fraction must lie in (0, 0.5]");
    }
    const double ramp = opts.ramp_fraction * total_time;
    const double cruise = smooth ? 1.0 / (total_time - ramp) : 1.0 / total_time;
    const double peak_speed = cruise * static_cast<double>(n_seg);
    const double ratio = std::isinf(min_gap) ? 0.0 : hbar * max_dh * peak_speed / (min_gap * min_gap);
    if (ratio > opts.max_ratio) {
        throw AdiabaticityViolated("adiabaticity ratio " + std::to_string(ratio) + " exceeds " +
                                   std::to_string(opts.max_ratio) +
                                   "; increase total_time or refine the path");
    }
    if (dt * max_e / hbar > opts.max_phase_step) {
        throw StepTooLarge("adiabatic_evolve: dt * max|E| / hbar = " +
                           std::to_string(dt * max_e / hbar) + " exceeds " +
                           std::to_string(opts.max_phase_step));
    }

    // Fraction of the path covered by time t.
    auto progress = [&](double t) {
        if (!smooth) return t / total_time;
        auto ramp_in = [&](double x) {
            return cruise * (0.5 * x - ramp / (2.0 * pi) * std::sin(pi * x / ramp));
        };
        if (t <= ramp) return ramp_in(t);
        if (t >= total_time - ramp) return 1.0 - ramp_in(total_time - t);
        return cruise * (0.5 * ramp + (t - ramp));
    };
    auto position = [&](double t) { return path.at(progress(t) * static_cast<double>(n_seg)); };

    const auto steps = static_cast<std::size_t>(std::ceil(total_time / dt - 1e-9));
    const double step = total_time / static_cast<double>(steps);
    const xreal inv_hbar = xreal(1) / xreal(hbar);

    XFields f{to_x(sys0.right(j)), to_x(Vector(sys0.left(j).conjugate()))};
    cplx e_cur = sys0.eigenvalue(j);
    double gap_cur = local_gap(sys0.eigenvalues(), j);
    cplx integral_e = 0.0;

    auto node = [&](double t, XMatrix& hx) {
        const Matrix h = family.at(position(t)).matrix();
        hx = XMatrix(h);
        const Eigen::ComplexEigenSolver<Matrix> es(h, false);
        const auto idx = follow(es.eigenvalues(), e_cur, gap_cur, "adiabatic evolution");
        e_cur = es.eigenvalues()(idx);
        gap_cur = local_gap(es.eigenvalues(), idx);
        return e_cur;
    };

    auto record = [&](double t, const BiorthoSystem& sys, Eigen::Index idx) {
        const XVector a = to_x(sys.right(idx));
        const XVector b = to_x(sys.left(idx));
        trace->push_back({t, inner(b, f.psi).to_double(), bilinear(f.phi_bar, a).to_double(),
                          sys.eigenvalue(idx)});
    };
    if (trace) {
        trace->clear();
        record(0.0, sys0, j);
    }

    XMatrix h_start(family.at(samples[0]).matrix()), h_mid, h_end;
    cplx e_start = e_cur;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = step * static_cast<double>(k);
        const cplx e_mid = node(t0 + 0.5 * step, h_mid);
        const cplx e_end = node(t0 + step, h_end);
        rk4_step(f, h_start, h_mid, h_end, xreal(step), inv_hbar);
        integral_e += (e_start + 4.0 * e_mid + e_end) * (step / 6.0);
        h_start = std::move(h_end);
        e_start = e_end;

        const bool last = k + 1 == steps;
        if (trace && !last && opts.record_every > 0 && (k + 1) % opts.record_every == 0) {
            const auto sys = diagonalize_biortho(family.at(position(t0 + step)));
            record(t0 + step, sys,
                   follow(sys.eigenvalues(), e_cur, gap_cur, "adiabatic evolution"));
        }
    }

    const XVector a0 = to_x(sys0.right(j));
    const XVector b0 = to_x(sys0.left(j));
    const xcomplex cx = inner(b0, f.psi);
    const xcomplex cbx = bilinear(f.phi_bar, a0);
    const cplx c = cx.to_double();
    const cplx c_bar = cbx.to_double();
    if (!std::isfinite(std::abs(c)) || !std::isfinite(std::abs(c_bar)) || c == 0.0 ||
        c_bar == 0.0) {
        throw NonFinite("adiabatic_evolve: modal coefficient left the double range");
    }
    if (trace) trace->push_back({total_time, c, c_bar, sys0.eigenvalue(j)});

    cplx beta = -1i * std::log(c) + integral_e / hbar;
    cplx beta_bar = -1i * std::log(std::conj(c_bar)) + std::conj(integral_e) / hbar;
    beta = {wrap_angle(beta.real()), beta.imag()};
    beta_bar = {wrap_angle(beta_bar.real()), beta_bar.imag()};

    PhaseReport report;
    report.mode_index = j;
    report.dynamical_phase = -integral_e / hbar;
    report.geometric_phase_right = beta;
    report.geometric_phase_left = beta_bar;
    report.loop_occupation = (cbx * cx).to_double();
    report.adiabaticity_ratio = ratio;
    return report;
}

namespace {

void check_samples(const std::vector<FieldPair>& samples) {
    if (samples.size() < 2) throw InputError("action_variables needs at least two samples");
    const auto n = samples.front().psi.size();
    for (const auto& s : samples) {
        if (s.psi.size() != n || s.phi_bar.size() != n) {
            throw DimensionMismatch("action_variables: sample lengths differ");
        }
    }
}

void check_closed(const Vector& psi0, const Vector& psi1, const Vector& phi0, const Vector& phi1) {
    const double scale = std::max({psi0.norm(), psi1.norm(), phi0.norm(), phi1.norm()});
    const double gap = std::max((psi1 - psi0).norm(), (phi1 - phi0).norm());
    if (gap > 1e-6 * scale) {
        throw NotClosed("action_variables: trajectory endpoints differ by " + std::to_string(gap));
    }
}

cplx contour(const std::vector<FieldPair>& samples, Eigen::Index k, double hbar) {
    cplx sum = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const auto& p = samples[i];
        const auto& q = samples[i + 1];
        sum += 0.5 * (p.phi_bar(k) + q.phi_bar(k)) * (q.psi(k) - p.psi(k));
    }
    return 1i * hbar * sum / (2.0 * pi);
}

}  // namespace

std::vector<cplx> action_variables(const std::vector<FieldPair>& samples, double hbar) {
    check_samples(samples);
    const auto& a = samples.front();
    const auto& b = samples.back();
    check_closed(a.psi, b.psi, a.phi_bar, b.phi_bar);
    std::vector<cplx> out;
    for (Eigen::Index k = 0; k < a.psi.size(); ++k) out.push_back(contour(samples, k, hbar));
    return out;
}

cplx action_variable(const std::vector<FieldPair>& samples, Eigen::Index k, double hbar) {
    check_samples(samples);
    if (k < 0 || k >= samples.front().psi.size()) throw InputError("action_variable: bad component");
    const auto& a = samples.front();
    const auto& b = samples.back();
    check_closed(a.psi.segment(k, 1), b.psi.segment(k, 1), a.phi_bar.segment(k, 1),
                 b.phi_bar.segment(k, 1));
    return contour(samples, k, hbar);
}

std::vector<FieldPair> modal_samples(const Trajectory& traj, std::size_t first, std::size_t last) {
    if (!traj.basis) throw InputError("trajectory has no eigenbasis (exceptional point)");
    if (traj.samples.empty()) return {};
    last = std::min(last, traj.samples.size() - 1);
    std::vector<FieldPair> out;
    for (std::size_t i = first; i <= last; ++i) {
        out.push_back({traj.samples[i].c, traj.samples[i].c_bar});
    }
    return out;
}

}  // namespace nhqm
