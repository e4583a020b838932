#pragma once

#include "extended.hpp"

namespace nhqm::detail {

struct XFields {
    XVector psi;
    XVector phi_bar;
};

inline XVector axpy(const XVector& x, xreal s, const XVector& y) {
    XVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + s * y[i];
    return out;
}

// dpsi/dt = -(i/hbar) h psi,  dphi_bar/dt = +(i/hbar) phi_bar h
inline XFields rates(const XMatrix& h, const XFields& f, xreal inv_hbar) {
    XFields d{mat_vec(h, f.psi), row_times(f.phi_bar, h)};
    for (auto& z : d.psi) z = {inv_hbar * z.im, -inv_hbar * z.re};
    for (auto& z : d.phi_bar) z = {-inv_hbar * z.im, inv_hbar * z.re};
    return d;
}

// One classical RK4 step; h_start, h_mid, h_end are h at t, t + dt/2, t + dt.
inline void rk4_step(XFields& f, const XMatrix& h_start, const XMatrix& h_mid,
                     const XMatrix& h_end, xreal dt, xreal inv_hbar) {
    const xreal half = dt / 2;
    const XFields k1 = rates(h_start, f, inv_hbar);
    const XFields k2 =
        rates(h_mid, {axpy(f.psi, half, k1.psi), axpy(f.phi_bar, half, k1.phi_bar)}, inv_hbar);
    const XFields k3 =
        rates(h_mid, {axpy(f.psi, half, k2.psi), axpy(f.phi_bar, half, k2.phi_bar)}, inv_hbar);
    const XFields k4 =
        rates(h_end, {axpy(f.psi, dt, k3.psi), axpy(f.phi_bar, dt, k3.phi_bar)}, inv_hbar);
    const xreal w = dt / 6;
    for (std::size_t i = 0; i < f.psi.size(); ++i) {
        f.psi[i] += w * (k1.psi[i] + xreal(2) * k2.psi[i] + xreal(2) * k3.psi[i] + k4.psi[i]);
        f.phi_bar[i] +=
            w * (k1.phi_bar[i] + xreal(2) * k2.phi_bar[i] + xreal(2) * k3.phi_bar[i] + k4.phi_bar[i]);
    }
}

}  // namespace nhqm::detail
