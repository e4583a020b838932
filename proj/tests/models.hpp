#pragma once

// Closed-form models used as oracles by the test suites. Nothing here calls
// into the eigensolver.

#include "nhqm/types.hpp"

#include <cmath>
#include <complex>
#include <random>

namespace nhqm::test {

using namespace std::complex_literals;

// [[i g, kx - i ky], [kx + i ky, -i g]]
inline Matrix pt2x2(double kappa, double gamma, double kappa_y = 0.0) {
    Matrix h(2, 2);
    h << 1i * gamma, cplx(kappa, -kappa_y), cplx(kappa, kappa_y), -1i * gamma;
    return h;
}

// +sqrt(kx^2 + ky^2 - g^2) on the principal branch
inline cplx pt2x2_energy(double kappa, double gamma, double kappa_y = 0.0) {
    return std::sqrt(cplx(kappa * kappa + kappa_y * kappa_y - gamma * gamma, 0.0));
}

// Unnormalized right eigenvector for eigenvalue e.
inline Vector pt2x2_right(double kappa, double gamma, double kappa_y, cplx e) {
    Vector v(2);
    v << cplx(kappa, -kappa_y), e - 1i * gamma;
    return v;
}

// Unnormalized left eigenvector b (b^dagger h = e b^dagger) for eigenvalue e.
inline Vector pt2x2_left(double kappa, double gamma, double kappa_y, cplx e) {
    Vector w(2);
    w << cplx(kappa, kappa_y), e - 1i * gamma;
    return w.conjugate();
}

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0, -1i, 1i, 0;
    return m;
}
inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

// R . sigma
inline Matrix spin_half(double x, double y, double z) {
    return x * pauli_x() + y * pauli_y() + z * pauli_z();
}

inline Matrix random_complex(Eigen::Index n, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
    return v;
}

}  // namespace nhqm::test
