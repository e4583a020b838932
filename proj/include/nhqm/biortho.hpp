#pragma once

#include "nhqm/types.hpp"

#include <cstddef>

namespace nhqm {

// Dense square complex matrix with the reduced Planck constant it is measured
// against. Entries must be finite.
class Hamiltonian {
  public:
    explicit Hamiltonian(Matrix elements, double hbar = 1.0);

    Eigen::Index dim() const { return elements_.rows(); }
    const Matrix& matrix() const { return elements_; }
    double hbar() const { return hbar_; }

    // max |h_jk - conj(h_kj)| < tol
    bool is_hermitian(double tol = 1e-12) const;

  private:
    Matrix elements_;
    double hbar_;
};

struct BiorthoOptions {
    // Pre-rescaling overlap |<b|a>|/(|a||b|) below this is treated as defective.
    double tol_ep = 1e-8;
    // Eigenvalues closer than this (relative to max(1, max|E|)) form a
    // degenerate cluster that is biorthogonalized as a block.
    double degeneracy_tol = 1e-10;
    // Right/left eigenvalue matching window, relative to max(1, max|E|).
    double pairing_tol = 1e-6;
};

// Right eigenvectors a_j (columns of right()) and left eigenvectors b_j
// (columns of left()) with <b_i|a_j> = delta_ij. Gauge: |a_j| = 1 and the
// largest-modulus component of a_j is real positive; all rescaling sits in b_j.
// Eigenpairs are ordered by ascending real part, then imaginary part.
class BiorthoSystem {
  public:
    BiorthoSystem(Vector eigenvalues, Matrix right, Matrix left,
                  double condition_estimate, double hbar = 1.0);

    Eigen::Index dim() const { return eigenvalues_.size(); }
    const Vector& eigenvalues() const { return eigenvalues_; }
    cplx eigenvalue(Eigen::Index j) const { return eigenvalues_(j); }
    const Matrix& right() const { return right_; }
    const Matrix& left() const { return left_; }
    auto right(Eigen::Index j) const { return right_.col(j); }
    auto left(Eigen::Index j) const { return left_.col(j); }
    // Worst 1/|<b_j|a_j>| over modes before the pair was rescaled.
    double condition_estimate() const { return condition_estimate_; }
    double hbar() const { return hbar_; }

    // sum_j E_j |a_j><b_j|
    Matrix reconstruct() const;

  private:
    Vector eigenvalues_;
    Matrix right_;
    Matrix left_;
    double condition_estimate_;
    double hbar_;
};

// Throws ExceptionalPoint for defective / near-defective input and
// PairingFailure when the spectra of h and h^dagger cannot be matched.
BiorthoSystem diagonalize_biortho(const Hamiltonian& h, const BiorthoOptions& opts = {});

// max-norm of sum_j |a_j><b_j| - I
double verify_completeness(const BiorthoSystem& sys);

// max_{ij} |<b_i|a_j> - delta_ij|
double biorthonormality_error(const BiorthoSystem& sys);

// max over j of |h a_j - E_j a_j| and |b_j^dagger h - E_j b_j^dagger|
double eigen_residual(const Hamiltonian& h, const BiorthoSystem& sys);

// True iff every a_j equals b_j up to a unit phase within tol.
bool hermitian_limit_check(const BiorthoSystem& sys, double tol = 1e-9);

}  // namespace nhqm
