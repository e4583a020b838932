#include "nhqm/biortho.hpp"

#include "nhqm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace nhqm {

Hamiltonian::Hamiltonian(Matrix elements, double hbar)
    : elements_(std::move(elements)), hbar_(hbar) {
    if (elements_.rows() == 0 || elements_.rows() != elements_.cols()) {
        throw DimensionError("Hamiltonian: matrix must be square and non-empty, got " +
                             std::to_string(elements_.rows()) + "x" +
                             std::to_string(elements_.cols()));
    }
    if (!elements_.allFinite()) {
        throw InputError("Hamiltonian: matrix has non-finite entries");
    }
    if (!(hbar_ > 0.0) || !std::isfinite(hbar_)) {
        throw InputError("Hamiltonian: hbar must be positive and finite");
    }
}

bool Hamiltonian::is_hermitian(double tol) const {
    return max_abs(elements_ - elements_.adjoint()) < tol;
}

BiorthoSystem::BiorthoSystem(Vector eigenvalues, Matrix right, Matrix left,
                             double condition_estimate, double hbar)
    : eigenvalues_(std::move(eigenvalues)),
      right_(std::move(right)),
      left_(std::move(left)),
      condition_estimate_(condition_estimate),
      hbar_(hbar) {
    const auto n = eigenvalues_.size();
    if (right_.rows() != n || right_.cols() != n || left_.rows() != n || left_.cols() != n) {
        throw DimensionMismatch("BiorthoSystem: eigenvector blocks must be " +
                                std::to_string(n) + "x" + std::to_string(n));
    }
}

Matrix BiorthoSystem::reconstruct() const {
    return right_ * eigenvalues_.asDiagonal() * left_.adjoint();
}

namespace {

// Single-linkage clustering of indices whose values lie within tol.
std::vector<std::vector<Eigen::Index>> cluster(const Vector& values, double tol) {
    const auto n = values.size();
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
    auto find = [&](Eigen::Index i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (std::abs(values(i) - values(j)) < tol) {
                parent[find(i)] = find(j);
            }
        }
    }
    std::vector<std::vector<Eigen::Index>> groups;
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto root = find(i);
        if (slot[root] < 0) {
            slot[root] = static_cast<Eigen::Index>(groups.size());
            groups.emplace_back();
        }
        groups[slot[root]].push_back(i);
    }
    return groups;
}

cplx mean_of(const Vector& values, const std::vector<Eigen::Index>& idx) {
    cplx s = 0.0;
    for (auto i : idx) s += values(i);
    return s / static_cast<double>(idx.size());
}

// Unit norm, largest-modulus component real positive. Ties within a relative
// 1e-12 go to the lowest index so that symmetric vectors are phased the same
// way on every platform.
void canonicalize_right(Eigen::Ref<Vector> a) {
    a /= a.norm();
    const double peak = a.cwiseAbs().maxCoeff();
    Eigen::Index ref = 0;
    while (std::abs(a(ref)) < peak * (1.0 - 1e-12)) ++ref;
    a *= std::conj(a(ref)) / std::abs(a(ref));
}

Matrix orthonormal_basis(const Matrix& block) {
    Eigen::HouseholderQR<Matrix> qr(block);
    return qr.householderQ() * Matrix::Identity(block.rows(), block.cols());
}

double smallest_singular_value(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

struct Block {
    std::vector<Eigen::Index> right_idx;
    std::vector<Eigen::Index> left_idx;
};

}  // namespace

BiorthoSystem diagonalize_biortho(const Hamiltonian& h, const BiorthoOptions& opts) {
    const Matrix& m = h.matrix();
    const auto n = h.dim();

    Eigen::ComplexEigenSolver<Matrix> right_solver(m, true);
    Eigen::ComplexEigenSolver<Matrix> left_solver(m.adjoint(), true);
    if (right_solver.info() != Eigen::Success || left_solver.info() != Eigen::Success) {
        throw NonFinite("diagonalize_biortho: eigensolver did not converge");
    }
    const Vector& e_right = right_solver.eigenvalues();
    const Vector e_left = left_solver.eigenvalues().conjugate();

    const double scale = std::max(1.0, e_right.cwiseAbs().maxCoeff());
    const double deg_tol = opts.degeneracy_tol * scale;
    const double pair_tol = opts.pairing_tol * scale;

    // Right eigenvalues grouped into degenerate clusters; each left eigenvalue
    // (conjugated) is assigned to the nearest cluster.
    auto clusters = cluster(e_right, deg_tol);
    std::vector<Block> blocks(clusters.size());
    std::vector<cplx> centers(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        blocks[c].right_idx = clusters[c];
        centers[c] = mean_of(e_right, clusters[c]);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        std::size_t best = 0;
        double d1 = std::numeric_limits<double>::infinity();
        double d2 = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double d = std::abs(e_left(k) - centers[c]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                best = c;
            } else if (d < d2) {
                d2 = d;
            }
        }
        if (d1 > pair_tol) {
            throw PairingFailure("diagonalize_biortho: adjoint eigenvalue " + std::to_string(k) +
                                 " has no right partner within tolerance");
        }
        if (std::isfinite(d2) && d1 > 0.25 * d2 && d1 > deg_tol) {
            throw PairingFailure("diagonalize_biortho: ambiguous right/left eigenvalue matching");
        }
        blocks[best].left_idx.push_back(k);
    }

    Vector values(n);
    Matrix right(n, n);
    Matrix left(n, n);
    double worst_overlap = 1.0;
    Eigen::Index col = 0;

    for (const auto& blk : blocks) {
        const auto size = static_cast<Eigen::Index>(blk.right_idx.size());
        if (static_cast<Eigen::Index>(blk.left_idx.size()) != size) {
            throw PairingFailure("diagonalize_biortho: right/left multiplicities differ near E = " +
                                 std::to_string(e_right(blk.right_idx.front()).real()) + " + " +
                                 std::to_string(e_right(blk.right_idx.front()).imag()) + "i");
        }

        Matrix a(n, size);
        Matrix b(n, size);
        for (Eigen::Index i = 0; i < size; ++i) {
            a.col(i) = right_solver.eigenvectors().col(blk.right_idx[i]);
            b.col(i) = left_solver.eigenvectors().col(blk.left_idx[i]);
        }

        double overlap = 0.0;
        if (size == 1) {
            overlap = std::abs(b.col(0).dot(a.col(0))) / (a.col(0).norm() * b.col(0).norm());
        } else {
            // The eigensolver may hand back nearly parallel vectors for an exactly
            // degenerate eigenvalue. Fall back to the null spaces of h - E when so.
            Matrix qa = orthonormal_basis(a);
            Matrix qb = orthonormal_basis(b);
            Matrix a_unit = a.colwise().normalized();
            Matrix b_unit = b.colwise().normalized();
            const bool well_spread = smallest_singular_value(a_unit) > 1e-3 &&
                                     smallest_singular_value(b_unit) > 1e-3;
            if (!well_spread) {
                const cplx center = mean_of(e_right, blk.right_idx);
                Eigen::JacobiSVD<Matrix> svd(m - center * Matrix::Identity(n, n),
                                             Eigen::ComputeFullU | Eigen::ComputeFullV);
                const auto& sv = svd.singularValues();
                if (sv(n - size) > 1e-9 * scale) {
                    throw ExceptionalPoint(
                        "diagonalize_biortho: degenerate eigenvalue has fewer independent "
                        "eigenvectors than its multiplicity (defective matrix)");
                }
                a = svd.matrixV().rightCols(size);
                b = svd.matrixU().rightCols(size);
                qa = a;
                qb = b;
            }
            overlap = smallest_singular_value(qb.adjoint() * qa);
        }
        worst_overlap = std::min(worst_overlap, overlap);
        if (overlap < opts.tol_ep) {
            throw ExceptionalPoint("diagonalize_biortho: left/right overlap " +
                                   std::to_string(overlap) + " below tolerance " +
                                   std::to_string(opts.tol_ep) +
                                   " (matrix is at or near an exceptional point)");
        }

        for (Eigen::Index i = 0; i < size; ++i) canonicalize_right(a.col(i));
        // B <- B S^{-dagger} with S = B^dagger A gives B^dagger A = I.
        const Matrix s = b.adjoint() * a;
        b = b * s.inverse().adjoint();

        for (Eigen::Index i = 0; i < size; ++i) {
            values(col) = e_right(blk.right_idx[i]);
            right.col(col) = a.col(i);
            left.col(col) = b.col(i);
            ++col;
        }
    }

    // Ascending real part; runs of equal real part (within the degeneracy
    // tolerance) ordered by imaginary part.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
        return values(x).real() < values(y).real();
    });
    for (std::size_t start = 0; start < order.size();) {
        std::size_t stop = start + 1;
        while (stop < order.size() &&
               values(order[stop]).real() - values(order[stop - 1]).real() < deg_tol) {
            ++stop;
        }
        std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop),
                         [&](auto x, auto y) { return values(x).imag() < values(y).imag(); });
        start = stop;
    }

    Vector sorted_values(n);
    Matrix sorted_right(n, n);
    Matrix sorted_left(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sorted_values(i) = values(order[i]);
        sorted_right.col(i) = right.col(order[i]);
        sorted_left.col(i) = left.col(order[i]);
    }
    return BiorthoSystem(std::move(sorted_values), std::move(sorted_right),
                         std::move(sorted_left), 1.0 / worst_overlap, h.hbar());
}

double verify_completeness(const BiorthoSystem& sys) {
    const auto n = sys.dim();
    return max_abs(sys.right() * sys.left().adjoint() - Matrix::Identity(n, n));
}

double biorthonormality_error(const BiorthoSystem& sys) {
    const auto n = sys.dim();
    return max_abs(sys.left().adjoint() * sys.right() - Matrix::Identity(n, n));
}

double eigen_residual(const Hamiltonian& h, const BiorthoSystem& sys) {
    if (h.dim() != sys.dim()) {
        throw DimensionMismatch("eigen_residual: Hamiltonian and system dimensions differ");
    }
    const Matrix& m = h.matrix();
    const Vector& e = sys.eigenvalues();
    const double r = max_abs(m * sys.right() - sys.right() * e.asDiagonal());
    const double l = max_abs(sys.left().adjoint() * m - e.asDiagonal() * sys.left().adjoint());
    return std::max(r, l);
}

bool hermitian_limit_check(const BiorthoSystem& sys, double tol) {
    for (Eigen::Index j = 0; j < sys.dim(); ++j) {
        const auto a = sys.right(j);
        const auto b = sys.left(j);
        // The minimizing phase is arg <b|a>.
        const cplx overlap = b.dot(a);
        const cplx phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : cplx{1.0};
        if ((a - phase * b).norm() >= tol) return false;
    }
    return true;
}

}  // namespace nhqm
