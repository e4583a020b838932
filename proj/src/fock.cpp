#include "nhqm/fock.hpp"

#include "nhqm/errors.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <string>

namespace nhqm {

namespace {

using Sparse = Eigen::SparseMatrix<cplx>;
using Triplet = Eigen::Triplet<cplx>;

constexpr Eigen::Index max_dim = 1 << 14;

std::shared_ptr<const FockSpace> require(std::shared_ptr<const FockSpace> space) {
    if (!space) throw InputError("null Fock space");
    return space;
}

std::vector<Sparse> lowering(const FockSpace& space) {
    const auto d = space.dim();
    std::vector<Sparse> out;
    for (int j = 0; j < space.n_modes(); ++j) {
        std::vector<Triplet> entries;
        for (Eigen::Index i = 0; i < d; ++i) {
            Occupation n = space.occupation(i);
            const int nj = n[static_cast<std::size_t>(j)];
            if (nj == 0) continue;
            double amp = std::sqrt(static_cast<double>(nj));
            if (space.statistics() == Statistics::fermion) {
                int parity = 0;
                for (int l = 0; l < j; ++l) parity += n[static_cast<std::size_t>(l)];
                amp = parity % 2 ? -1.0 : 1.0;
            }
            n[static_cast<std::size_t>(j)] -= 1;
            entries.emplace_back(space.index_of(n), i, amp);
        }
        Sparse c(d, d);
        c.setFromTriplets(entries.begin(), entries.end());
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

FockSpace::FockSpace(int n_modes, Statistics stats, int cutoff)
    : FockSpace(std::vector<int>(static_cast<std::size_t>(std::max(n_modes, 0)), cutoff), stats) {
    if (n_modes < 1) throw InputError("FockSpace needs at least one mode");
}

FockSpace::FockSpace(std::vector<int> cutoffs, Statistics stats)
    : cutoffs_(std::move(cutoffs)), stats_(stats) {
    if (cutoffs_.empty()) throw InputError("FockSpace needs at least one mode");
    Eigen::Index d = 1;
    for (auto& c : cutoffs_) {
        if (stats_ == Statistics::fermion) c = 1;
        if (c < 1) throw InputError("bosonic cutoff must be at least 1");
        d *= c + 1;
        if (d > max_dim) {
            throw InputError("Fock space dimension exceeds " + std::to_string(max_dim));
        }
    }
    basis_.reserve(static_cast<std::size_t>(d));
    Occupation n(cutoffs_.size(), 0);
    for (Eigen::Index i = 0; i < d; ++i) {
        basis_.push_back(n);
        for (std::size_t j = n.size(); j-- > 0;) {
            if (n[j] < cutoffs_[j]) {
                ++n[j];
                break;
            }
            n[j] = 0;
        }
    }
}

Eigen::Index FockSpace::index_of(const Occupation& n) const {
    if (n.size() != cutoffs_.size()) throw DimensionMismatch("occupation has the wrong length");
    Eigen::Index idx = 0;
    for (std::size_t j = 0; j < n.size(); ++j) {
        if (n[j] < 0 || n[j] > cutoffs_[j]) throw InputError("occupation outside the cutoff");
        idx = idx * (cutoffs_[j] + 1) + n[j];
    }
    return idx;
}

ManyBodyOperator::ManyBodyOperator(std::shared_ptr<const FockSpace> space, Matrix matrix)
    : space_(require(std::move(space))), matrix_(std::move(matrix)) {
    if (matrix_.rows() != space_->dim() || matrix_.cols() != space_->dim()) {
        throw DimensionMismatch("operator matrix is " + std::to_string(matrix_.rows()) + "x" +
                                std::to_string(matrix_.cols()) + " on a space of dimension " +
                                std::to_string(space_->dim()));
    }
}

ModeOperators build_mode_operators(std::shared_ptr<const FockSpace> space) {
    require(space);
    ModeOperators ops;
    for (const auto& c : lowering(*space)) {
        ops.lower.emplace_back(space, Matrix(c));
        ops.raise.emplace_back(space, Matrix(c.adjoint()));
    }
    return ops;
}

ManyBodyOperator build_free_hamiltonian(std::shared_ptr<const FockSpace> space,
                                        const Vector& energies) {
    require(space);
    if (energies.size() != space->n_modes()) {
        throw DimensionMismatch("build_free_hamiltonian: " + std::to_string(energies.size()) +
                                " energies for " + std::to_string(space->n_modes()) + " modes");
    }
    Matrix h = Matrix::Zero(space->dim(), space->dim());
    for (Eigen::Index i = 0; i < space->dim(); ++i) {
        const auto& n = space->occupation(i);
        cplx e = 0.0;
        for (int j = 0; j < space->n_modes(); ++j) {
            const int nj = n[static_cast<std::size_t>(j)];
            if (nj) e += static_cast<double>(nj) * energies(j);
        }
        h(i, i) = e;
    }
    return {std::move(space), std::move(h)};
}

ManyBodyOperator build_interacting_hamiltonian(std::shared_ptr<const FockSpace> space,
                                               const Matrix& h_prime, cplx lambda,
                                               const std::optional<Matrix>& pair_potential,
                                               std::vector<std::string>* warnings) {
    require(space);
    const int m = space->n_modes();
    if (h_prime.rows() != m || h_prime.cols() != m) {
        throw DimensionMismatch("h_prime must be " + std::to_string(m) + "x" + std::to_string(m));
    }
    if (pair_potential && (pair_potential->rows() != m || pair_potential->cols() != m)) {
        throw DimensionMismatch("pair potential must be " + std::to_string(m) + "x" +
                                std::to_string(m));
    }
    if (space->statistics() == Statistics::fermion && lambda != 0.0 && warnings) {
        warnings->push_back(
            "FermionContactTerm: the on-site contact term vanishes identically for fermions");
    }
    const auto c = lowering(*space);
    std::vector<Sparse> cd;
    for (const auto& x : c) cd.push_back(x.adjoint());

    Sparse h(space->dim(), space->dim());
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
            if (h_prime(j, k) != 0.0) h += h_prime(j, k) * (cd[j] * c[k]);
        }
    }
    if (lambda != 0.0) {
        for (int j = 0; j < m; ++j) h += (0.5 * lambda) * (cd[j] * cd[j] * c[j] * c[j]);
    }
    if (pair_potential) {
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < m; ++k) {
                const cplx u = (*pair_potential)(j, k);
                if (u != 0.0) h += (0.5 * u) * (cd[j] * cd[k] * c[k] * c[j]);
            }
        }
    }
    return {std::move(space), Matrix(h)};
}

ManyBodyOperator total_number_operator(std::shared_ptr<const FockSpace> space) {
    require(space);
    return build_free_hamiltonian(space, Vector::Ones(space->n_modes()));
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }
Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

Vector spectrum(const ManyBodyOperator& op) {
    Eigen::ComplexEigenSolver<Matrix> es(op.matrix(), false);
    Vector e = es.eigenvalues();
    std::sort(e.data(), e.data() + e.size(), [](cplx x, cplx y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    return e;
}

}  // namespace nhqm
