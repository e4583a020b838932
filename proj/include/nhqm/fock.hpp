#pragma once

#include "nhqm/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nhqm {

enum class Statistics { boson, fermion };

using Occupation = std::vector<int>;

// Truncated occupation-number basis, lexicographic with mode 0 most significant.
class FockSpace {
  public:
    // Fermionic spaces ignore the cutoff and use 1 per mode.
    FockSpace(int n_modes, Statistics stats, int cutoff = 4);
    FockSpace(std::vector<int> cutoffs, Statistics stats);

    int n_modes() const { return static_cast<int>(cutoffs_.size()); }
    Statistics statistics() const { return stats_; }
    int cutoff(int j) const { return cutoffs_[static_cast<std::size_t>(j)]; }
    const std::vector<int>& cutoffs() const { return cutoffs_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(basis_.size()); }
    const std::vector<Occupation>& basis() const { return basis_; }
    const Occupation& occupation(Eigen::Index i) const { return basis_[static_cast<std::size_t>(i)]; }
    Eigen::Index index_of(const Occupation& n) const;

  private:
    std::vector<int> cutoffs_;
    Statistics stats_;
    std::vector<Occupation> basis_;
};

class ManyBodyOperator {
  public:
    ManyBodyOperator(std::shared_ptr<const FockSpace> space, Matrix matrix);

    const FockSpace& space() const { return *space_; }
    const std::shared_ptr<const FockSpace>& space_ptr() const { return space_; }
    const Matrix& matrix() const { return matrix_; }
    Eigen::Index dim() const { return matrix_.rows(); }

  private:
    std::shared_ptr<const FockSpace> space_;
    Matrix matrix_;
};

struct ModeOperators {
    std::vector<ManyBodyOperator> lower;  // C_j
    std::vector<ManyBodyOperator> raise;  // C_j^dagger
};

// Bosonic sqrt(n) ladders; fermionic ladders carry the Jordan-Wigner sign
// (-1)^{n_0 + ... + n_{j-1}}.
ModeOperators build_mode_operators(std::shared_ptr<const FockSpace> space);

// sum_j E_j C_j^dagger C_j
ManyBodyOperator build_free_hamiltonian(std::shared_ptr<const FockSpace> space,
                                        const Vector& energies);

// sum_jk h'_jk C_j^dagger C_k + (lambda/2) sum_j C_j^dagger C_j^dagger C_j C_j
//   + (1/2) sum_jk U_jk C_j^dagger C_k^dagger C_k C_j
// A fermionic space with lambda != 0 appends a FermionContactTerm notice to
// `warnings`: that term vanishes identically.
ManyBodyOperator build_interacting_hamiltonian(std::shared_ptr<const FockSpace> space,
                                               const Matrix& h_prime, cplx lambda,
                                               const std::optional<Matrix>& pair_potential = {},
                                               std::vector<std::string>* warnings = nullptr);

// sum_j C_j^dagger C_j
ManyBodyOperator total_number_operator(std::shared_ptr<const FockSpace> space);

// AB - BA and AB + BA
Matrix commutator(const Matrix& a, const Matrix& b);
Matrix anticommutator(const Matrix& a, const Matrix& b);

// Eigenvalues sorted by real part, then imaginary part.
Vector spectrum(const ManyBodyOperator& op);

}  // namespace nhqm
