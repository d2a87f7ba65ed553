// fock.hpp — truncated pseudo-Fock space: basis enumeration, ladder maps,
// and embedding/projection between system and extended vectors.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

namespace nshops::fock {

struct TruncationScheme {
    enum class Kind { Rectangular, Triangular };
    Kind kind = Kind::Rectangular;
    std::vector<int> nmax; // Rectangular: per-mode caps, one entry per mode
    int nsum = 0;          // Triangular: bound on n_1 + ... + n_N
    int modes = 0;         // Triangular: mode count

    static TruncationScheme rectangular(std::vector<int> caps);
    static TruncationScheme triangular(int nsum, int modes);

    int mode_count() const {
        return kind == Kind::Rectangular ? static_cast<int>(nmax.size()) : modes;
    }
};

// Enumerated multi-indices under a truncation scheme, lexicographically
// ordered with the vacuum first. Immutable after construction and safe to
// share across threads. Ladder maps are precomputed per mode:
//   raise_index(j, k) = flat index of n + e_j (or -1 when truncated away)
//   lower_index(j, k) = flat index of n - e_j (or -1 at n_j = 0)
class FockBasis {
public:
    static constexpr std::size_t default_capacity = 10'000'000;

    static std::shared_ptr<const FockBasis> build(const TruncationScheme& scheme,
                                                  std::size_t capacity = default_capacity);

    std::size_t size() const { return size_; }
    int mode_count() const { return modes_; }
    const TruncationScheme& scheme() const { return scheme_; }

    int occupation(std::size_t k, int j) const { return occ_[k * modes_ + j]; }
    const int* occupations(std::size_t k) const { return occ_.data() + k * modes_; }

    std::int64_t raise_index(int j, std::size_t k) const { return up_[j][k]; }
    std::int64_t lower_index(int j, std::size_t k) const { return dn_[j][k]; }
    // sqrt(n_j + 1) and sqrt(n_j), paired with the maps above
    double raise_factor(int j, std::size_t k) const { return fup_[j][k]; }
    double lower_factor(int j, std::size_t k) const { return fdn_[j][k]; }

    // Flat position of a multi-index, -1 if not in the basis.
    std::int64_t find(const std::vector<int>& index) const;

private:
    FockBasis() = default;

    TruncationScheme scheme_;
    int modes_ = 0;
    std::size_t size_ = 0;
    std::vector<int> occ_;
    std::vector<std::vector<std::int64_t>> up_, dn_;
    std::vector<std::vector<double>> fup_, fdn_;
};

// Complex amplitudes on (system ⊗ pseudo-Fock) with the system index
// fastest-varying, so system operators act on contiguous blocks.
struct ExtendedState {
    std::shared_ptr<const FockBasis> basis;
    int sys_dim = 0;
    Eigen::VectorXcd amp;

    Eigen::Index size() const { return amp.size(); }
};

ExtendedState make_state(std::shared_ptr<const FockBasis> basis, int sys_dim,
                         std::size_t capacity = FockBasis::default_capacity);

// c_j acting on the pseudo-Fock factor; the system factor is untouched.
ExtendedState apply_annihilation(int mode, const ExtendedState& s);
// c_j†; amplitudes that would leave the truncated basis are dropped.
ExtendedState apply_creation(int mode, const ExtendedState& s);

ExtendedState vacuum_embed(const Eigen::VectorXcd& system_state,
                           std::shared_ptr<const FockBasis> basis);
Eigen::VectorXcd project_vacuum(const ExtendedState& s);

// Accumulating kernels used by the propagators (out += alpha * Op * x).
void add_lowering(const FockBasis& b, int sys_dim, int mode, std::complex<double> alpha,
                  const Eigen::VectorXcd& x, Eigen::VectorXcd& out);
void add_raising(const FockBasis& b, int sys_dim, int mode, std::complex<double> alpha,
                 const Eigen::VectorXcd& x, Eigen::VectorXcd& out);
void add_system_op(const FockBasis& b, std::complex<double> alpha, const Eigen::MatrixXcd& op,
                   const Eigen::VectorXcd& x, Eigen::VectorXcd& out);

} // namespace nshops::fock
