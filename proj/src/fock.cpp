#include "nshops/fock.hpp"

#include "nshops/exceptions.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

namespace nshops::fock {

TruncationScheme TruncationScheme::rectangular(std::vector<int> caps) {
    if (caps.empty()) throw ModelDomainError("rectangular truncation needs at least one mode");
    for (int c : caps)
        if (c < 0) throw ModelDomainError("rectangular truncation: nmax must be >= 0");
    TruncationScheme s;
    s.kind = Kind::Rectangular;
    s.nmax = std::move(caps);
    return s;
}

TruncationScheme TruncationScheme::triangular(int nsum, int modes) {
    if (nsum < 0) throw ModelDomainError("triangular truncation: nsum must be >= 0");
    if (modes < 1) throw ModelDomainError("triangular truncation: mode count must be >= 1");
    TruncationScheme s;
    s.kind = Kind::Triangular;
    s.nsum = nsum;
    s.modes = modes;
    return s;
}

namespace {

constexpr int max_encoded_modes = 8;
constexpr int max_occupation = 255;

std::uint64_t encode(const int* n, int modes) {
    std::uint64_t key = 0;
    for (int j = 0; j < modes; ++j) key = (key << 8) | static_cast<std::uint64_t>(n[j]);
    return key;
}

} // namespace

std::shared_ptr<const FockBasis> FockBasis::build(const TruncationScheme& scheme,
                                                  std::size_t capacity) {
    const int modes = scheme.mode_count();
    if (modes < 1) throw ModelDomainError("truncation scheme has no modes");
    if (modes > max_encoded_modes)
        throw CapacityError("pseudo-Fock basis supports at most " +
                            std::to_string(max_encoded_modes) + " modes");

    // Predicted size, checked against the capacity cap before enumeration.
    if (scheme.kind == TruncationScheme::Kind::Rectangular) {
        std::size_t count = 1;
        for (int c : scheme.nmax) {
            if (c > max_occupation)
                throw CapacityError("per-mode occupation exceeds encoding limit of 255");
            const std::size_t f = static_cast<std::size_t>(c) + 1;
            if (count > capacity / f + 1)
                throw CapacityError("pseudo-Fock basis would exceed the capacity cap");
            count *= f;
        }
        if (count > capacity)
            throw CapacityError("pseudo-Fock basis size " + std::to_string(count) +
                                " exceeds capacity cap " + std::to_string(capacity));
    } else {
        if (scheme.nsum > max_occupation)
            throw CapacityError("nsum exceeds encoding limit of 255");
        double count = 1.0; // binomial(nsum + N, N)
        for (int i = 1; i <= modes; ++i)
            count *= static_cast<double>(scheme.nsum + i) / static_cast<double>(i);
        if (count > static_cast<double>(capacity))
            throw CapacityError("pseudo-Fock basis would exceed the capacity cap");
    }

    auto basis = std::shared_ptr<FockBasis>(new FockBasis());
    basis->scheme_ = scheme;
    basis->modes_ = modes;

    // Lexicographic odometer: the last component varies fastest, so the
    // vacuum comes first and the ordering is deterministic.
    std::vector<int> n(modes, 0);
    const auto fits = [&](int j, int value) {
        if (scheme.kind == TruncationScheme::Kind::Rectangular) return value <= scheme.nmax[j];
        int sum = value;
        for (int i = 0; i < modes; ++i)
            if (i != j) sum += n[i];
        return sum <= scheme.nsum;
    };
    while (true) {
        basis->occ_.insert(basis->occ_.end(), n.begin(), n.end());
        int j = modes - 1;
        while (j >= 0) {
            ++n[j];
            if (fits(j, n[j])) break;
            n[j] = 0;
            --j;
        }
        if (j < 0) break;
    }
    basis->size_ = basis->occ_.size() / static_cast<std::size_t>(modes);

    std::unordered_map<std::uint64_t, std::int64_t> lookup;
    lookup.reserve(basis->size_ * 2);
    for (std::size_t k = 0; k < basis->size_; ++k)
        lookup.emplace(encode(basis->occupations(k), modes), static_cast<std::int64_t>(k));

    basis->up_.assign(modes, std::vector<std::int64_t>(basis->size_, -1));
    basis->dn_.assign(modes, std::vector<std::int64_t>(basis->size_, -1));
    basis->fup_.assign(modes, std::vector<double>(basis->size_, 0.0));
    basis->fdn_.assign(modes, std::vector<double>(basis->size_, 0.0));
    std::vector<int> probe(modes);
    for (std::size_t k = 0; k < basis->size_; ++k) {
        const int* nk = basis->occupations(k);
        for (int j = 0; j < modes; ++j) {
            std::copy(nk, nk + modes, probe.begin());
            probe[j] = nk[j] + 1;
            if (probe[j] <= max_occupation) {
                auto it = lookup.find(encode(probe.data(), modes));
                if (it != lookup.end()) {
                    basis->up_[j][k] = it->second;
                    basis->fup_[j][k] = std::sqrt(static_cast<double>(nk[j] + 1));
                }
            }
            if (nk[j] > 0) {
                probe[j] = nk[j] - 1;
                auto it = lookup.find(encode(probe.data(), modes));
                basis->dn_[j][k] = it->second;
                basis->fdn_[j][k] = std::sqrt(static_cast<double>(nk[j]));
            }
        }
    }
    return basis;
}

std::int64_t FockBasis::find(const std::vector<int>& index) const {
    if (static_cast<int>(index.size()) != modes_) return -1;
    for (std::size_t k = 0; k < size_; ++k) {
        const int* nk = occupations(k);
        bool match = true;
        for (int j = 0; j < modes_; ++j)
            if (nk[j] != index[j]) { match = false; break; }
        if (match) return static_cast<std::int64_t>(k);
    }
    return -1;
}

ExtendedState make_state(std::shared_ptr<const FockBasis> basis, int sys_dim,
                         std::size_t capacity) {
    if (sys_dim < 1) throw ModelDomainError("system dimension must be >= 1");
    const std::size_t total = basis->size() * static_cast<std::size_t>(sys_dim);
    if (total > capacity)
        throw CapacityError("extended state of " + std::to_string(total) +
                            " amplitudes exceeds capacity cap " + std::to_string(capacity));
    ExtendedState s;
    s.basis = std::move(basis);
    s.sys_dim = sys_dim;
    s.amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(total));
    return s;
}

namespace {
void check_mode(const FockBasis& b, int mode) {
    if (mode < 0 || mode >= b.mode_count())
        throw ModelDomainError("mode index " + std::to_string(mode) + " out of range [0, " +
                               std::to_string(b.mode_count()) + ")");
}
} // namespace

void add_lowering(const FockBasis& b, int ds, int mode, std::complex<double> alpha,
                  const Eigen::VectorXcd& x, Eigen::VectorXcd& out) {
    const std::size_t nb = b.size();
    const std::complex<double>* src = x.data();
    std::complex<double>* dst = out.data();
    for (std::size_t k = 0; k < nb; ++k) {
        const std::int64_t k2 = b.raise_index(mode, k);
        if (k2 < 0) continue;
        const std::complex<double> w = alpha * b.raise_factor(mode, k);
        const std::complex<double>* sb = src + static_cast<std::size_t>(k2) * ds;
        std::complex<double>* db = dst + k * ds;
        for (int s = 0; s < ds; ++s) db[s] += w * sb[s];
    }
}

void add_raising(const FockBasis& b, int ds, int mode, std::complex<double> alpha,
                 const Eigen::VectorXcd& x, Eigen::VectorXcd& out) {
    const std::size_t nb = b.size();
    const std::complex<double>* src = x.data();
    std::complex<double>* dst = out.data();
    for (std::size_t k = 0; k < nb; ++k) {
        const std::int64_t k2 = b.lower_index(mode, k);
        if (k2 < 0) continue;
        const std::complex<double> w = alpha * b.lower_factor(mode, k);
        const std::complex<double>* sb = src + static_cast<std::size_t>(k2) * ds;
        std::complex<double>* db = dst + k * ds;
        for (int s = 0; s < ds; ++s) db[s] += w * sb[s];
    }
}

void add_system_op(const FockBasis& b, std::complex<double> alpha, const Eigen::MatrixXcd& op,
                   const Eigen::VectorXcd& x, Eigen::VectorXcd& out) {
    const int ds = static_cast<int>(op.rows());
    const std::size_t nb = b.size();
    const std::complex<double>* src = x.data();
    std::complex<double>* dst = out.data();
    for (std::size_t k = 0; k < nb; ++k) {
        const std::complex<double>* sb = src + k * ds;
        std::complex<double>* db = dst + k * ds;
        for (int r = 0; r < ds; ++r) {
            std::complex<double> acc = 0.0;
            for (int c = 0; c < ds; ++c) acc += op(r, c) * sb[c];
            db[r] += alpha * acc;
        }
    }
}

ExtendedState apply_annihilation(int mode, const ExtendedState& s) {
    check_mode(*s.basis, mode);
    ExtendedState out = s;
    out.amp.setZero();
    add_lowering(*s.basis, s.sys_dim, mode, 1.0, s.amp, out.amp);
    return out;
}

ExtendedState apply_creation(int mode, const ExtendedState& s) {
    check_mode(*s.basis, mode);
    ExtendedState out = s;
    out.amp.setZero();
    add_raising(*s.basis, s.sys_dim, mode, 1.0, s.amp, out.amp);
    return out;
}

ExtendedState vacuum_embed(const Eigen::VectorXcd& system_state,
                           std::shared_ptr<const FockBasis> basis) {
    if (system_state.size() < 1) throw ModelDomainError("empty system state");
    if (!system_state.allFinite()) throw NumericalError("system state has non-finite amplitudes");
    ExtendedState s = make_state(std::move(basis), static_cast<int>(system_state.size()));
    s.amp.head(system_state.size()) = system_state;
    return s;
}

Eigen::VectorXcd project_vacuum(const ExtendedState& s) {
    return s.amp.head(s.sys_dim);
}

} // namespace nshops::fock
