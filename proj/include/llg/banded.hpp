#pragma once

// Thin RAII wrapper over LAPACK's banded LU (dgbtrf / dgbtrs).

#include "core.hpp"

#include <lapacke.h>

namespace llg {

class BandedLU {
public:
    BandedLU(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(ldab_ * n, 0.0), ipiv_(n, 0)
    {
    }

    std::size_t size() const { return n_; }
    std::size_t lower() const { return kl_; }
    std::size_t upper() const { return ku_; }

    bool in_band(std::size_t i, std::size_t j) const { return i <= j + kl_ && j <= i + ku_; }

    /// Element (i, j) of the matrix before factorization. Column-major band
    /// storage with kl extra rows reserved for fill-in.
    double& operator()(std::size_t i, std::size_t j) { return ab_[j * ldab_ + kl_ + ku_ + i - j]; }

    void clear()
    {
        std::fill(ab_.begin(), ab_.end(), 0.0);
        factored_ = false;
    }

    /// Returns false when the matrix is singular.
    bool factor()
    {
        const lapack_int info =
            LAPACKE_dgbtrf(LAPACK_COL_MAJOR, static_cast<lapack_int>(n_), static_cast<lapack_int>(n_),
                           static_cast<lapack_int>(kl_), static_cast<lapack_int>(ku_), ab_.data(),
                           static_cast<lapack_int>(ldab_), ipiv_.data());
        factored_ = (info == 0);
        return factored_;
    }

    void solve(std::span<double> rhs) const
    {
        if (!factored_) throw SolverError("BandedLU::solve called before a successful factorization");
        const lapack_int info =
            LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', static_cast<lapack_int>(n_), static_cast<lapack_int>(kl_),
                           static_cast<lapack_int>(ku_), 1, ab_.data(), static_cast<lapack_int>(ldab_), ipiv_.data(),
                           rhs.data(), static_cast<lapack_int>(n_));
        if (info != 0) throw SolverError("BandedLU::solve: dgbtrs failed");
    }

private:
    std::size_t n_, kl_, ku_, ldab_;
    std::vector<double> ab_;
    std::vector<lapack_int> ipiv_;
    bool factored_ = false;
};

} // namespace llg
