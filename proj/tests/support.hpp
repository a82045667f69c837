#pragma once

// Shared helpers for the test suite: seeded smooth random fields and a small
// dense linear solver used by the independent oracles.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "eplim/grid.hpp"

namespace testsupport {

/// Smooth random field: trigonometric polynomial with modes 1..kmax and
/// coefficients drawn from a seeded generator.  Mean-free by construction.
inline eplim::Field random_band_limited(const eplim::Grid& g, int kmax, unsigned seed,
                                        double amplitude = 1.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> ac(kmax + 1, 0.0), as(kmax + 1, 0.0);
    for (int k = 1; k <= kmax; ++k) {
        ac[k] = uni(rng) / k;
        as[k] = uni(rng) / k;
    }
    const double two_pi = 2.0 * std::numbers::pi;
    return eplim::Field::sample(g, [&](double x) {
        double v = 0.0;
        for (int k = 1; k <= kmax; ++k) {
            v += ac[k] * std::cos(two_pi * k * x / g.length);
            v += as[k] * std::sin(two_pi * k * x / g.length);
        }
        return amplitude * v;
    });
}

/// Dense solve A x = b by Gaussian elimination with partial pivoting.
/// A is row-major n x n and is consumed.
inline std::vector<double> dense_solve(std::vector<double> A, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    if (static_cast<int>(A.size()) != n * n) throw std::invalid_argument("dense_solve: shape");
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
        if (std::abs(A[piv * n + col]) < 1e-300) throw std::runtime_error("dense_solve: singular");
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(A[piv * n + c], A[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        const double d = A[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = A[r * n + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= A[r * n + c] * x[c];
        x[r] = s / A[r * n + r];
    }
    return x;
}

} // namespace testsupport
