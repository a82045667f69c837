#pragma once

// Thin wrapper around FFTW3 for fixed-size periodic transforms.
//
// Plans are created once per size with FFTW_ESTIMATE | FFTW_UNALIGNED and
// cached for the lifetime of the process.  ESTIMATE keeps plan selection a
// pure function of the size, so results are reproducible run to run;
// UNALIGNED lets the new-array execute functions accept any caller buffer.
// Plan construction is serialized behind a mutex (the FFTW planner is not
// thread safe); execution of a cached plan is safe from many threads.

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace eplim {
namespace fft {

namespace detail {

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

inline PlanPair plans_for(int n) {
    static std::map<int, PlanPair> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> a(n), b(n);
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    PlanPair p;
    p.forward = fftw_plan_dft_1d(n, pa, pb, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.backward = fftw_plan_dft_1d(n, pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache[n] = p;
    return p;
}

} // namespace detail

/// Forward DFT of real samples, normalized so the output are Fourier series
/// coefficients: out[k] = (1/n) sum_j f[j] exp(-2*pi*i*j*k/n).
inline std::vector<std::complex<double>> forward(const std::vector<double>& values) {
    const int n = static_cast<int>(values.size());
    std::vector<std::complex<double>> in(values.begin(), values.end());
    std::vector<std::complex<double>> out(n);
    auto p = detail::plans_for(n);
    fftw_execute_dft(p.forward,
                     reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / n;
    for (auto& c : out) c *= scale;
    return out;
}

/// Inverse of forward(); returns the real parts (imaginary parts are
/// roundoff for Hermitian spectra and are dropped).
inline std::vector<double> inverse(const std::vector<std::complex<double>>& coeffs) {
    const int n = static_cast<int>(coeffs.size());
    std::vector<std::complex<double>> in(coeffs);
    std::vector<std::complex<double>> out(n);
    auto p = detail::plans_for(n);
    fftw_execute_dft(p.backward,
                     reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    std::vector<double> res(n);
    for (int j = 0; j < n; ++j) res[j] = out[j].real();
    return res;
}

} // namespace fft
} // namespace eplim
