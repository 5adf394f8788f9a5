#pragma once

// Thin RAII wrapper over FFTW for the 2D transforms used here.

#include <fftw3.h>

#include <complex>
#include <stdexcept>
#include <vector>

namespace dglab {

// inverse transform of a real, even multiplier grid: given M(p) on the full
// side x side momentum grid (row-major, p = 2*pi*k/side), returns the
// real-space profile K(x) = (1/side^2) sum_p M(p) e^{i p.x}
inline std::vector<double> multiplier_to_profile(const std::vector<double>& mult, int64_t side) {
    if (static_cast<int64_t>(mult.size()) != side * side)
        throw std::invalid_argument("multiplier_to_profile: size mismatch");
    int n = static_cast<int>(side);
    int nh = n / 2 + 1;
    std::vector<std::complex<double>> half(static_cast<size_t>(n) * nh);
    for (int k2 = 0; k2 < n; ++k2)
        for (int k1 = 0; k1 < nh; ++k1)
            half[static_cast<size_t>(k2) * nh + k1] = mult[static_cast<size_t>(k2) * n + k1];
    std::vector<double> out(static_cast<size_t>(n) * n);
    fftw_plan plan = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(half.data()),
                                          out.data(), FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("fftw plan failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    double inv = 1.0 / (static_cast<double>(side) * static_cast<double>(side));
    for (auto& x : out) x *= inv;
    return out;
}

// forward DFT of a real field; returns |fhat(p)|^2 on the half grid
// (n rows x (n/2+1) cols) together with the duplication weight of each column
inline void field_power_spectrum(const std::vector<double>& f, int64_t side,
                                 std::vector<double>& pow_half, std::vector<double>& colw) {
    int n = static_cast<int>(side);
    int nh = n / 2 + 1;
    std::vector<double> in(f);
    std::vector<std::complex<double>> out(static_cast<size_t>(n) * nh);
    fftw_plan plan = fftw_plan_dft_r2c_2d(n, n, in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("fftw plan failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    pow_half.assign(out.size(), 0.0);
    for (size_t i = 0; i < out.size(); ++i) pow_half[i] = std::norm(out[i]);
    colw.assign(nh, 2.0);
    colw[0] = 1.0;
    if (n % 2 == 0) colw[nh - 1] = 1.0;
}

} // namespace dglab
