#pragma once

// Time-series statistics for MCMC output: integrated autocorrelation time
// (automatic windowing), blocking errors and jackknife ratios.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dglab {

struct ObservableEstimate {
    double mean = 0.0;
    double stderr_ = 0.0; // autocorrelation-inflated
    double tau_int = 0.5;
    int64_t count = 0;
    uint64_t seed = 0;
};

inline double series_mean(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// integrated autocorrelation time with Sokal's automatic window W >= c*tau
inline double autocorr_time(const std::vector<double>& x, double c = 6.0) {
    int64_t n = static_cast<int64_t>(x.size());
    if (n < 16) return 0.5;
    double mu = series_mean(x);
    double var = 0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    if (var <= 0.0) return 0.5;
    double tau = 0.5;
    for (int64_t t = 1; t < n / 4; ++t) {
        double rho = 0;
        for (int64_t i = 0; i + t < n; ++i) rho += (x[i] - mu) * (x[i + t] - mu);
        rho /= (static_cast<double>(n - t) * var);
        tau += rho;
        if (static_cast<double>(t) >= c * tau) break;
    }
    return std::max(0.5, tau);
}

inline ObservableEstimate estimate_series(const std::vector<double>& x, uint64_t seed = 0) {
    ObservableEstimate e;
    e.count = static_cast<int64_t>(x.size());
    e.seed = seed;
    if (x.empty()) return e;
    e.mean = series_mean(x);
    double var = 0;
    for (double v : x) var += (v - e.mean) * (v - e.mean);
    var /= std::max<int64_t>(1, e.count - 1);
    e.tau_int = autocorr_time(x);
    e.stderr_ = std::sqrt(var * 2.0 * e.tau_int / static_cast<double>(e.count));
    return e;
}

// block means of fixed length (the trailing partial block is dropped)
inline std::vector<double> block_means(const std::vector<double>& x, int64_t block) {
    std::vector<double> out;
    int64_t n = static_cast<int64_t>(x.size());
    for (int64_t b = 0; b + block <= n; b += block) {
        double s = 0;
        for (int64_t i = b; i < b + block; ++i) s += x[i];
        out.push_back(s / static_cast<double>(block));
    }
    return out;
}

// jackknife mean/err of g(sum_blocks) for a smooth function of block means of
// several series; used for variances and ratios
template <typename G>
inline std::pair<double, double> jackknife(const std::vector<std::vector<double>>& blocks, G&& g) {
    if (blocks.empty() || blocks[0].empty()) throw std::invalid_argument("jackknife: empty input");
    size_t nb = blocks[0].size(), ns = blocks.size();
    std::vector<double> tot(ns, 0.0);
    for (size_t s = 0; s < ns; ++s)
        for (double v : blocks[s]) tot[s] += v;
    std::vector<double> full(ns);
    for (size_t s = 0; s < ns; ++s) full[s] = tot[s] / static_cast<double>(nb);
    double gfull = g(full);
    std::vector<double> loo(ns);
    double mean = 0, var = 0;
    std::vector<double> gs(nb);
    for (size_t k = 0; k < nb; ++k) {
        for (size_t s = 0; s < ns; ++s)
            loo[s] = (tot[s] - blocks[s][k]) / static_cast<double>(nb - 1);
        gs[k] = g(loo);
        mean += gs[k];
    }
    mean /= static_cast<double>(nb);
    for (size_t k = 0; k < nb; ++k) var += (gs[k] - mean) * (gs[k] - mean);
    var *= static_cast<double>(nb - 1) / static_cast<double>(nb);
    return {gfull, std::sqrt(var)};
}

// weighted least squares of v against a*x + b with per-point sigma
struct WlsFit {
    double slope = 0, intercept = 0, slope_err = 0, intercept_err = 0, chi2 = 0;
};

inline WlsFit wls_fit(const std::vector<double>& x, const std::vector<double>& v,
                      const std::vector<double>& sigma) {
    size_t n = x.size();
    if (n < 2) throw std::domain_error("wls_fit: need >= 2 points");
    double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
        S += w;
        Sx += w * x[i];
        Sy += w * v[i];
        Sxx += w * x[i] * x[i];
        Sxy += w * x[i] * v[i];
    }
    double det = S * Sxx - Sx * Sx;
    if (std::abs(det) < 1e-30 * S * Sxx || det <= 0.0) throw std::domain_error("wls_fit: ill-conditioned fit");
    WlsFit f;
    f.slope = (S * Sxy - Sx * Sy) / det;
    f.intercept = (Sxx * Sy - Sx * Sxy) / det;
    f.slope_err = std::sqrt(S / det);
    f.intercept_err = std::sqrt(Sxx / det);
    for (size_t i = 0; i < n; ++i) {
        double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
        double r = v[i] - f.slope * x[i] - f.intercept;
        f.chi2 += w * r * r;
    }
    return f;
}

} // namespace dglab
