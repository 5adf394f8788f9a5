#pragma once

// Fourier-space evaluation of the lattice covariances, the infinite-volume
// two-point quadratic form and Green's-function asymptotics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dglab/fft.hpp"
#include "dglab/lattice.hpp"

namespace dglab {

// Fourier symbol of -Delta
inline double symbol_lambda(double p1, double p2) {
    double s1 = std::sin(0.5 * p1), s2 = std::sin(0.5 * p2);
    return 4.0 * (s1 * s1 + s2 * s2);
}

enum class KernelTag { green, c_m2, c_s_m2, frak_c };

// Translation-invariant covariance kernel in multiplier representation.
// green(m2):   1/(lambda + m2)
// c_m2:        1/(lambda + m2) - gamma
// c_s_m2:      C(s,m2) = (C(m2)^{-1} + s*lambda)^{-1}
// frak_c:      (1 - s*gamma*lambda)^2 * C(s,0)   (zero mode dropped)
struct TranslationKernel {
    Torus torus;
    KernelTag tag = KernelTag::green;
    double m2 = 0.0;
    double s = 0.0;
    double gamma = 0.0;

    static TranslationKernel green(const Torus& t, double m2) {
        return {t, KernelTag::green, m2, 0.0, 0.0};
    }
    static TranslationKernel c(const Torus& t, double m2, double gamma) {
        return {t, KernelTag::c_m2, m2, 0.0, gamma};
    }
    static TranslationKernel c(const Torus& t, double s, double m2, double gamma) {
        return {t, KernelTag::c_s_m2, m2, s, gamma};
    }
    static TranslationKernel frak(const Torus& t, double s, double gamma) {
        return {t, KernelTag::frak_c, 0.0, s, gamma};
    }

    bool massless() const { return m2 == 0.0; }

    double multiplier(double lam) const {
        switch (tag) {
            case KernelTag::green:
                return 1.0 / (lam + m2);
            case KernelTag::c_m2:
                return 1.0 / (lam + m2) - gamma;
            case KernelTag::c_s_m2: {
                double cm = 1.0 / (lam + m2) - gamma;
                return cm / (1.0 + s * lam * cm);
            }
            case KernelTag::frak_c: {
                double cm = 1.0 / lam - gamma;
                double a = 1.0 - s * gamma * lam;
                return a * a * cm / (1.0 + s * lam * cm);
            }
        }
        return 0.0;
    }

    // smallest multiplier over the momentum grid (zero mode excluded when massless)
    double min_multiplier() const {
        double worst = multiplier(8.0);
        worst = std::min(worst, multiplier(4.0));
        if (!massless()) worst = std::min(worst, multiplier(m2 > 0 ? 0.0 : 1e-12));
        return worst;
    }
};

// (f, K f) for f = delta_0 - delta_y on the torus, via the momentum sum
// (2/|Lambda|) sum_p (1 - cos(y.p)) mult(lambda(p)); the p = 0 term vanishes.
inline double dipole_qform(const TranslationKernel& k, int64_t y1, int64_t y2) {
    const int64_t n = k.torus.side;
    std::vector<double> lam1(n), cy1(n), cy2(n), sy1(n), sy2(n);
    for (int64_t i = 0; i < n; ++i) {
        double p = 2.0 * pi * static_cast<double>(i) / static_cast<double>(n);
        double sh = std::sin(0.5 * p);
        lam1[i] = 4.0 * sh * sh;
        cy1[i] = std::cos(static_cast<double>(y1) * p);
        sy1[i] = std::sin(static_cast<double>(y1) * p);
        cy2[i] = std::cos(static_cast<double>(y2) * p);
        sy2[i] = std::sin(static_cast<double>(y2) * p);
    }
    double acc = 0.0;
    for (int64_t i2 = 0; i2 < n; ++i2) {
        double l2 = lam1[i2], c2 = cy2[i2], s2 = sy2[i2];
        double row = 0.0;
        for (int64_t i1 = 0; i1 < n; ++i1) {
            if (i1 == 0 && i2 == 0) continue;
            double cosyp = cy1[i1] * c2 - sy1[i1] * s2;
            row += (1.0 - cosyp) * k.multiplier(lam1[i1] + l2);
        }
        acc += row;
    }
    return 2.0 * acc / static_cast<double>(k.torus.sites());
}

// (f, K f) for a general field via the DFT
inline double covariance_qform(const TranslationKernel& k, const Field& f) {
    if (k.massless()) {
        double tot = f.sum();
        double scale = 0.0;
        for (double x : f.v) scale += std::abs(x);
        if (std::abs(tot) > 1e-10 * std::max(1.0, scale))
            throw std::domain_error("covariance_qform: massless kernel needs a neutral field");
    }
    const int64_t n = k.torus.side;
    std::vector<double> pw, colw;
    field_power_spectrum(f.v, n, pw, colw);
    int nh = static_cast<int>(n) / 2 + 1;
    double acc = 0.0;
    for (int64_t k2 = 0; k2 < n; ++k2) {
        double p2 = 2.0 * pi * static_cast<double>(k2) / static_cast<double>(n);
        double l2 = symbol_lambda(0.0, p2);
        for (int k1 = 0; k1 < nh; ++k1) {
            if (k1 == 0 && k2 == 0 && k.massless()) continue;
            double p1 = 2.0 * pi * k1 / static_cast<double>(n);
            acc += colw[k1] * pw[k2 * nh + k1] * k.multiplier(symbol_lambda(p1, 0.0) + l2);
        }
    }
    return acc / static_cast<double>(k.torus.sites());
}

// ---- quadrature ------------------------------------------------------------

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

struct QuadSpec {
    int nodes = 20;        // Gauss-Legendre nodes per panel and axis
    int dyadic_levels = 24; // dyadic refinement of [0,pi] toward 0
    double abs_tol = 1e-9;
};

namespace detail {

// dyadic panels of [0,pi], refined toward 0, each split so that an
// oscillation of frequency `freq` is resolved by the node count
inline std::vector<std::pair<double, double>> dyadic_panels(const QuadSpec& q, double freq) {
    std::vector<std::pair<double, double>> panels;
    double hi = pi;
    for (int k = 0; k < q.dyadic_levels; ++k) {
        double lo = hi / 2.0;
        int parts = std::max<int>(1, static_cast<int>(std::ceil(std::abs(freq) * (hi - lo) / (2.0 * pi * 2.0))));
        for (int m = 0; m < parts; ++m)
            panels.emplace_back(lo + (hi - lo) * m / parts, lo + (hi - lo) * (m + 1) / parts);
        hi = lo;
    }
    panels.emplace_back(0.0, hi);
    return panels;
}

inline double tensor_gl(const std::function<double(double, double)>& f, const QuadSpec& q,
                        double f1, double f2) {
    std::vector<double> gx, gw;
    gauss_legendre(q.nodes, gx, gw);
    auto pan1 = dyadic_panels(q, f1), pan2 = dyadic_panels(q, f2);
    double total = 0.0;
    for (auto [a1, b1] : pan1) {
        double c1 = 0.5 * (a1 + b1), h1 = 0.5 * (b1 - a1);
        for (auto [a2, b2] : pan2) {
            double c2 = 0.5 * (a2 + b2), h2 = 0.5 * (b2 - a2);
            double s = 0.0;
            for (int i = 0; i < q.nodes; ++i)
                for (int j = 0; j < q.nodes; ++j)
                    s += gw[i] * gw[j] * f(c1 + h1 * gx[i], c2 + h2 * gx[j]);
            total += s * h1 * h2;
        }
    }
    return total;
}

} // namespace detail

// (f_y, (-Delta)^{-1} f_y) on Z^2 by exact reduction of the p2 integral:
// with a(p1) = 4 - 2 cos p1, the inner integral over p2 gives
// (1 - cos(y1 p1) r^{|y2|}) / sqrt(a^2 - 4), r = (a - sqrt(a^2 - 4))/2.
inline double green_inf_dipole(int64_t y1, int64_t y2, const QuadSpec& q = {}) {
    if (y1 == 0 && y2 == 0) return 0.0;
    int64_t k = std::abs(y2);
    auto integrand = [&](double p1) {
        double sh = std::sin(0.5 * p1);
        double am2 = 4.0 * sh * sh; // a - 2, stable at small p1
        double disc = std::sqrt(am2 * (am2 + 4.0));
        double r = (2.0 + am2 - disc) / 2.0;
        return 2.0 * (1.0 - std::cos(static_cast<double>(y1) * p1) * std::pow(r, static_cast<double>(k))) / disc;
    };
    std::vector<double> gx, gw;
    gauss_legendre(q.nodes, gx, gw);
    double total = 0.0;
    for (auto [a, b] : detail::dyadic_panels(q, static_cast<double>(std::abs(y1)) + std::abs(y2))) {
        double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0.0;
        for (int i = 0; i < q.nodes; ++i) s += gw[i] * integrand(c + h * gx[i]);
        total += s * h;
    }
    return total / pi;
}

struct GreenFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> residuals;
};

// least squares of v(y) against a*log||y||_2 + b
inline GreenFit fit_log_law(const std::vector<double>& ynorm, const std::vector<double>& val) {
    int n = static_cast<int>(ynorm.size());
    std::vector<double> lx(n);
    for (int i = 0; i < n; ++i) lx[i] = std::log(ynorm[i]);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += lx[i];
        sy += val[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * val[i];
    }
    double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-12) throw std::runtime_error("fit_log_law: degenerate design");
    GreenFit g;
    g.slope = (n * sxy - sx * sy) / det;
    g.intercept = (sy * sxx - sx * sxy) / det;
    g.residuals.resize(n);
    for (int i = 0; i < n; ++i) g.residuals[i] = val[i] - g.slope * lx[i] - g.intercept;
    return g;
}

// fit (f_y, (-Delta)^{-1} f_y) ~ a log||y|| + b over y_list on a torus
inline GreenFit green_asymptotics_fit(const Torus& t,
                                      const std::vector<std::pair<int64_t, int64_t>>& y_list) {
    if (t.side < 512) throw std::invalid_argument("green_asymptotics_fit: side >= 512");
    std::vector<double> yn, val;
    auto kern = TranslationKernel::green(t, 0.0);
    for (auto [y1, y2] : y_list) {
        double r = std::sqrt(static_cast<double>(y1) * y1 + static_cast<double>(y2) * y2);
        if (r > static_cast<double>(t.side) / 8.0)
            throw std::invalid_argument("green_asymptotics_fit: ||y|| <= side/8");
        yn.push_back(r);
        val.push_back(dipole_qform(kern, y1, y2));
    }
    std::vector<double> uniq = yn;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               uniq.end());
    if (uniq.size() < 3) throw std::domain_error("green_asymptotics_fit: need >= 3 distinct ||y||");
    return fit_log_law(yn, val);
}

namespace detail {

// A(p) of the two-point remainder split, as an exact rational function of
// lambda; the 1/lambda singularity cancels in closed form.
inline double remainder_A(double lam, double s, double gamma) {
    double g = gamma;
    double P = g * (s - (1.0 + s) * (1.0 + 2.0 * s)) + g * g * s * (2.0 + s) * (1.0 + s) * lam
               - s * s * g * g * g * (1.0 + s) * lam * lam;
    double den = (1.0 + s) * (1.0 + s - s * g * lam);
    return P / den;
}

inline void check_two_point_domain(double s, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0 / 3.0))
        throw std::domain_error("two_point: gamma in (0, 1/3)");
    // denominator 1 + s*lambda*(1/lambda - gamma) = 1 + s - s*gamma*lambda over lambda in [0,8]
    if (1.0 + s - s * gamma * 8.0 <= 0.0 || 1.0 + s <= 0.0)
        throw std::domain_error("two_point: denominator not positive for this (s, gamma)");
}

} // namespace detail

// (f_y, frakC_{Z^2} f_y) by direct 2D quadrature of the momentum integrand
inline double infinite_volume_two_point(int64_t y1, int64_t y2, double s, double gamma,
                                        const QuadSpec& q = {}) {
    if (y1 == 0 && y2 == 0) throw std::invalid_argument("two_point: y != 0");
    detail::check_two_point_domain(s, gamma);
    auto f = [&](double p1, double p2) {
        double lam = symbol_lambda(p1, p2);
        double osc = 2.0 * (1.0 - std::cos(static_cast<double>(y1) * p1) * std::cos(static_cast<double>(y2) * p2));
        double a = 1.0 - s * gamma * lam;
        double num = a * a * (1.0 - gamma * lam);
        double den = 1.0 + s - s * gamma * lam;
        return (osc / lam) * num / den;
    };
    // integrand is even per axis after folding, so the full-square integral is
    // 4x the [0,pi]^2 tensor integral
    double v = detail::tensor_gl(f, q, static_cast<double>(y1), static_cast<double>(y2));
    QuadSpec q2 = q;
    q2.dyadic_levels += 4;
    double v2 = detail::tensor_gl(f, q2, static_cast<double>(y1), static_cast<double>(y2));
    if (std::abs(v - v2) > q.abs_tol * pi * pi)
        throw std::runtime_error("two_point: quadrature did not converge");
    return v2 / (pi * pi);
}

struct RemainderSplit {
    double leading = 0.0; // (f_y, (-Delta)^{-1} f_y)/(1+s)
    double C1 = 0.0;      // (1/2pi^2) int A(p) dp
    double R = 0.0;       // oscillatory remainder, O(||y||^{-2})
};

inline double remainder_C1(double s, double gamma, const QuadSpec& q = {}) {
    detail::check_two_point_domain(s, gamma);
    auto f = [&](double p1, double p2) { return detail::remainder_A(symbol_lambda(p1, p2), s, gamma); };
    return 2.0 * detail::tensor_gl(f, q, 0.0, 0.0) / (pi * pi);
}

// |1 - e^{-iy.p}|^2 A = 2A - (e^{iy.p} + e^{-iy.p}) A, so the y-dependent part
// is R(y) = -(1/2pi^2) int cos(y.p) A(p) dp
inline double remainder_R(int64_t y1, int64_t y2, double s, double gamma, const QuadSpec& q = {}) {
    detail::check_two_point_domain(s, gamma);
    auto f = [&](double p1, double p2) {
        return std::cos(static_cast<double>(y1) * p1) * std::cos(static_cast<double>(y2) * p2) *
               detail::remainder_A(symbol_lambda(p1, p2), s, gamma);
    };
    return -2.0 * detail::tensor_gl(f, q, static_cast<double>(y1), static_cast<double>(y2)) / (pi * pi);
}

// split (f_y, frakC f_y) = leading + C1 + R(y)
inline RemainderSplit remainder_decomposition(int64_t y1, int64_t y2, double s, double gamma,
                                              const QuadSpec& q = {}) {
    RemainderSplit r;
    r.leading = green_inf_dipole(y1, y2, q) / (1.0 + s);
    r.C1 = remainder_C1(s, gamma, q);
    r.R = remainder_R(y1, y2, s, gamma, q);
    return r;
}

// sup-norm of Delta_p A on a sampling grid; controls ||y||^2 |R(y)|
inline double remainder_A_laplacian_sup(double s, double gamma, int grid = 512) {
    double h = 2.0 * pi / grid, sup = 0.0;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            double p1 = -pi + h * i, p2 = -pi + h * j;
            auto A = [&](double a, double b) { return detail::remainder_A(symbol_lambda(a, b), s, gamma); };
            double lap = (A(p1 + h, p2) + A(p1 - h, p2) + A(p1, p2 + h) + A(p1, p2 - h) - 4.0 * A(p1, p2)) / (h * h);
            sup = std::max(sup, std::abs(lap));
        }
    return sup;
}

} // namespace dglab
