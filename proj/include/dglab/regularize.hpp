#pragma once

// Smoothed periodic potentials of the integer-model reformulation: cosine
// coefficients of the log-smoothed Dirac comb, the l1-hat coefficient
// algebra, sine-Gordon activity expansion and charge-q projections.
//
// Periodic functions are stored as cosine series in the scaled angle
// u = sqrt(beta)*theta (period 2*pi): f(u) = a[0] + sum_{q>=1} a[q] cos(q u).

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "dglab/lattice.hpp"

namespace dglab {

struct PeriodicCoeffs {
    double beta = 0.0;
    double c = 0.0; // weight parameter of the l1-hat norm this object was checked in
    std::vector<double> a; // cosine coefficients, a[0] is the constant term

    int qmax() const { return static_cast<int>(a.size()) - 1; }
    double eval(double u) const {
        double s = a.empty() ? 0.0 : a[0];
        for (int q = 1; q <= qmax(); ++q) s += a[q] * std::cos(q * u);
        return s;
    }
};

// sum_q e^{c|q|} |fhat(q)| with fhat(+-q) = a[q]/2 for q >= 1
inline double hat_ell1_norm(const PeriodicCoeffs& f, double c) {
    if (f.a.empty()) return 0.0;
    double n = std::abs(f.a[0]);
    for (int q = 1; q <= f.qmax(); ++q) n += std::exp(c * q) * std::abs(f.a[q]);
    return n;
}

// product in the coefficient algebra (cos A cos B = (cos(A+B)+cos(A-B))/2)
inline PeriodicCoeffs coeff_product(const PeriodicCoeffs& f, const PeriodicCoeffs& g, int qcap) {
    PeriodicCoeffs h;
    h.beta = f.beta;
    h.a.assign(qcap + 1, 0.0);
    auto two_sided = [](const PeriodicCoeffs& p, int q) {
        int aq = std::abs(q);
        if (aq > p.qmax()) return 0.0;
        return aq == 0 ? p.a[0] : p.a[aq] / 2.0;
    };
    // accumulate the two-sided convolution hhat(r) for r >= 0; the r < 0 half
    // is its mirror image, so cosine coefficients are hhat(0) and 2 hhat(r)
    for (int q1 = -f.qmax(); q1 <= f.qmax(); ++q1) {
        double v1 = two_sided(f, q1);
        if (v1 == 0.0) continue;
        for (int q2 = -g.qmax(); q2 <= g.qmax(); ++q2) {
            int r = q1 + q2;
            if (r < 0 || r > qcap) continue;
            h.a[r] += v1 * two_sided(g, q2);
        }
    }
    for (int q = 1; q <= qcap; ++q) h.a[q] *= 2.0;
    return h;
}

// log(1+f) by the power series in the coefficient algebra; requires
// ||f||_{l1hat(c)} < 1, truncates once the norm tail sum_{k>K} ||f||^k / k
// drops below tail_tol
inline PeriodicCoeffs hat_ell1_log(const PeriodicCoeffs& f, double c, double tail_tol = 1e-12) {
    double nf = hat_ell1_norm(f, c);
    if (!(nf < 1.0))
        throw std::domain_error("hat_ell1_log: ||f||_{l1hat(c)} >= 1, series does not converge");
    int qcap = f.qmax();
    PeriodicCoeffs acc;
    acc.beta = f.beta;
    acc.c = c;
    acc.a.assign(qcap + 1, 0.0);
    PeriodicCoeffs pw = f; // f^k
    double nfk = nf;
    int k = 1;
    while (true) {
        double sgn = (k % 2 == 1) ? 1.0 : -1.0;
        for (int q = 0; q <= qcap; ++q) acc.a[q] += sgn * pw.a[q] / k;
        // tail bound sum_{m>k} nf^m/m <= nf^{k+1}/((k+1)(1-nf))
        double tail = std::pow(nf, k + 1) / ((k + 1) * (1.0 - nf));
        if (tail < tail_tol) break;
        pw = coeff_product(pw, f, qcap);
        nfk *= nf;
        ++k;
        if (k > 10000) throw std::runtime_error("hat_ell1_log: series too long");
    }
    return acc;
}

// fluctuation part of the Gaussian-smoothed Dirac comb by Poisson summation:
// comb -> 1 + 2 sum_q e^{-gamma beta q^2/2} cos(q u)
inline PeriodicCoeffs comb_fluctuation(double beta, double gamma, int qmax) {
    PeriodicCoeffs f;
    f.beta = beta;
    f.a.assign(qmax + 1, 0.0);
    for (int q = 1; q <= qmax; ++q) f.a[q] = 2.0 * std::exp(-0.5 * gamma * beta * q * q);
    return f;
}

// default truncation: smallest q with e^{-gamma beta (1+q)/4} < 1e-16
inline int comb_default_qmax(double beta, double gamma) {
    for (int q = 1; q < 4096; ++q)
        if (std::exp(-0.25 * gamma * beta * (1.0 + q)) < 1e-16) return q;
    return 4096;
}

// cosine coefficients z0^{(q)} of U(theta) = log of the smoothed comb
// (constant term in a[0], charge terms in a[q]); Poisson summation followed
// by the log series in the coefficient algebra
inline PeriodicCoeffs smoothed_comb_potential(double beta, double gamma, int qmax = 0) {
    if (!(beta > 0.0) || !(gamma > 0.0) || !(gamma < 1.0 / 3.0))
        throw std::invalid_argument("smoothed_comb_potential: beta > 0, gamma in (0,1/3)");
    if (qmax <= 0) qmax = comb_default_qmax(beta, gamma);
    PeriodicCoeffs f = comb_fluctuation(beta, gamma, qmax);
    return hat_ell1_log(f, 0.0);
}

// same coefficients by direct numerical Fourier transform of log rho; valid
// for any beta with rho > 0, used as the independent route and for small beta
inline PeriodicCoeffs smoothed_comb_quadrature(double beta, double gamma, int qmax = 0, int grid = 16384) {
    if (qmax <= 0) qmax = comb_default_qmax(beta, gamma);
    int qrho = qmax + static_cast<int>(std::ceil(std::sqrt(90.0 / (0.5 * gamma * beta)))) + 8;
    PeriodicCoeffs out;
    out.beta = beta;
    out.a.assign(qmax + 1, 0.0);
    std::vector<double> logrho(grid);
    for (int i = 0; i < grid; ++i) {
        double u = 2.0 * pi * i / grid;
        double rho = 1.0;
        for (int q = 1; q <= qrho; ++q) rho += 2.0 * std::exp(-0.5 * gamma * beta * q * q) * std::cos(q * u);
        if (rho <= 0.0) throw std::runtime_error("smoothed_comb_quadrature: comb not positive");
        logrho[i] = std::log(rho);
    }
    for (int q = 0; q <= qmax; ++q) {
        double s = 0.0;
        for (int i = 0; i < grid; ++i) s += logrho[i] * std::cos(q * 2.0 * pi * i / grid);
        out.a[q] = (q == 0 ? 1.0 : 2.0) * s / grid;
    }
    return out;
}

// cosine coefficients of e^{z cos x}: I_0(z) for q = 0 and 2 I_q(z) for q >= 1,
// from the double sum over (q, k) with terms (z/2)^{2k+q} / (k! (k+q)!)
inline PeriodicCoeffs sg_activity_expansion(double z, int qmax) {
    PeriodicCoeffs out;
    out.a.assign(qmax + 1, 0.0);
    double zh = z / 2.0;
    for (int q = 0; q <= qmax; ++q) {
        double term = std::pow(std::abs(zh), q); // (z/2)^q / (0! q!)
        for (int j = 2; j <= q; ++j) term /= j;
        if (z < 0 && q % 2 == 1) term = -term;
        double sum = 0.0;
        for (int k = 0; k < 400; ++k) {
            sum += term;
            double next = term * zh * zh / ((k + 1.0) * (k + 1.0 + q));
            if (std::abs(next) < 1e-300 || std::abs(next) < 1e-18 * std::abs(sum)) break;
            term = next;
        }
        out.a[q] = (q == 0 ? 1.0 : 2.0) * sum;
    }
    return out;
}

struct GsgAdmissibility {
    bool admissible = false;
    double margin = 0.0; // gamma/2 - theta
    double C_fit = 0.0;  // minimal C with |lambda_q| <= C e^{(eta + beta theta) q^2} lambda_0
};

// growth-condition check for generalised sine-Gordon coefficient sequences
inline GsgAdmissibility gsg_admissible(const std::vector<double>& lambda, double eta, double theta,
                                       double beta, double gamma) {
    if (lambda.empty() || lambda[0] <= 0.0)
        throw std::domain_error("gsg_admissible: lambda_0 > 0 required");
    GsgAdmissibility r;
    r.margin = 0.5 * gamma - theta;
    double C = 0.0;
    for (size_t q = 0; q < lambda.size(); ++q) {
        double bound = std::exp((eta + beta * theta) * static_cast<double>(q) * q) * lambda[0];
        C = std::max(C, std::abs(lambda[q]) / bound);
    }
    r.C_fit = C;
    r.admissible = (r.margin > 0.0) && std::isfinite(C);
    return r;
}

// charge-q component of a sampled periodic functional: given F on a uniform
// grid over one period 2*pi/sqrt(beta), returns
// Fhat_q = (sqrt(beta)/2pi) int e^{-i sqrt(beta) q t} F(t) dt
inline std::complex<double> charge_component(const std::vector<double>& samples, int q, double beta) {
    int n = static_cast<int>(samples.size());
    if (n < 4 * std::abs(q) + 8)
        throw std::domain_error("charge_component: grid too coarse for this q");
    std::complex<double> acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double phase = -2.0 * pi * q * static_cast<double>(i) / n; // sqrt(beta) q t_i
        acc += samples[i] * std::polar(1.0, phase);
    }
    return acc / static_cast<double>(n);
}

} // namespace dglab
