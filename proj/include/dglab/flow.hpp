#pragma once

// Scalar renormalisation-group flow of (s_j, z_j^{(q)}): step map, contraction
// factors, coupling norms, trajectory runs and stable-manifold shooting.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dglab/lattice.hpp"

namespace dglab {

struct CouplingState {
    int j = 0;
    double s = 0.0;
    std::vector<double> z; // z^{(q)}, q = 1..qmax stored at z[q-1]

    int qmax() const { return static_cast<int>(z.size()); }
};

enum class ChargeWeight { q_squared, linear_q };
enum class GammaSource { analytic, table };

struct FlowSpec {
    int L = 8;
    double beta = 50.0;
    double gamma = 0.25;
    int qmax = 4;
    int max_scale = 24;
    // Gamma_{j+1}(0,0): analytic (Gamma3) leading term log L / (2 pi (1+s))
    // or a measured table (from an FrdStack diagonal)
    GammaSource source = GammaSource::analytic;
    std::vector<double> gamma_diag; // table: value at index j is Gamma_{j+1}(0,0)
    double s_for_diag = 0.0;
    // the charge weight in the step multiplier; the q^2 form reproduces
    // L^{2 - beta q^2 / 4 pi} with the leading diagonal
    ChargeWeight weight = ChargeWeight::q_squared;
    // pluggable nonlinearity delta-s(state); the default toy quadratic
    // c_nl * sum_q z_q^2 stands in for the full K-driven correction
    double c_nl = 0.0;
    std::function<double(const CouplingState&)> nonlinearity;

    double diag(int j_next) const {
        if (source == GammaSource::table) {
            if (j_next - 1 < 0 || j_next - 1 >= static_cast<int>(gamma_diag.size()))
                throw std::domain_error("FlowSpec: no Gamma diagonal for this scale");
            return gamma_diag[j_next - 1];
        }
        return std::log(static_cast<double>(L)) / (2.0 * pi * (1.0 + s_for_diag));
    }
    double ds(const CouplingState& st) const {
        if (nonlinearity) return nonlinearity(st);
        if (c_nl != 0.0) {
            double acc = 0.0;
            for (double zq : st.z) acc += zq * zq;
            return c_nl * acc;
        }
        return 0.0;
    }
};

// step multiplier L^2 exp(-w(q) beta Gamma_{j+1}(0,0) / 2)
inline double flow_multiplier(const FlowSpec& spec, int q, int j_next) {
    double w = spec.weight == ChargeWeight::q_squared ? static_cast<double>(q) * q : static_cast<double>(q);
    double expo = 2.0 * std::log(static_cast<double>(spec.L)) - 0.5 * w * spec.beta * spec.diag(j_next);
    return std::exp(expo);
}

inline CouplingState flow_step(const CouplingState& st, const FlowSpec& spec) {
    CouplingState nx;
    nx.j = st.j + 1;
    nx.z.resize(st.z.size());
    for (int q = 1; q <= st.qmax(); ++q) nx.z[q - 1] = flow_multiplier(spec, q, st.j + 1) * st.z[q - 1];
    nx.s = st.s + spec.ds(st);
    return nx;
}

// ||U_j|| = A max{ |s_j|, sup_q e^{c_f beta q} |z_j^{(q)}| }
inline double coupling_norm(const CouplingState& st, double A, double c_f, double beta) {
    if (!(A > 0.0) || !(c_f > 0.0)) throw std::invalid_argument("coupling_norm: A, c_f > 0");
    double m = std::abs(st.s);
    for (int q = 1; q <= st.qmax(); ++q)
        m = std::max(m, std::exp(c_f * beta * q) * std::abs(st.z[q - 1]));
    return A * m;
}

struct LocFactors {
    double value = 0.0;
    double first_term = 0.0;
    double charge_series = 0.0; // min{1, sum}
    bool saturated = false;     // series exceeded 1 (or diverges); min clamps it
};

// alpha_Loc^{(k)} = C (L^{-2} log L)^{(k+1)/2} + C min{1, sum_{q>=1}
// e^{2 sqrt(beta) q h} e^{-(q - 1/2) beta Gamma0}}
inline LocFactors loc_contraction_factors(int k, double beta, int L, double h, double Gamma0,
                                          int qmax = 64, double C = 1.0) {
    if (k != 0 && k != 2) throw std::invalid_argument("loc_contraction_factors: k in {0,2}");
    if (!(h > 0.0) || !(Gamma0 > 0.0)) throw std::domain_error("loc_contraction_factors: h, Gamma0 > 0");
    LocFactors r;
    double lterm = std::pow(std::log(static_cast<double>(L)) / (static_cast<double>(L) * L),
                            (k + 1) / 2.0);
    r.first_term = C * lterm;
    double rate = 2.0 * std::sqrt(beta) * h - beta * Gamma0; // per-q log increment
    double sum = 0.0;
    for (int q = 1; q <= qmax; ++q) {
        sum += std::exp(rate * q + 0.5 * beta * Gamma0);
        if (sum >= 1.0) {
            r.saturated = true;
            sum = 1.0;
            break;
        }
    }
    if (!r.saturated && rate >= 0.0) {
        // series diverges but the min{1, .} cap still applies
        r.saturated = true;
        sum = 1.0;
    } else if (!r.saturated) {
        // geometric tail bound
        double tail = std::exp(rate * (qmax + 1) + 0.5 * beta * Gamma0) / (1.0 - std::exp(rate));
        if (tail > 1e-12 && sum + tail >= 1.0) {
            r.saturated = true;
            sum = 1.0;
        }
    }
    r.charge_series = sum;
    r.value = r.first_term + C * sum;
    return r;
}

struct FlowResult {
    std::vector<CouplingState> trajectory;
    bool diverged = false;
    double alpha_hat = 0.0;  // fitted decay exponent of ||U_j|| ~ C L^{-alpha j}
    double fit_residual = 0.0;
    double A = 100.0, c_f = 0.0;
};

// iterate the flow to max_scale and fit log||U_j|| against -alpha j log L
inline FlowResult run_flow(const CouplingState& initial, const FlowSpec& spec, double A = 100.0,
                           double c_f = 0.0) {
    FlowResult out;
    out.A = A;
    out.c_f = c_f > 0.0 ? c_f : spec.gamma / 4.0;
    CouplingState st = initial;
    out.trajectory.push_back(st);
    for (int j = 0; j < spec.max_scale; ++j) {
        st = flow_step(st, spec);
        bool finite = std::isfinite(st.s);
        for (double zq : st.z) finite = finite && std::isfinite(zq);
        if (!finite || std::abs(st.s) > 1e100) {
            out.diverged = true;
            break;
        }
        out.trajectory.push_back(st);
    }
    // decay fit over scales with a nonzero norm
    std::vector<double> js, ln;
    for (const auto& t : out.trajectory) {
        double n = coupling_norm(t, A, out.c_f, spec.beta);
        if (n > 0.0 && std::isfinite(std::log(n))) {
            js.push_back(static_cast<double>(t.j));
            ln.push_back(std::log(n));
        }
    }
    if (js.size() >= 3) {
        double n = static_cast<double>(js.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < js.size(); ++i) {
            sx += js[i];
            sy += ln[i];
            sxx += js[i] * js[i];
            sxy += js[i] * ln[i];
        }
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        out.alpha_hat = -slope / std::log(static_cast<double>(spec.L));
        double b = (sy - slope * sx) / n;
        for (size_t i = 0; i < js.size(); ++i)
            out.fit_residual = std::max(out.fit_residual, std::abs(ln[i] - slope * js[i] - b));
    }
    return out;
}

// terminal stiffness s_J(s0) for the shooting problem
inline double flow_terminal_s(double s0, const std::vector<double>& z0, const FlowSpec& spec) {
    CouplingState st;
    st.s = s0;
    st.z = z0;
    for (int j = 0; j < spec.max_scale; ++j) st = flow_step(st, spec);
    return st.s;
}

// bisection for the initial stiffness whose trajectory lands on `target`
inline double stable_manifold_shoot(const FlowSpec& spec, const std::vector<double>& z0,
                                    double s_lo, double s_hi, double target = 0.0,
                                    double tol = 1e-10) {
    double flo = flow_terminal_s(s_lo, z0, spec) - target;
    double fhi = flow_terminal_s(s_hi, z0, spec) - target;
    if (flo == 0.0) return s_lo;
    if (fhi == 0.0) return s_hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::domain_error("stable_manifold_shoot: root not bracketed");
    // monotonicity spot check on a few interior samples
    double prev = flo;
    for (int i = 1; i <= 4; ++i) {
        double sm = s_lo + (s_hi - s_lo) * i / 5.0;
        double fm = flow_terminal_s(sm, z0, spec) - target;
        if ((fm - prev) * (fhi - flo) < 0.0)
            throw std::domain_error("stable_manifold_shoot: terminal map not monotone on bracket");
        prev = fm;
    }
    while (s_hi - s_lo > tol) {
        double mid = 0.5 * (s_lo + s_hi);
        double fm = flow_terminal_s(mid, z0, spec) - target;
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            s_lo = mid;
            flo = fm;
        } else {
            s_hi = mid;
        }
    }
    return 0.5 * (s_lo + s_hi);
}

} // namespace dglab
