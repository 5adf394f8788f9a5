#pragma once

// Finite range decomposition C(s,m^2) = sum_j Gamma_j + Gamma_N^Lambda + t_N Q_N.
//
// Layers are cut out of the multiplier of C(s,m^2) by heat-kernel windows
//   P_j(lambda) = exp(-lambda t_j),  t_j = L^{2j} / c0,
//   w_1 = 1 - P_1,  w_j = P_{j-1} - P_j,  w_N = P_{N-1},
// which telescope to 1 exactly.  Heat windows make every layer positive
// semidefinite and give Gaussian real-space concentration at scale sqrt(t_j);
// the remaining (tiny) mass beyond the nominal range L^j/4 is moved into the
// next layer by a truncation cascade, so stored layers have exactly zero
// tail and the reconstruction identity stays exact.
//
// Layer profiles live on a "profile torus" of side P = L^min(N, k_cap); for
// P < L^N the difference from the full-torus profiles is the periodisation
// of a Gaussian tail at distance >= P - L^{N-1}/4 and is far below every
// tolerance used here.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dglab/fft.hpp"
#include "dglab/lattice.hpp"
#include "dglab/spectral.hpp"

namespace dglab {

struct FrdParams {
    int L = 8;
    int N = 5;
    double s = 0.0;
    double m2 = 0.0; // 0 builds the massless limit (t_N formally infinite)
    double gamma = 0.1;
    double c0 = 2000.0;
    int64_t profile_cap = 4096;
    double tail_tol = 1e-8;
    double eps_s = 0.2;
};

struct FrdLayer {
    int j = 0;
    int64_t range = 0; // sites with dist_inf >= range are exactly zero
    std::vector<double> profile;
    double pre_truncation_tail = 0.0; // relative |.|-mass beyond the range before truncation
};

struct FrdStack {
    FrdParams par;
    int64_t side = 0;         // full torus side L^N
    int64_t profile_side = 0; // P
    std::vector<FrdLayer> layers; // j = 1..N-1
    std::vector<double> last_profile; // Gamma_N^Lambda (plus truncation residuals)
    double last_zero_mode = 0.0;      // multiplier of Gamma_N^Lambda at p = 0
    double t_N = std::numeric_limits<double>::infinity();

    double multiplier_C(double lam) const {
        double cm = 1.0 / (lam + par.m2) - par.gamma;
        return cm / (1.0 + par.s * lam * cm);
    }
    double t_of(int j) const { return std::pow(static_cast<double>(par.L), 2.0 * j) / par.c0; }
    double window(int j, double lam) const {
        double lo = j >= 2 ? std::exp(-lam * t_of(j - 1)) : 1.0;
        return lo - std::exp(-lam * t_of(j));
    }
    Torus profile_torus() const {
        return Torus::with_side(profile_side);
    }
};

namespace detail {

inline int64_t frd_profile_side(int L, int N, int64_t cap) {
    int64_t p = L;
    int k = 1;
    while (k < N && p * L <= cap) {
        p *= L;
        ++k;
    }
    return p;
}

// relative |.|-mass of a profile at dist_inf >= range
inline double profile_tail(const std::vector<double>& prof, int64_t side, int64_t range) {
    double tot = 0.0, tail = 0.0;
    for (int64_t i2 = 0; i2 < side; ++i2) {
        int64_t d2 = std::min(i2, side - i2);
        for (int64_t i1 = 0; i1 < side; ++i1) {
            int64_t d1 = std::min(i1, side - i1);
            double a = std::abs(prof[i2 * side + i1]);
            tot += a;
            if (std::max(d1, d2) >= range) tail += a;
        }
    }
    return tot > 0.0 ? tail / tot : 0.0;
}

} // namespace detail

inline FrdStack build_frd(const FrdParams& par) {
    if (par.L < 2 || par.N < 2) throw std::invalid_argument("build_frd: L >= 2, N >= 2");
    if (!(par.m2 >= 0.0 && par.m2 <= 1.0)) throw std::invalid_argument("build_frd: m2 in [0,1]");
    if (std::abs(par.s) > par.eps_s) throw std::invalid_argument("build_frd: |s| <= eps_s");
    if (!(par.gamma > 0.0 && par.gamma < 1.0 / 3.0))
        throw std::invalid_argument("build_frd: gamma in (0,1/3)");

    FrdStack st;
    st.par = par;
    st.side = ipow(par.L, par.N);
    st.profile_side = detail::frd_profile_side(par.L, par.N, par.profile_cap);
    const int64_t P = st.profile_side;

    // admissibility: the multiplier of C(s, m2) must be nonnegative and its
    // denominator positive on the whole spectrum
    for (int i = 0; i <= 4096; ++i) {
        double lam = 8.0 * i / 4096.0;
        if (lam == 0.0 && par.m2 == 0.0) continue;
        double cm = 1.0 / (lam + par.m2) - par.gamma;
        double den = 1.0 + par.s * lam * cm;
        if (den <= 0.0) throw std::runtime_error("build_frd: C(s,m2) denominator not positive");
        if (cm / den < 0.0)
            throw std::runtime_error("build_frd: C(s,m2) multiplier negative (gamma too large)");
    }

    // lambda grid of the profile torus
    std::vector<double> lam1(P);
    for (int64_t i = 0; i < P; ++i) {
        double sh = std::sin(pi * static_cast<double>(i) / static_cast<double>(P));
        lam1[i] = 4.0 * sh * sh;
    }
    auto layer_multiplier_grid = [&](int j) {
        std::vector<double> m(static_cast<size_t>(P) * P);
        for (int64_t i2 = 0; i2 < P; ++i2)
            for (int64_t i1 = 0; i1 < P; ++i1) {
                double lam = lam1[i1] + lam1[i2];
                if (i1 == 0 && i2 == 0) {
                    if (par.m2 == 0.0) // smooth continuation of w_j(lam)/((1+s)lam) at 0
                        m[0] = (st.t_of(j) - (j >= 2 ? st.t_of(j - 1) : 0.0)) / (1.0 + par.s);
                    else
                        m[0] = 0.0; // w_j(0) = 0 exactly
                    continue;
                }
                m[i2 * P + i1] = st.window(j, lam) * st.multiplier_C(lam);
            }
        return m;
    };

    // layers with truncation cascade
    std::vector<double> carry; // residual pushed into the next layer
    for (int j = 1; j <= par.N - 1; ++j) {
        FrdLayer lay;
        lay.j = j;
        lay.range = std::max<int64_t>(1, ipow(par.L, j) / 4);
        lay.profile = multiplier_to_profile(layer_multiplier_grid(j), P);
        if (!carry.empty())
            for (size_t i = 0; i < lay.profile.size(); ++i) lay.profile[i] += carry[i];
        lay.pre_truncation_tail = detail::profile_tail(lay.profile, P, lay.range);
        carry.assign(lay.profile.size(), 0.0);
        for (int64_t i2 = 0; i2 < P; ++i2) {
            int64_t d2 = std::min(i2, P - i2);
            for (int64_t i1 = 0; i1 < P; ++i1) {
                int64_t d1 = std::min(i1, P - i1);
                if (std::max(d1, d2) >= lay.range) {
                    int64_t i = i2 * P + i1;
                    carry[i] = lay.profile[i];
                    lay.profile[i] = 0.0;
                }
            }
        }
        st.layers.push_back(std::move(lay));
    }

    // last layer: w_N * C off the zero mode; the zero-mode multiplier is the
    // continuation from the smallest full-torus momentum, the rest is t_N
    {
        double lam_ref = 4.0 * std::pow(std::sin(pi / static_cast<double>(st.side)), 2.0);
        st.last_zero_mode = std::exp(-lam_ref * st.t_of(par.N - 1)) * st.multiplier_C(lam_ref);
        std::vector<double> m(static_cast<size_t>(P) * P);
        for (int64_t i2 = 0; i2 < P; ++i2)
            for (int64_t i1 = 0; i1 < P; ++i1) {
                double lam = lam1[i1] + lam1[i2];
                if (i1 == 0 && i2 == 0) {
                    m[0] = st.last_zero_mode;
                    continue;
                }
                m[i2 * P + i1] = std::exp(-lam * st.t_of(par.N - 1)) * st.multiplier_C(lam);
            }
        st.last_profile = multiplier_to_profile(m, P);
        if (!carry.empty())
            for (size_t i = 0; i < st.last_profile.size(); ++i) st.last_profile[i] += carry[i];
        if (par.m2 > 0.0)
            st.t_N = (1.0 / par.m2 - par.gamma) - st.last_zero_mode;
        else
            st.t_N = std::numeric_limits<double>::infinity();
    }
    return st;
}

// (f, Gamma f) by direct double sum over the support of f
inline double frd_qform(const FrdStack& st, const std::vector<double>& profile, const Field& f) {
    const Torus t = st.profile_torus();
    std::vector<std::pair<int64_t, double>> supp;
    for (int64_t i = 0; i < f.size(); ++i)
        if (f[i] != 0.0) supp.emplace_back(i, f[i]);
    double acc = 0.0;
    const int64_t P = st.profile_side;
    for (auto [i, fi] : supp)
        for (auto [k, fk] : supp) {
            int64_t d1 = (i % P - k % P), d2 = (i / P - k / P);
            d1 %= P; if (d1 < 0) d1 += P;
            d2 %= P; if (d2 < 0) d2 += P;
            acc += fi * fk * profile[d2 * P + d1];
        }
    return acc;
}

struct FrdReport {
    bool pass = true;
    double momentum_identity_residual = 0.0; // window partition vs 1, sampled on the full torus
    double profile_identity_residual = 0.0;  // real-space reconstruction on the profile torus
    std::vector<double> tails;               // per stored layer, relative mass beyond range
    std::vector<double> pre_truncation_tails;
    std::vector<double> diag;        // Gamma_j(0,0)
    std::vector<double> gamma3_ratio; // diag * 2pi(1+s)/log L
    std::vector<double> C0_fit;      // sup|Gamma_j| / log L
    std::vector<double> C1_fit;      // sup|grad Gamma_j| * L^{j-1}
    std::vector<double> C2_fit;      // sup|grad^2 Gamma_j| * L^{2(j-1)}
    double symmetry_residual = 0.0;
    double tN = 0.0;
    bool tN_in_window = true;
    std::vector<double> m2_continuity; // |diag(m2_k) - diag(m2_{k+1})| for the deepest layer
    std::string note;
};

inline FrdReport verify_frd(const FrdStack& st, double identity_tol = 1e-10) {
    FrdReport rep;
    const int64_t P = st.profile_side;
    const auto& par = st.par;

    // (a) multiplier partition on sampled full-torus momenta: the windows
    // telescope to 1, so sum_layers + last = C exactly; verified numerically
    {
        double worst = 0.0;
        int64_t M = st.side;
        for (int64_t k = 1; k < 4096; k += 7) {
            int64_t k1 = (k * 2654435761LL) % M, k2 = (k * 40503LL) % M;
            if (k1 == 0 && k2 == 0) continue;
            double l1 = 4.0 * std::pow(std::sin(pi * static_cast<double>(k1) / M), 2.0);
            double l2 = 4.0 * std::pow(std::sin(pi * static_cast<double>(k2) / M), 2.0);
            double lam = l1 + l2;
            double sum = std::exp(-lam * st.t_of(par.N - 1));
            for (int j = 1; j <= par.N - 1; ++j) sum += st.window(j, lam);
            worst = std::max(worst, std::abs(sum - 1.0) * std::abs(st.multiplier_C(lam)));
        }
        rep.momentum_identity_residual = worst;
    }

    // (b) real-space reconstruction on the profile torus: the truncation
    // cascade moves mass between layers without changing the sum
    {
        std::vector<double> sum(st.last_profile);
        for (const auto& lay : st.layers)
            for (size_t i = 0; i < sum.size(); ++i) sum[i] += lay.profile[i];
        // reference: profile of C(s,m2) on the profile torus with the same
        // zero-mode convention as the stack
        std::vector<double> m(static_cast<size_t>(P) * P);
        double zm = st.last_zero_mode;
        if (par.m2 == 0.0)
            for (const auto& lay : st.layers)
                zm += (st.t_of(lay.j) - (lay.j >= 2 ? st.t_of(lay.j - 1) : 0.0)) / (1.0 + par.s);
        for (int64_t i2 = 0; i2 < P; ++i2)
            for (int64_t i1 = 0; i1 < P; ++i1) {
                if (i1 == 0 && i2 == 0) {
                    m[0] = zm;
                    continue;
                }
                double s1 = std::sin(pi * static_cast<double>(i1) / P);
                double s2 = std::sin(pi * static_cast<double>(i2) / P);
                m[i2 * P + i1] = st.multiplier_C(4.0 * (s1 * s1 + s2 * s2));
            }
        auto ref = multiplier_to_profile(m, P);
        double worst = 0.0, scale = 0.0;
        for (size_t i = 0; i < sum.size(); ++i) {
            worst = std::max(worst, std::abs(sum[i] - ref[i]));
            scale = std::max(scale, std::abs(ref[i]));
        }
        rep.profile_identity_residual = worst / scale;
        if (rep.profile_identity_residual > identity_tol) rep.pass = false;
    }

    double logL = std::log(static_cast<double>(par.L));
    for (const auto& lay : st.layers) {
        rep.tails.push_back(detail::profile_tail(lay.profile, P, lay.range));
        rep.pre_truncation_tails.push_back(lay.pre_truncation_tail);
        rep.diag.push_back(lay.profile[0]);
        rep.gamma3_ratio.push_back(lay.profile[0] * 2.0 * pi * (1.0 + par.s) / logL);
        double sup = 0.0, sup1 = 0.0, sup2 = 0.0, asym = 0.0;
        for (int64_t i2 = 0; i2 < P; ++i2)
            for (int64_t i1 = 0; i1 < P; ++i1) {
                double v = lay.profile[i2 * P + i1];
                sup = std::max(sup, std::abs(v));
                double vx = lay.profile[i2 * P + (i1 + 1) % P] - v;
                double vxx = lay.profile[i2 * P + (i1 + 1) % P] + lay.profile[i2 * P + (i1 + P - 1) % P] - 2 * v;
                sup1 = std::max(sup1, std::abs(vx));
                sup2 = std::max(sup2, std::abs(vxx));
                asym = std::max(asym, std::abs(v - lay.profile[i1 * P + i2])); // transpose symmetry
                asym = std::max(asym, std::abs(v - lay.profile[((P - i2) % P) * P + i1])); // reflection
            }
        rep.C0_fit.push_back(sup / logL);
        rep.C1_fit.push_back(sup1 * std::pow(static_cast<double>(par.L), static_cast<double>(lay.j - 1)));
        rep.C2_fit.push_back(sup2 * std::pow(static_cast<double>(par.L), 2.0 * (lay.j - 1)));
        rep.symmetry_residual = std::max(rep.symmetry_residual, asym);
        if (rep.tails.back() > par.tail_tol) rep.pass = false;
    }

    rep.tN = st.t_N;
    if (par.m2 > 0.0) {
        double lo = std::max(1.0 / par.m2 - 100.0 * std::pow(static_cast<double>(par.L), 2.0 * par.N), 0.0);
        rep.tN_in_window = st.t_N > lo && st.t_N < 1.0 / par.m2;
        if (!rep.tN_in_window) rep.pass = false;
    }

    // m2-continuity of the deepest layer diagonal near the massless limit
    {
        int j = par.N - 1;
        auto diag_at = [&](double m2) {
            // diagonal = mean of the layer multiplier over the profile grid
            double acc = 0.0;
            for (int64_t i2 = 0; i2 < P; ++i2) {
                double s2 = std::sin(pi * static_cast<double>(i2) / P);
                for (int64_t i1 = 0; i1 < P; ++i1) {
                    if (i1 == 0 && i2 == 0) continue;
                    double s1 = std::sin(pi * static_cast<double>(i1) / P);
                    double lam = 4.0 * (s1 * s1 + s2 * s2);
                    double cm = 1.0 / (lam + m2) - par.gamma;
                    acc += st.window(j, lam) * cm / (1.0 + par.s * lam * cm);
                }
            }
            return acc / (static_cast<double>(P) * P);
        };
        double prev = diag_at(1e-2);
        for (double m2 : {1e-4, 1e-6, 1e-8}) {
            double cur = diag_at(m2);
            rep.m2_continuity.push_back(std::abs(cur - prev));
            prev = cur;
        }
    }
    return rep;
}

// ---- external field decomposition -------------------------------------------

struct ExternalFieldSeq {
    std::vector<Field> u; // u[0] = gamma f, u[j] = Gamma_j (1 + s gamma Delta) f, u[N] last scale
    bool support_guaranteed = true;
    double sum_identity_residual = 0.0; // sup |sum_j u_j - Ctilde ftilde|
    std::vector<double> c2_norms;       // ||u_j||_{C^2_{max(0,j-1)}}
};

// u_{j,alpha} for a compactly supported cluster f_alpha living near the origin
// of the profile torus
inline ExternalFieldSeq external_fields(const FrdStack& st, const Field& f_alpha, double gamma) {
    const Torus t = st.profile_torus();
    if (f_alpha.torus->side != st.profile_side)
        throw std::invalid_argument("external_fields: f must live on the profile torus");
    const auto& par = st.par;
    // rho = diameter of the support
    int64_t rho = 0;
    std::vector<int64_t> supp;
    for (int64_t i = 0; i < f_alpha.size(); ++i)
        if (f_alpha[i] != 0.0) supp.push_back(i);
    if (supp.empty()) throw std::invalid_argument("external_fields: empty cluster");
    for (int64_t a : supp)
        for (int64_t b : supp) rho = std::max(rho, t.dist_inf(a, b));

    ExternalFieldSeq out;
    out.support_guaranteed = par.L >= 12 * (rho + 2);

    // ftilde = (1 + s gamma Delta) f = f - s gamma (-Delta) f
    Field lap = laplacian_apply(f_alpha, 0.0);
    Field ftilde = f_alpha;
    for (int64_t i = 0; i < ftilde.size(); ++i) ftilde[i] -= par.s * gamma * lap[i];

    // u_0 = gamma f
    Field u0 = f_alpha;
    for (auto& v : u0.v) v *= gamma;
    out.u.push_back(std::move(u0));

    // convolution against the support of ftilde (one site wider than f)
    auto convolve_ft = [&](const std::vector<double>& prof) {
        Field g(t);
        const int64_t P = st.profile_side;
        for (int64_t i = 0; i < ftilde.size(); ++i) {
            double fv = ftilde[i];
            if (fv == 0.0) continue;
            int64_t i1 = i % P, i2 = i / P;
            for (int64_t k2 = 0; k2 < P; ++k2)
                for (int64_t k1 = 0; k1 < P; ++k1) {
                    int64_t d1 = (k1 - i1 + P) % P, d2 = (k2 - i2 + P) % P;
                    g[k2 * P + k1] += fv * prof[d2 * P + d1];
                }
        }
        return g;
    };

    for (const auto& lay : st.layers) out.u.push_back(convolve_ft(lay.profile));
    out.u.push_back(convolve_ft(st.last_profile));

    // defining identity: sum_{j>=1} u_j = Ctilde(s) ftilde, where Ctilde is the
    // sum of all layers (zero mode per stack convention)
    {
        std::vector<double> csum(st.last_profile);
        for (const auto& lay : st.layers)
            for (size_t i = 0; i < csum.size(); ++i) csum[i] += lay.profile[i];
        Field ref = convolve_ft(csum);
        Field sum(t);
        for (size_t j = 1; j < out.u.size(); ++j)
            for (int64_t i = 0; i < sum.size(); ++i) sum[i] += out.u[j][i];
        for (int64_t i = 0; i < sum.size(); ++i)
            out.sum_identity_residual = std::max(out.sum_identity_residual, std::abs(sum[i] - ref[i]));
    }

    // scaled C^2 norms
    auto sites = all_sites(t);
    for (size_t j = 0; j < out.u.size(); ++j) {
        int jj = std::max<int>(0, static_cast<int>(j) - 1);
        out.c2_norms.push_back(scaled_norm(out.u[j], sites, jj, NormKind::c2));
    }
    return out;
}

// ---- serialization -----------------------------------------------------------

inline void save_frd(const FrdStack& st, const std::string& path) {
    nlohmann::json meta;
    meta["format"] = "dglab-frd-v1";
    meta["L"] = st.par.L;
    meta["N"] = st.par.N;
    meta["s"] = st.par.s;
    meta["m2"] = st.par.m2;
    meta["gamma"] = st.par.gamma;
    meta["c0"] = st.par.c0;
    meta["tail_tol"] = st.par.tail_tol;
    meta["profile_side"] = st.profile_side;
    meta["t_N"] = std::isfinite(st.t_N) ? st.t_N : -1.0;
    meta["last_zero_mode"] = st.last_zero_mode;
    std::vector<int64_t> ranges;
    for (const auto& l : st.layers) ranges.push_back(l.range);
    meta["ranges"] = ranges;
    std::string hdr = meta.dump();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_frd: cannot open " + path);
    const char magic[8] = {'D', 'G', 'F', 'R', 'D', '1', '\n', 0};
    os.write(magic, 8);
    uint64_t n = hdr.size();
    os.write(reinterpret_cast<const char*>(&n), 8);
    os.write(hdr.data(), static_cast<std::streamsize>(n));
    for (const auto& l : st.layers)
        os.write(reinterpret_cast<const char*>(l.profile.data()),
                 static_cast<std::streamsize>(l.profile.size() * 8));
    os.write(reinterpret_cast<const char*>(st.last_profile.data()),
             static_cast<std::streamsize>(st.last_profile.size() * 8));
}

inline FrdStack load_frd(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_frd: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::string(magic, 6) != "DGFRD1") throw std::runtime_error("load_frd: bad magic");
    uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), 8);
    std::string hdr(n, '\0');
    is.read(hdr.data(), static_cast<std::streamsize>(n));
    auto meta = nlohmann::json::parse(hdr);
    FrdStack st;
    st.par.L = meta["L"];
    st.par.N = meta["N"];
    st.par.s = meta["s"];
    st.par.m2 = meta["m2"];
    st.par.gamma = meta["gamma"];
    st.par.c0 = meta["c0"];
    st.par.tail_tol = meta["tail_tol"];
    st.side = ipow(st.par.L, st.par.N);
    st.profile_side = meta["profile_side"];
    double tn = meta["t_N"];
    st.t_N = tn < 0.0 ? std::numeric_limits<double>::infinity() : tn;
    st.last_zero_mode = meta["last_zero_mode"];
    std::vector<int64_t> ranges = meta["ranges"];
    size_t cells = static_cast<size_t>(st.profile_side) * st.profile_side;
    for (size_t j = 0; j < ranges.size(); ++j) {
        FrdLayer l;
        l.j = static_cast<int>(j) + 1;
        l.range = ranges[j];
        l.profile.resize(cells);
        is.read(reinterpret_cast<char*>(l.profile.data()), static_cast<std::streamsize>(cells * 8));
        st.layers.push_back(std::move(l));
    }
    st.last_profile.resize(cells);
    is.read(reinterpret_cast<char*>(st.last_profile.data()), static_cast<std::streamsize>(cells * 8));
    if (!is) throw std::runtime_error("load_frd: truncated file");
    return st;
}

} // namespace dglab
