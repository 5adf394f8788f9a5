#pragma once

// Periodic L^N x L^N lattice, discrete differential operators and scaled
// field norms.  The coordinate window is centred so that the distinguished
// origin is a lattice site for both odd and even L.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dglab {

using std::int64_t;

inline constexpr double pi = 3.14159265358979323846;

inline int64_t ipow(int64_t base, int exp) {
    int64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// offset ell_j(L): left edge of the origin block at scale j is -ell_j
inline int64_t block_offset(int L, int j) {
    int64_t Lj = ipow(L, j);
    if (L % 2 == 1) return (Lj - 1) / 2;
    return static_cast<int64_t>(L) * (Lj - 1) / (2 * (L - 1));
}

struct Torus {
    int L = 2;
    int N = 1;
    int64_t side = 2;   // L^N
    int64_t lo = 0;     // coordinate window [lo, lo+side-1]^2, lo = -ell_N

    Torus() = default;
    Torus(int L_, int N_) : L(L_), N(N_) {
        if (L < 2 || N < 1) throw std::invalid_argument("Torus: need L >= 2, N >= 1");
        side = ipow(L, N);
        lo = -block_offset(L, N);
    }
    // torus with a given side (for tori that are not L^N grids, e.g. MC boxes)
    static Torus with_side(int64_t side) {
        Torus t;
        t.L = static_cast<int>(side);
        t.N = 1;
        t.side = side;
        if (side < 2) throw std::invalid_argument("Torus: side >= 2");
        t.lo = -(side % 2 == 1 ? (side - 1) / 2 : side / 2);
        return t;
    }

    int64_t sites() const { return side * side; }
    int64_t wrap(int64_t c) const {
        int64_t r = (c - lo) % side;
        if (r < 0) r += side;
        return r;
    }
    int64_t index(int64_t x1, int64_t x2) const { return wrap(x2) * side + wrap(x1); }
    int64_t origin() const { return index(0, 0); }
    // coordinates of a site index, in the window [lo, lo+side-1]
    std::pair<int64_t, int64_t> coords(int64_t idx) const {
        return {lo + idx % side, lo + idx / side};
    }
    int64_t shift(int64_t idx, int64_t d1, int64_t d2) const {
        int64_t i1 = idx % side + d1, i2 = idx / side + d2;
        i1 %= side; if (i1 < 0) i1 += side;
        i2 %= side; if (i2 < 0) i2 += side;
        return i2 * side + i1;
    }
    // minimal wrap of a coordinate difference
    int64_t wrap_diff(int64_t d) const {
        d %= side; if (d < 0) d += side;
        if (2 * d > side) d -= side;
        return d;
    }
    int64_t dist_inf(int64_t i, int64_t j) const {
        int64_t d1 = std::abs(wrap_diff(i % side - j % side));
        int64_t d2 = std::abs(wrap_diff(i / side - j / side));
        return std::max(d1, d2);
    }
    double dist_2(int64_t i, int64_t j) const {
        double d1 = static_cast<double>(wrap_diff(i % side - j % side));
        double d2 = static_cast<double>(wrap_diff(i / side - j / side));
        return std::sqrt(d1 * d1 + d2 * d2);
    }
};

struct Field {
    const Torus* torus = nullptr;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Torus& t, double fill = 0.0) : torus(&t), v(t.sites(), fill) {}

    double& operator[](int64_t i) { return v[i]; }
    double operator[](int64_t i) const { return v[i]; }
    int64_t size() const { return static_cast<int64_t>(v.size()); }

    double sum() const {
        double s = 0;
        for (double x : v) s += x;
        return s;
    }
};

inline Field delta_at(const Torus& t, int64_t x1, int64_t x2, double w = 1.0) {
    Field f(t);
    f[t.index(x1, x2)] = w;
    return f;
}

inline double dot(const Field& f, const Field& g) {
    double s = 0;
    for (int64_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
    return s;
}

// unit directions +e1, -e1, +e2, -e2
inline constexpr int dir_dx[4] = {1, -1, 0, 0};
inline constexpr int dir_dy[4] = {0, 0, 1, -1};

// ordered list of directions; empty list is the identity
using MultiIndex = std::vector<int>;

// (-Delta + m^2) f with the stencil (-Delta f)(x) = 4 f(x) - sum_{y ~ x} f(y)
inline Field laplacian_apply(const Field& f, double m2 = 0.0) {
    const Torus& t = *f.torus;
    Field g(t);
    for (int64_t i = 0; i < f.size(); ++i) {
        double nb = f[t.shift(i, 1, 0)] + f[t.shift(i, -1, 0)] + f[t.shift(i, 0, 1)] + f[t.shift(i, 0, -1)];
        g[i] = (4.0 + m2) * f[i] - nb;
    }
    return g;
}

// forward difference in one direction: (grad^mu f)(x) = f(x+mu) - f(x)
inline Field grad_dir(const Field& f, int mu) {
    const Torus& t = *f.torus;
    Field g(t);
    for (int64_t i = 0; i < f.size(); ++i)
        g[i] = f[t.shift(i, dir_dx[mu], dir_dy[mu])] - f[i];
    return g;
}

// grad^{mu_n} ... grad^{mu_1} f, scaled by L^{|mu| j}
inline Field grad_apply(const Field& f, const MultiIndex& mu, int j = 0) {
    if (j < 0) throw std::invalid_argument("grad_apply: j >= 0");
    Field g = f;
    for (int m : mu) g = grad_dir(g, m);
    if (j > 0 && !mu.empty()) {
        double sc = std::pow(static_cast<double>(f.torus->L), static_cast<double>(mu.size()) * j);
        for (auto& x : g.v) x *= sc;
    }
    return g;
}

// all multi-indices of order n (4^n of them)
inline std::vector<MultiIndex> multi_indices(int n) {
    std::vector<MultiIndex> out{{}};
    for (int k = 0; k < n; ++k) {
        std::vector<MultiIndex> next;
        for (const auto& m : out)
            for (int d = 0; d < 4; ++d) {
                MultiIndex e = m;
                e.push_back(d);
                next.push_back(std::move(e));
            }
        out = std::move(next);
    }
    return out;
}

enum class NormKind { sup, l2_bulk, l2_boundary, c2 };

// sites of X with a site of X^c at sup-distance 1
inline std::vector<int64_t> boundary_sites(const Torus& t, const std::vector<int64_t>& X) {
    std::vector<char> in(t.sites(), 0);
    for (int64_t i : X) in[i] = 1;
    std::vector<int64_t> out;
    for (int64_t i : X) {
        bool bd = false;
        for (int d2 = -1; d2 <= 1 && !bd; ++d2)
            for (int d1 = -1; d1 <= 1 && !bd; ++d1)
                if ((d1 || d2) && !in[t.shift(i, d1, d2)]) bd = true;
        if (bd) out.push_back(i);
    }
    return out;
}

namespace detail {

inline double sup_norm_n(const Field& f, const std::vector<int64_t>& X, int j, int n) {
    double Lnj = std::pow(static_cast<double>(f.torus->L), static_cast<double>(n) * j);
    double best = 0;
    for (const auto& mu : multi_indices(n)) {
        Field g = grad_apply(f, mu, 0);
        for (int64_t i : X) best = std::max(best, std::abs(g[i]));
    }
    return Lnj * best;
}

inline double l2_norm_sq_n(const Field& f, const std::vector<int64_t>& X, int j, int n, bool boundary) {
    const Torus& t = *f.torus;
    double Lnj = std::pow(static_cast<double>(t.L), static_cast<double>(n) * j);
    double volw = boundary ? std::pow(static_cast<double>(t.L), -static_cast<double>(j))
                           : std::pow(static_cast<double>(t.L), -2.0 * j);
    double w = std::pow(2.0, -n);
    double s = 0;
    for (const auto& mu : multi_indices(n)) {
        Field g = grad_apply(f, mu, 0);
        for (int64_t i : X) {
            double v = Lnj * g[i];
            s += w * v * v;
        }
    }
    return volw * s;
}

} // namespace detail

// The four scaled norms of the field calculus.  For l2 kinds the n-th
// derivative level carries weight 2^{-n} and the volume factor L^{-2j}
// (bulk) or L^{-j} (boundary); c2 is max over n = 0,1,2 of the scaled sup.
inline double scaled_norm(const Field& f, const std::vector<int64_t>& X, int j, NormKind kind, int n = 1) {
    if (X.empty()) throw std::domain_error("scaled_norm: empty site set");
    if (n < 0 || n > 2) throw std::invalid_argument("scaled_norm: n in {0,1,2}");
    switch (kind) {
        case NormKind::sup:
            return detail::sup_norm_n(f, X, j, n);
        case NormKind::l2_bulk:
            return std::sqrt(detail::l2_norm_sq_n(f, X, j, n, false));
        case NormKind::l2_boundary: {
            auto bd = boundary_sites(*f.torus, X);
            if (bd.empty()) return 0.0;
            return std::sqrt(detail::l2_norm_sq_n(f, bd, j, n, true));
        }
        case NormKind::c2: {
            double best = 0;
            for (int k = 0; k <= 2; ++k) best = std::max(best, detail::sup_norm_n(f, X, j, k));
            return best;
        }
    }
    throw std::logic_error("scaled_norm: unreachable");
}

inline std::vector<int64_t> all_sites(const Torus& t) {
    std::vector<int64_t> v(t.sites());
    for (int64_t i = 0; i < t.sites(); ++i) v[i] = i;
    return v;
}

} // namespace dglab
