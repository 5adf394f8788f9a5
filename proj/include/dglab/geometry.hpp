#pragma once

// Hierarchical blocks and polymers on the torus, small-set calculus,
// coalescence scale, reblocking enumeration and the regulator functionals.
//
// Blocks at scale j are the L^j Z^2 translates of the origin block
// B_0^j = [-ell_j, L^j - ell_j - 1]^2; a polymer is a set of block indices.
// Block adjacency (sup-distance <= 1 between the site sets, diagonal counts)
// is 8-neighbour adjacency of block indices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "dglab/lattice.hpp"

namespace dglab {

struct BlockGrid {
    int L = 2;
    int N = 1;
    int j = 0;
    int64_t blocks_per_axis = 1; // L^{N-j}
    int64_t block_side = 1;      // L^j
    int64_t ell = 0;             // ell_j(L)

    BlockGrid(int L_, int N_, int j_) : L(L_), N(N_), j(j_) {
        if (j < 0 || j > N) throw std::domain_error("BlockGrid: 0 <= j <= N");
        blocks_per_axis = ipow(L, N - j);
        block_side = ipow(L, j);
        ell = block_offset(L, j);
    }
    int64_t count() const { return blocks_per_axis * blocks_per_axis; }
    int64_t index(int64_t b1, int64_t b2) const {
        int64_t n = blocks_per_axis;
        b1 %= n; if (b1 < 0) b1 += n;
        b2 %= n; if (b2 < 0) b2 += n;
        return b2 * n + b1;
    }
    std::pair<int64_t, int64_t> coords(int64_t b) const {
        return {b % blocks_per_axis, b / blocks_per_axis};
    }
    // anchor (lower-left corner) of block b in lattice coordinates
    std::pair<int64_t, int64_t> anchor(int64_t b) const {
        auto [b1, b2] = coords(b);
        return {-ell + b1 * block_side, -ell + b2 * block_side};
    }
    // block containing the lattice site (x1, x2)
    int64_t block_of(int64_t x1, int64_t x2) const {
        auto fdiv = [](int64_t a, int64_t b) {
            int64_t q = a / b;
            if (a % b != 0 && ((a < 0) != (b < 0))) --q;
            return q;
        };
        return index(fdiv(x1 + ell, block_side), fdiv(x2 + ell, block_side));
    }
    // all sites of block b (row-major site indices on the torus t)
    std::vector<int64_t> block_sites(const Torus& t, int64_t b) const {
        auto [a1, a2] = anchor(b);
        std::vector<int64_t> out;
        out.reserve(block_side * block_side);
        for (int64_t y = 0; y < block_side; ++y)
            for (int64_t x = 0; x < block_side; ++x) out.push_back(t.index(a1 + x, a2 + y));
        return out;
    }
};

// polymer at scale j: sorted set of block indices
struct Polymer {
    std::vector<int64_t> blocks;

    static Polymer of(std::vector<int64_t> b) {
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return Polymer{std::move(b)};
    }
    bool empty() const { return blocks.empty(); }
    int64_t size() const { return static_cast<int64_t>(blocks.size()); }
    bool contains(int64_t b) const {
        return std::binary_search(blocks.begin(), blocks.end(), b);
    }
};

inline std::vector<Polymer> block_partition(const BlockGrid& g) {
    std::vector<Polymer> out;
    out.reserve(g.count());
    for (int64_t b = 0; b < g.count(); ++b) out.push_back(Polymer{{b}});
    return out;
}

namespace detail {

// 8-neighbour block indices with torus wrap (deduplicated for tiny grids)
inline std::vector<int64_t> block_neighbors(const BlockGrid& g, int64_t b) {
    auto [b1, b2] = g.coords(b);
    std::set<int64_t> out;
    for (int d2 = -1; d2 <= 1; ++d2)
        for (int d1 = -1; d1 <= 1; ++d1) {
            if (!d1 && !d2) continue;
            int64_t nb = g.index(b1 + d1, b2 + d2);
            if (nb != b) out.insert(nb);
        }
    return {out.begin(), out.end()};
}

} // namespace detail

inline bool polymer_connected(const BlockGrid& g, const Polymer& X) {
    if (X.empty()) return false;
    std::vector<int64_t> stack{X.blocks[0]};
    std::set<int64_t> seen{X.blocks[0]};
    while (!stack.empty()) {
        int64_t b = stack.back();
        stack.pop_back();
        for (int64_t nb : detail::block_neighbors(g, b))
            if (X.contains(nb) && seen.insert(nb).second) stack.push_back(nb);
    }
    return static_cast<int64_t>(seen.size()) == X.size();
}

inline std::vector<Polymer> polymer_components(const BlockGrid& g, const Polymer& X) {
    std::vector<Polymer> comps;
    std::set<int64_t> left(X.blocks.begin(), X.blocks.end());
    while (!left.empty()) {
        int64_t root = *left.begin();
        std::vector<int64_t> comp, stack{root};
        left.erase(root);
        while (!stack.empty()) {
            int64_t b = stack.back();
            stack.pop_back();
            comp.push_back(b);
            for (int64_t nb : detail::block_neighbors(g, b))
                if (left.count(nb)) {
                    left.erase(nb);
                    stack.push_back(nb);
                }
        }
        comps.push_back(Polymer::of(std::move(comp)));
    }
    return comps;
}

// connected block shapes of at most max_size blocks containing (0,0), as
// offset lists; cached per max_size (finitely many shapes)
inline const std::vector<std::vector<std::pair<int, int>>>& small_set_shapes(int max_size = 4) {
    static std::map<int, std::vector<std::vector<std::pair<int, int>>>> cache;
    auto it = cache.find(max_size);
    if (it != cache.end()) return it->second;
    std::set<std::vector<std::pair<int, int>>> shapes;
    std::vector<std::pair<int, int>> cur{{0, 0}};
    std::vector<std::vector<std::pair<int, int>>> frontier{cur};
    shapes.insert(cur);
    for (int sz = 1; sz < max_size; ++sz) {
        std::vector<std::vector<std::pair<int, int>>> next;
        for (const auto& sh : frontier) {
            for (const auto& [x, y] : sh)
                for (int d2 = -1; d2 <= 1; ++d2)
                    for (int d1 = -1; d1 <= 1; ++d1) {
                        if (!d1 && !d2) continue;
                        std::pair<int, int> cand{x + d1, y + d2};
                        if (std::find(sh.begin(), sh.end(), cand) != sh.end()) continue;
                        auto ext = sh;
                        ext.push_back(cand);
                        std::sort(ext.begin(), ext.end());
                        if (shapes.insert(ext).second) next.push_back(ext);
                    }
        }
        frontier = std::move(next);
    }
    auto& out = cache[max_size];
    out.assign(shapes.begin(), shapes.end());
    return out;
}

struct SmallSetOps {
    bool is_small = false;
    Polymer star;    // union of small polymers intersecting X
    Polymer closure; // smallest (j+1)-polymer containing X
    int64_t size = 0;
};

// closure of a j-polymer: indices of the (j+1)-blocks meeting it
inline Polymer polymer_closure(const BlockGrid& g, const Polymer& X) {
    if (g.j + 1 > g.N) throw std::domain_error("polymer_closure: no coarser scale");
    // j-block b sits inside the (j+1)-block floor((b + delta)/L) per axis
    int64_t delta = (block_offset(g.L, g.j + 1) - g.ell) / g.block_side;
    std::vector<int64_t> out;
    BlockGrid gc(g.L, g.N, g.j + 1);
    auto fdiv = [](int64_t a, int64_t b) {
        int64_t q = a / b;
        if (a % b != 0 && ((a < 0) != (b < 0))) --q;
        return q;
    };
    for (int64_t b : X.blocks) {
        auto [b1, b2] = g.coords(b);
        out.push_back(gc.index(fdiv(b1 + delta, g.L), fdiv(b2 + delta, g.L)));
    }
    return Polymer::of(std::move(out));
}

// refinement: the j-blocks inside a (j+1)-polymer
inline Polymer polymer_refine(const BlockGrid& gc, const Polymer& X) {
    if (gc.j == 0) throw std::domain_error("polymer_refine: already at scale 0");
    BlockGrid gf(gc.L, gc.N, gc.j - 1);
    int64_t delta = (gc.ell - gf.ell) / gf.block_side;
    std::vector<int64_t> out;
    for (int64_t b : X.blocks) {
        auto [b1, b2] = gc.coords(b);
        for (int64_t d2 = 0; d2 < gc.L; ++d2)
            for (int64_t d1 = 0; d1 < gc.L; ++d1)
                out.push_back(gf.index(b1 * gc.L - delta + d1, b2 * gc.L - delta + d2));
    }
    return Polymer::of(std::move(out));
}

inline SmallSetOps small_set_ops(const BlockGrid& g, const Polymer& X) {
    SmallSetOps r;
    r.size = X.size();
    if (X.empty()) return r;
    r.is_small = X.size() <= 4 && polymer_connected(g, X);
    std::set<int64_t> star;
    const auto& shapes = small_set_shapes(4);
    for (int64_t b : X.blocks) {
        auto [b1, b2] = g.coords(b);
        for (const auto& sh : shapes)
            for (const auto& [ox, oy] : sh)       // shape placed so that one cell covers b
                for (const auto& [tx, ty] : sh)
                    star.insert(g.index(b1 - ox + tx, b2 - oy + ty));
    }
    r.star = Polymer::of({star.begin(), star.end()});
    if (g.j + 1 <= g.N) r.closure = polymer_closure(g, X);
    return r;
}

// ---- coalescence scale (on Z^2, block-index arithmetic) ---------------------

struct Coalescence {
    int j0y = 0;
    // block-index coordinates (scale j0y) of B_1..B_4 making up Q_y
    std::vector<std::pair<int64_t, int64_t>> q_blocks;
};

// j0y = min{ j : (B_0^j)*** meets Q_y^j }; the triple small-set neighbourhood
// of a block is the sup-ball of block radius 9
inline Coalescence coalescence(int64_t y1, int64_t y2, int L, int max_scale = 62) {
    auto fdiv = [](int64_t a, int64_t b) {
        int64_t q = a / b;
        if (a % b != 0 && ((a < 0) != (b < 0))) --q;
        return q;
    };
    Coalescence r;
    for (int j = 0; j <= max_scale; ++j) {
        int64_t Lj = ipow(L, j);
        int64_t b1 = fdiv(y1, Lj), b2 = fdiv(y2, Lj);
        r.q_blocks = {{b1, b2}, {b1 + 1, b2}, {b1, b2 + 1}, {b1 + 1, b2 + 1}};
        for (auto [q1, q2] : r.q_blocks)
            if (std::max(std::abs(q1), std::abs(q2)) <= 9) {
                r.j0y = j;
                return r;
            }
        if (Lj > (std::abs(y1) + std::abs(y2)) * 2 + 2) break; // cannot fail beyond this
    }
    throw std::runtime_error("coalescence: scale search did not terminate");
}

// ---- reblocking enumeration --------------------------------------------------

enum class ReblockFilter { all, connected, large };

struct ReblockEnumeration {
    // count of enumerated polymers Y (scale j, closure = X) by block count
    std::vector<int64_t> count_by_size;
    int64_t total = 0;
    bool truncated = false;   // size cap hit; counts beyond size_cap are absent
    int size_cap = 0;
    // certified bound on sum_{|Y| > size_cap} A^{-|Y|} over ALL subsets of the
    // candidate region (connected or not), valid for any A >= 2
    double tail_bound_coeff = 0.0; // sum_{k > cap} C(ncand, k) 2^{-k} * 2^{cap}... see weighted_sum
    int64_t candidate_cells = 0;

    // sum over enumerated Y of A^{-|Y|}
    double weighted_sum(double A) const {
        double s = 0.0;
        for (size_t k = 0; k < count_by_size.size(); ++k)
            if (count_by_size[k] > 0) s += static_cast<double>(count_by_size[k]) * std::pow(A, -static_cast<double>(k));
        return s;
    }
    // bound on the omitted tail of the weighted sum
    double tail_bound(double A) const {
        if (!truncated) return 0.0;
        double s = 0.0, logA = std::log(A);
        for (int64_t k = size_cap + 1; k <= candidate_cells; ++k) {
            double logc = 0.0; // log C(n, k)
            for (int64_t i = 0; i < k; ++i)
                logc += std::log(static_cast<double>(candidate_cells - i)) - std::log(static_cast<double>(i + 1));
            s += std::exp(logc - logA * static_cast<double>(k));
        }
        return s;
    }
};

namespace detail {

// enumerate connected subsets of an explicit cell graph (adjacency lists),
// each exactly once, up to max_size cells; cb(size) is called per subset.
// Standard scheme: subsets containing cell r but no cell < r, grown by a
// frontier of eligible neighbours.
template <typename Cb>
inline void enumerate_connected_subsets(const std::vector<std::vector<int>>& adj, int max_size, Cb&& cb) {
    int n = static_cast<int>(adj.size());
    std::vector<char> in(n, 0), banned(n, 0);
    std::vector<int> sub;
    // recursive lambda over the extension frontier
    auto rec = [&](auto&& self, std::vector<int>& frontier) -> void {
        cb(sub);
        if (static_cast<int>(sub.size()) == max_size) return;
        // pick each frontier cell in turn; after trying it, ban it for siblings
        std::vector<int> local_banned;
        for (size_t fi = 0; fi < frontier.size(); ++fi) {
            int c = frontier[fi];
            if (banned[c] || in[c]) continue;
            in[c] = 1;
            sub.push_back(c);
            std::vector<int> next(frontier.begin() + fi + 1, frontier.end());
            for (int nb : adj[c])
                if (!in[nb] && !banned[nb]) next.push_back(nb);
            self(self, next);
            sub.pop_back();
            in[c] = 0;
            banned[c] = 1;
            local_banned.push_back(c);
        }
        for (int c : local_banned) banned[c] = 0;
    };
    std::vector<char> root_banned(n, 0);
    for (int r = 0; r < n; ++r) {
        in[r] = 1;
        sub.push_back(r);
        std::vector<int> frontier;
        for (int nb : adj[r])
            if (!banned[nb]) frontier.push_back(nb);
        rec(rec, frontier);
        sub.pop_back();
        in[r] = 0;
        banned[r] = 1; // subsets containing r are done
    }
    std::fill(banned.begin(), banned.end(), 0);
}

} // namespace detail

// enumerate j-polymers Y with closure(Y) = X, for X a (j+1)-polymer of at
// most 3 blocks; returns counts by size. Enumeration is capped at size_cap
// cells (resource guard); the omitted tail is certified via tail_bound().
inline ReblockEnumeration reblock_enumerate(const BlockGrid& gc, const Polymer& X,
                                            ReblockFilter filter, int size_cap = 0) {
    if (X.empty() || X.size() > 3)
        throw std::domain_error("reblock_enumerate: 1..3 coarse blocks (resource budget)");
    Polymer region = polymer_refine(gc, X);
    int ncand = static_cast<int>(region.size());
    if (size_cap <= 0) size_cap = std::min(ncand, ncand <= 16 ? 16 : 12);

    BlockGrid gf(gc.L, gc.N, gc.j - 1);
    // local adjacency among candidate cells
    std::map<int64_t, int> id;
    for (int i = 0; i < ncand; ++i) id[region.blocks[i]] = i;
    std::vector<std::vector<int>> adj(ncand);
    for (int i = 0; i < ncand; ++i)
        for (int64_t nb : detail::block_neighbors(gf, region.blocks[i]))
            if (auto it = id.find(nb); it != id.end()) adj[i].push_back(it->second);
    // which coarse block each candidate cell belongs to
    std::vector<int> coarse_of(ncand);
    {
        std::map<int64_t, int> cid;
        for (int i = 0; i < static_cast<int>(X.size()); ++i) cid[X.blocks[i]] = i;
        for (int i = 0; i < ncand; ++i) {
            Polymer single{{region.blocks[i]}};
            coarse_of[i] = cid.at(polymer_closure(gf, single).blocks[0]);
        }
    }
    int ncoarse = static_cast<int>(X.size());

    ReblockEnumeration out;
    out.count_by_size.assign(size_cap + 1, 0);
    out.size_cap = size_cap;
    out.candidate_cells = ncand;
    out.truncated = size_cap < ncand;
    detail::enumerate_connected_subsets(adj, size_cap, [&](const std::vector<int>& sub) {
        if (sub.empty()) return;
        int mask = 0;
        for (int c : sub) mask |= 1 << coarse_of[c];
        if (mask != (1 << ncoarse) - 1) return; // closure smaller than X
        int64_t sz = static_cast<int64_t>(sub.size());
        if (filter == ReblockFilter::large && sz <= 4) return;
        out.count_by_size[sz] += 1;
        out.total += 1;
    });
    return out;
}

// exhaustive closure-check over all (connected) subsets of the refinement of
// a single coarse block; independent oracle for reblock_enumerate
inline ReblockEnumeration reblock_bitmask_oracle(const BlockGrid& gc, const Polymer& X,
                                                 ReblockFilter filter) {
    if (X.size() != 1) throw std::domain_error("reblock_bitmask_oracle: single block only");
    Polymer region = polymer_refine(gc, X);
    int n = static_cast<int>(region.size());
    if (n > 25) throw std::domain_error("reblock_bitmask_oracle: region too large");
    BlockGrid gf(gc.L, gc.N, gc.j - 1);
    std::map<int64_t, int> id;
    for (int i = 0; i < n; ++i) id[region.blocks[i]] = i;
    std::vector<uint32_t> nbmask(n, 0);
    for (int i = 0; i < n; ++i)
        for (int64_t nb : detail::block_neighbors(gf, region.blocks[i]))
            if (auto it = id.find(nb); it != id.end()) nbmask[i] |= 1u << it->second;
    ReblockEnumeration out;
    out.count_by_size.assign(n + 1, 0);
    out.size_cap = n;
    out.candidate_cells = n;
    for (uint32_t m = 1; m < (1u << n); ++m) {
        int sz = __builtin_popcount(m);
        if (filter == ReblockFilter::large && sz <= 4) continue;
        // flood fill from lowest bit
        uint32_t comp = m & (~m + 1);
        while (true) {
            uint32_t grow = comp;
            uint32_t frontier = comp;
            while (frontier) {
                int b = __builtin_ctz(frontier);
                frontier &= frontier - 1;
                grow |= nbmask[b] & m;
            }
            if (grow == comp) break;
            comp = grow;
        }
        bool connected = comp == m;
        if (filter != ReblockFilter::all && !connected) continue;
        out.count_by_size[sz] += 1;
        out.total += 1;
    }
    return out;
}

// ---- regulator ---------------------------------------------------------------

struct RegulatorParams {
    double kappa = 0.0; // defaults to c_kappa / log(L) when 0
    double c_kappa = 0.01;
    double c2 = 0.1;
    double c4 = 1.0;
    double cw = 0.01;
};

struct RegulatorValue {
    double G = 1.0;
    double strongG = 1.0;
    double bulk = 0.0;     // ||grad_j phi||^2_{L2_j(X)}
    double boundary = 0.0; // ||grad_j phi||^2_{L2_j(dX)}
    double Wsq = 0.0;      // sum_B ||grad^2_j phi||^2_{Linf(B*)}
    double wsq = 0.0;      // sum_B max_{n=1,2} ||grad^n_j phi||^2_{Linf(B*)}
};

// G_j(X, phi) = exp(kappa (bulk + c2 boundary + c4 W^2)) and the strong
// regulator exp(cw kappa w_j(X, phi)^2); depends on phi only through
// gradients, so it is invariant under constant shifts.
inline RegulatorValue regulator_eval(const Torus& t, const BlockGrid& g, const Polymer& X,
                                     const Field& phi, RegulatorParams par = {}) {
    if (par.kappa <= 0.0) par.kappa = par.c_kappa / std::log(static_cast<double>(g.L));
    RegulatorValue r;
    if (X.empty()) return r;
    std::vector<int64_t> sites;
    for (int64_t b : X.blocks) {
        auto bs = g.block_sites(t, b);
        sites.insert(sites.end(), bs.begin(), bs.end());
    }
    int j = g.j;
    double v1 = scaled_norm(phi, sites, j, NormKind::l2_bulk, 1);
    r.bulk = v1 * v1;
    double v2 = scaled_norm(phi, sites, j, NormKind::l2_boundary, 1);
    r.boundary = v2 * v2;
    // per-block sup norms over the small-set neighbourhood B*
    for (int64_t b : X.blocks) {
        SmallSetOps ss = small_set_ops(g, Polymer{{b}});
        std::vector<int64_t> star_sites;
        for (int64_t sb : ss.star.blocks) {
            auto bs = g.block_sites(t, sb);
            star_sites.insert(star_sites.end(), bs.begin(), bs.end());
        }
        double s2 = scaled_norm(phi, star_sites, j, NormKind::sup, 2);
        double s1 = scaled_norm(phi, star_sites, j, NormKind::sup, 1);
        r.Wsq += s2 * s2;
        r.wsq += std::max(s1 * s1, s2 * s2);
    }
    r.G = std::exp(par.kappa * (r.bulk + par.c2 * r.boundary + par.c4 * r.Wsq));
    r.strongG = std::exp(par.cw * par.kappa * r.wsq);
    return r;
}

} // namespace dglab
