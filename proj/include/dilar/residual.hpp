#pragma once
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mlp.hpp"

namespace dilar {

// Residuals constrained to r = (S - K) g with S skew-symmetric and K PSD.
// Along the energy gradient g this gives g'r = -g'Kg <= 0: the residual can
// redirect energy but never inject it, for every parameter value.

inline int skew_entry_count(int n) { return n * (n - 1) / 2; }
inline int tri_entry_count(int n) { return n * (n + 1) / 2; }

// Strict lower triangle, row-major: entries k -> (i, j), i > j.
// S[i][j] = e_k, S[j][i] = -e_k, zero diagonal. S is n x n row-major.
template <class T>
void assemble_skew(std::span<const T> entries, int n, std::span<T> S) {
    if (entries.size() != static_cast<std::size_t>(skew_entry_count(n)))
        throw error("skew entry count mismatch for n=" + std::to_string(n));
    if (S.size() != static_cast<std::size_t>(n) * n)
        throw error("skew output must be n*n");
    for (auto& s : S) s = T(0.0);
    int k = 0;
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < i; ++j, ++k) {
            S[static_cast<std::size_t>(i) * n + j] = entries[k];
            S[static_cast<std::size_t>(j) * n + i] = -entries[k];
        }
}

// Lower triangle including diagonal, row-major. The diagonal passes through
// softplus, so L has positive diagonal and K = L L' is PSD for any raw
// entries. K is n x n row-major.
template <class T>
void assemble_psd(std::span<const T> entries, int n, std::span<T> K) {
    if (entries.size() != static_cast<std::size_t>(tri_entry_count(n)))
        throw error("psd entry count mismatch for n=" + std::to_string(n));
    if (K.size() != static_cast<std::size_t>(n) * n)
        throw error("psd output must be n*n");
    thread_local std::vector<T> L;
    L.assign(static_cast<std::size_t>(n) * n, T(0.0));
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j, ++k)
            L[static_cast<std::size_t>(i) * n + j] =
                i == j ? softplus(entries[k]) : entries[k];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            T acc(0.0);
            const int m = i < j ? i : j;
            for (int c = 0; c <= m; ++c)
                acc += L[static_cast<std::size_t>(i) * n + c] *
                       L[static_cast<std::size_t>(j) * n + c];
            K[static_cast<std::size_t>(i) * n + j] = acc;
        }
}

// r_i = sum_j (S - K)_ij g_j, computed entry-wise from the packed heads
// without materializing the matrices. Kg is evaluated as L (L'g); for
// lat_dim 1 this collapses to r = -softplus(e)^2 * g.
template <class T>
void residual_from_heads(int n, std::span<const T> heads, std::span<const T> g,
                         std::span<T> r) {
    const int ns = skew_entry_count(n), nt = tri_entry_count(n);
    if (heads.size() != static_cast<std::size_t>(ns + nt))
        throw error("residual head count mismatch for n=" + std::to_string(n));
    const auto skew = heads.first(static_cast<std::size_t>(ns));
    const auto tri = heads.subspan(static_cast<std::size_t>(ns));

    thread_local std::vector<T> t;
    t.assign(static_cast<std::size_t>(n), T(0.0));
    // t = L' g, walking the packed lower triangle once
    {
        int k = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j, ++k) {
                const T lij = i == j ? softplus(tri[k]) : tri[k];
                t[static_cast<std::size_t>(j)] += lij * g[static_cast<std::size_t>(i)];
            }
    }
    for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = T(0.0);
    // r -= L t  (= -K g)
    {
        int k = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j, ++k) {
                const T lij = i == j ? softplus(tri[k]) : tri[k];
                r[static_cast<std::size_t>(i)] -= lij * t[static_cast<std::size_t>(j)];
            }
    }
    // r += S g
    {
        int k = 0;
        for (int i = 1; i < n; ++i)
            for (int j = 0; j < i; ++j, ++k) {
                r[static_cast<std::size_t>(i)] += skew[k] * g[static_cast<std::size_t>(j)];
                r[static_cast<std::size_t>(j)] -= skew[k] * g[static_cast<std::size_t>(i)];
            }
    }
}

// Network-backed dissipative residual. One network emits both heads,
// [skew entries..., L entries...]; for lat_dim == 1 the skew head is empty
// and the single output parameterizes the damping coefficient.
struct DissipativeResidual {
    int lat_dim = 0;
    MlpSpec net;

    static DissipativeResidual make(int z_dim, int lat_dim,
                                    std::vector<int> hidden) {
        DissipativeResidual res;
        res.lat_dim = lat_dim;
        res.net = MlpSpec{.input_dim = z_dim,
                          .hidden_dims = std::move(hidden),
                          .output_dim = skew_entry_count(lat_dim) +
                                        tri_entry_count(lat_dim)};
        res.net.validate();
        return res;
    }

    // z = [x_obs, x_lat, u]; g = energy gradient at x; writes r (lat_dim).
    template <class T>
    void eval(std::span<const T> phi, std::span<const T> z,
              std::span<const T> g, std::span<T> r) const {
        thread_local std::vector<T> heads;
        mlp_forward(net, phi, z, heads);
        residual_from_heads<T>(lat_dim, heads, g, r);
    }
};

// Unconstrained latent residual (soft-penalty ablation): r = net(z).
struct SoftResidual {
    int lat_dim = 0;
    MlpSpec net;

    static SoftResidual make(int z_dim, int lat_dim, std::vector<int> hidden) {
        SoftResidual res;
        res.lat_dim = lat_dim;
        res.net = MlpSpec{.input_dim = z_dim,
                          .hidden_dims = std::move(hidden),
                          .output_dim = lat_dim};
        res.net.validate();
        return res;
    }

    template <class T>
    void eval(std::span<const T> phi, std::span<const T> z,
              std::span<T> r) const {
        thread_local std::vector<T> out;
        mlp_forward(net, phi, z, out);
        for (int i = 0; i < lat_dim; ++i) r[static_cast<std::size_t>(i)] = out[i];
    }
};

struct ConeDecomposition {
    int n = 0;
    std::vector<double> S, K;  // row-major n x n
};

// Splits a residual sample into (S, K) with (S - K) g == r exactly:
//   gamma = -g'r / |g|^2        (>= 0 inside the cone)
//   K     = gamma g g' / |g|^2
//   r_perp = r + gamma g        (orthogonal to g)
//   S     = (r_perp g' - g r_perp') / |g|^2
inline ConeDecomposition cone_decompose(std::span<const double> r,
                                        std::span<const double> g) {
    const int n = static_cast<int>(g.size());
    if (r.size() != g.size())
        throw error("cone_decompose: r and g dimensions differ");
    double g2 = 0.0, p = 0.0;
    for (int i = 0; i < n; ++i) {
        g2 += g[i] * g[i];
        p += g[i] * r[i];
    }
    if (g2 == 0.0)
        throw degenerate_gradient_error(
            "cone_decompose: zero energy gradient has no cone axis");
    if (p > 0.0)
        throw not_in_cone_error(
            "cone_decompose: residual injects energy (g'r = " +
            std::to_string(p) + " > 0)");

    const double gamma = -p / g2;
    ConeDecomposition d;
    d.n = n;
    d.S.assign(static_cast<std::size_t>(n) * n, 0.0);
    d.K.assign(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> rp(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rp[static_cast<std::size_t>(i)] = r[i] + gamma * g[i];
    // g_i g_j is computed first so K comes out bitwise symmetric
    const double kscale = gamma / g2;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            d.K[static_cast<std::size_t>(i) * n + j] = kscale * (g[i] * g[j]);
            d.S[static_cast<std::size_t>(i) * n + j] =
                (rp[static_cast<std::size_t>(i)] * g[j] -
                 g[i] * rp[static_cast<std::size_t>(j)]) / g2;
        }
    return d;
}

}  // namespace dilar
