#pragma once
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ad.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "integrator.hpp"
#include "param_store.hpp"
#include "rng.hpp"

namespace dilar {

// Inverse-variance channel weights over rows [0, rows) of row-major
// measurements: w_j = (sum_k Var_k) / Var_j, population variance. A channel
// whose variance falls below 1e-12 cannot be weighted and is reported by
// index.
inline std::vector<double> cmse_weights(std::span<const double> y, int channels,
                                        std::size_t rows) {
    if (channels <= 0) throw error("cmse_weights: channels must be positive");
    if (rows < 2) throw error("cmse_weights: need at least two rows");
    if (y.size() < rows * static_cast<std::size_t>(channels))
        throw error("cmse_weights: measurement block too small");

    std::vector<double> mean(static_cast<std::size_t>(channels), 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (int j = 0; j < channels; ++j)
            mean[static_cast<std::size_t>(j)] += y[r * static_cast<std::size_t>(channels) + static_cast<std::size_t>(j)];
    for (auto& m : mean) m /= static_cast<double>(rows);

    std::vector<double> var(static_cast<std::size_t>(channels), 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (int j = 0; j < channels; ++j) {
            const double d = y[r * static_cast<std::size_t>(channels) + static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)];
            var[static_cast<std::size_t>(j)] += d * d;
        }
    for (auto& v : var) v /= static_cast<double>(rows);

    double total = 0.0;
    for (int j = 0; j < channels; ++j) {
        if (var[static_cast<std::size_t>(j)] < 1e-12)
            throw degenerate_channel_error(
                "channel " + std::to_string(j) +
                    " has (numerically) zero variance; cannot weight it",
                j);
        total += var[static_cast<std::size_t>(j)];
    }
    std::vector<double> w(static_cast<std::size_t>(channels));
    for (int j = 0; j < channels; ++j) w[static_cast<std::size_t>(j)] = total / var[static_cast<std::size_t>(j)];
    return w;
}

// Weighted squared error of one predicted sample against its measurement:
// sum_j w_j (pred_j - meas_j)^2. No 1/m normalization — the curriculum
// threshold scales with l * m instead.
template <class T>
T cmse(std::span<const T> pred, std::span<const double> meas,
       std::span<const double> w) {
    T acc(0.0);
    for (std::size_t j = 0; j < w.size(); ++j) {
        const T d = pred[j] - meas[j];
        acc += w[j] * (d * d);
    }
    return acc;
}

// Rollout loss over the first l steps: the model is integrated from x0 under
// the held inputs and every predicted observation is scored against its
// measurement. The dissipativity penalty is evaluated at the *predicted*
// states, with the input that produced them.
//
//   L(l) = sum_{i=1..l} cmse(x_i) + lambda * sum_{i=1..l} relu(g'r at x_i)
//
// `y` holds measured rows 0..l (row 0 is only the anchor; targets are
// 1..l), row-major with obs_dim columns.
template <NominalModel M, class T>
T rollout_loss(const ComposedDynamics<M>& dyn, std::span<const T> theta,
               std::span<const T> phi, std::span<const T> x0,
               std::span<const double> us, std::span<const double> y,
               std::span<const double> w, double h, int l,
               double lambda_diss) {
    constexpr int nx = ComposedDynamics<M>::state_dim;
    constexpr int ny = M::obs_dim;
    constexpr int nu = M::input_dim;
    if (l < 1) throw error("rollout_loss: need at least one step");
    if (us.size() < static_cast<std::size_t>(l) * nu)
        throw error("rollout_loss: input sequence shorter than horizon");
    if (y.size() < static_cast<std::size_t>(l + 1) * ny)
        throw error("rollout_loss: measurement block shorter than horizon");
    if (w.size() != static_cast<std::size_t>(ny))
        throw error("rollout_loss: weight count != observed channels");

    const bool penalized =
        lambda_diss > 0.0 && (dyn.kind == ResidualKind::dissipative ||
                              dyn.kind == ResidualKind::soft);

    thread_local std::vector<T> x, nxt;
    thread_local Rk4Scratch<T> ws;
    x.assign(x0.begin(), x0.end());
    nxt.resize(static_cast<std::size_t>(nx));

    T loss(0.0);
    for (int i = 0; i < l; ++i) {
        const auto u = us.subspan(static_cast<std::size_t>(i) * nu, nu);
        rk4_step(
            [&](std::span<const T> xx, std::span<T> dxx) {
                dyn.template eval<T>(xx, u, theta, phi, dxx);
            },
            std::span<const T>(x), h, std::span<T>(nxt), ws);
        for (int c = 0; c < nx; ++c)
            if (!std::isfinite(value_of(nxt[static_cast<std::size_t>(c)])))
                throw divergence_error(
                    "prediction left the finite range at step " +
                        std::to_string(i),
                    i);
        loss += cmse<T>(std::span<const T>(nxt).first(static_cast<std::size_t>(ny)),
                        y.subspan(static_cast<std::size_t>(i + 1) * ny, ny), w);
        if (penalized) {
            const T p = dyn.template residual_power<T>(nxt, u, phi);
            loss += lambda_diss * relu(p);
        }
        x.swap(nxt);
    }
    return loss;
}

struct FitConfig {
    int iterations = 4000;          // Adam steps (T)
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 10.0;        // global-norm clip, applied before moments
    double lr_final_ratio = 1e-3;   // lr shrinks to lr * ratio by iteration T
    double decay_start_frac = 0.65; // decay begins at max(frac*T, t_full)
    int l0 = 50;                    // curriculum start length
    int dl = 50;                    // curriculum increment
    int horizon = 500;              // N: full training window (steps)
    double thr_coeff = 1e-3;        // extend when loss < coeff * l * obs_dim
    double lambda_diss = 0.0;       // dissipativity penalty weight
    int retry_budget = 3;           // fresh-init retries before fit-failure
    std::uint64_t seed = 1;         // network init stream

    void validate() const {
        if (iterations < 1 || l0 < 1 || dl < 1 || horizon < l0)
            throw config_error("fit: bad iteration/curriculum settings");
        if (lr <= 0.0 || lr_final_ratio <= 0.0 || clip_norm <= 0.0)
            throw config_error("fit: bad optimizer settings");
        if (lambda_diss < 0.0)
            throw config_error("fit: lambda_diss must be >= 0");
        if (retry_budget < 0) throw config_error("fit: bad retry budget");
    }
};

struct CurriculumEvent {
    int iteration;  // first iteration at which this length applies
    int l;
};

struct FitReport {
    std::vector<double> loss_history;       // pre-update loss per iteration
    std::vector<CurriculumEvent> curriculum;
    ParamStore params;                      // entries: theta, phi, x0_lat
    double final_loss = 0.0;                // full-horizon loss at the end
    double wall_seconds = 0.0;
    int t_full = -1;                        // iteration the horizon filled
    int divergence_retries = 0;
};

namespace detail {

struct AdamState {
    std::vector<double> m, v;
    long t = 0;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
    void reset() {
        std::fill(m.begin(), m.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
        t = 0;
    }
};

inline void clip_global_norm(std::span<double> g, double max_norm) {
    double n2 = 0.0;
    for (double v : g) n2 += v * v;
    const double n = std::sqrt(n2);
    if (n > max_norm) {
        const double s = max_norm / n;
        for (double& v : g) v *= s;
    }
}

inline void adam_update(std::span<double> p, std::span<const double> g,
                        AdamState& st, double lr, double b1, double b2,
                        double eps) {
    ++st.t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < p.size(); ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * g[i] * g[i];
        const double mh = st.m[i] / c1;
        const double vh = st.v[i] / c2;
        p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

}  // namespace detail

// Curriculum BPTT fit (Algorithm: loss -> Adam update -> extend). Trains
// theta, the residual parameters, and the latent initial state; the observed
// initial state stays pinned to measured row 0. The learning rate holds at
// `lr` until both (a) the horizon is full and (b) decay_start_frac of the
// iterations have passed, then decays geometrically to lr * lr_final_ratio.
//
// `us` holds at least horizon inputs, `y` at least horizon+1 measured rows.
// Transient divergence triggers a fresh-init restart (new network draw,
// halved step size); more than retry_budget restarts is a fit failure.
template <NominalModel M>
FitReport fit(const ComposedDynamics<M>& dyn, std::span<const double> us,
              std::span<const double> y, std::span<const double> w, double h,
              std::span<const double> theta0, const FitConfig& cfg) {
    using Clock = std::chrono::steady_clock;
    const auto t_start = Clock::now();
    cfg.validate();

    constexpr int ny = M::obs_dim;
    constexpr int nu = M::input_dim;
    const int N = cfg.horizon;
    if (theta0.size() != static_cast<std::size_t>(M::theta_dim))
        throw config_error("fit: theta0 size != model theta_dim");
    if (us.size() < static_cast<std::size_t>(N) * nu)
        throw data_error("fit: input sequence shorter than the horizon");
    if (y.size() < static_cast<std::size_t>(N + 1) * ny)
        throw data_error("fit: measurements shorter than the horizon");
    if (w.size() != static_cast<std::size_t>(ny))
        throw config_error("fit: weight count != observed channels");

    Rng init_rng(cfg.seed);
    const std::size_t n_theta = static_cast<std::size_t>(M::theta_dim);
    const std::size_t n_phi = dyn.phi_count();
    const std::size_t n_lat = static_cast<std::size_t>(M::lat_dim);
    const std::size_t n_all = n_theta + n_phi + n_lat;

    std::vector<double> flat(n_all, 0.0);
    const auto reinit = [&](std::span<double> f) {
        std::copy(theta0.begin(), theta0.end(), f.begin());
        if (n_phi > 0) {
            const auto phi0 = init_mlp_params(dyn.net, init_rng);
            std::copy(phi0.begin(), phi0.end(), f.begin() + static_cast<std::ptrdiff_t>(n_theta));
        }
        std::fill(f.end() - static_cast<std::ptrdiff_t>(n_lat), f.end(), 0.0);
    };
    reinit(flat);

    detail::AdamState adam(n_all);
    ad::GradWorkspace gws;
    std::vector<double> grad(n_all);
    std::vector<ad::Value> leaves(n_all);
    std::vector<ad::Value> x0(static_cast<std::size_t>(ComposedDynamics<M>::state_dim));

    FitReport report;
    int l = std::min(cfg.l0, N);
    report.curriculum.push_back({0, l});
    int t_full = l == N ? 0 : -1;
    int retries = 0;

    const int T = cfg.iterations;
    const int decay_start = static_cast<int>(cfg.decay_start_frac * T);

    const auto eval_loss_grad = [&](int horizon_l, bool want_grad) {
        auto& tape = ad::Tape::active();
        tape.clear();
        for (std::size_t i = 0; i < n_all; ++i)
            leaves[i] = ad::Value::leaf(flat[i]);
        const std::span<const ad::Value> theta(leaves.data(), n_theta);
        const std::span<const ad::Value> phi(leaves.data() + n_theta, n_phi);
        const std::span<const ad::Value> x0lat(leaves.data() + n_theta + n_phi,
                                               n_lat);
        for (int j = 0; j < ny; ++j) x0[static_cast<std::size_t>(j)] = ad::Value(y[static_cast<std::size_t>(j)]);
        for (std::size_t j = 0; j < n_lat; ++j) x0[static_cast<std::size_t>(ny) + j] = x0lat[j];
        const ad::Value loss = rollout_loss<M, ad::Value>(
            dyn, theta, phi, x0, us, y, w, h, horizon_l, cfg.lambda_diss);
        if (want_grad) ad::gradient(loss, leaves, grad, gws);
        return loss.v;
    };

    for (int t = 0; t < T; ++t) {
        double loss;
        try {
            loss = eval_loss_grad(l, true);
        } catch (const divergence_error&) {
            if (++retries > cfg.retry_budget)
                throw fit_error(
                    "persistent divergence: exceeded retry budget of " +
                    std::to_string(cfg.retry_budget));
            reinit(flat);
            adam.reset();
            l = std::min(cfg.l0, N);
            t_full = l == N ? 0 : -1;
            report.curriculum.push_back({t, l});
            report.divergence_retries = retries;
            --t;  // redo this iteration with the fresh parameters
            continue;
        }
        report.loss_history.push_back(loss);

        detail::clip_global_norm(grad, cfg.clip_norm);
        double lr_t;
        const int ds = std::max(decay_start, std::max(t_full, 0));
        const double lr_base = cfg.lr * std::pow(0.5, retries);
        if (l < N || t < ds) {
            lr_t = lr_base;
        } else {
            const double frac =
                static_cast<double>(t - ds) / std::max(1, T - ds);
            lr_t = lr_base * std::pow(cfg.lr_final_ratio, frac);
        }
        detail::adam_update(flat, grad, adam, lr_t, cfg.beta1, cfg.beta2,
                            cfg.eps);

        // extension decision uses the pre-update loss
        if (l < N && loss < cfg.thr_coeff * l * ny) {
            l = std::min(l + cfg.dl, N);
            report.curriculum.push_back({t + 1, l});
            if (l == N && t_full < 0) t_full = t;
        }
    }

    try {
        report.final_loss = eval_loss_grad(N, false);
    } catch (const divergence_error&) {
        throw fit_error("fitted model diverges on the full training horizon");
    }

    report.params.add("theta",
                      std::vector<double>(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(n_theta)));
    report.params.add("phi",
                      std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(n_theta),
                                          flat.begin() + static_cast<std::ptrdiff_t>(n_theta + n_phi)));
    report.params.add("x0_lat",
                      std::vector<double>(flat.end() - static_cast<std::ptrdiff_t>(n_lat), flat.end()));
    report.t_full = t_full;
    report.divergence_retries = retries;
    report.wall_seconds =
        std::chrono::duration<double>(Clock::now() - t_start).count();
    return report;
}

}  // namespace dilar
