#pragma once
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ad.hpp"
#include "errors.hpp"

namespace dilar {

template <class T>
struct Rk4Scratch {
    std::vector<T> k1, k2, k3, k4, xs;
    void resize(std::size_t n) {
        k1.resize(n);
        k2.resize(n);
        k3.resize(n);
        k4.resize(n);
        xs.resize(n);
    }
};

// One classic Runge-Kutta step, x -> x + h/6 (k1 + 2 k2 + 2 k3 + k4).
// `f(x, dx)` evaluates the vector field; the input (if any) is bound inside
// f and held constant across all four stages (zero-order hold).
template <class F, class T>
void rk4_step(F&& f, std::span<const T> x, double h, std::span<T> out,
              Rk4Scratch<T>& ws) {
    const std::size_t n = x.size();
    ws.resize(n);
    f(x, std::span<T>(ws.k1));
    for (std::size_t i = 0; i < n; ++i) ws.xs[i] = x[i] + (0.5 * h) * ws.k1[i];
    f(std::span<const T>(ws.xs), std::span<T>(ws.k2));
    for (std::size_t i = 0; i < n; ++i) ws.xs[i] = x[i] + (0.5 * h) * ws.k2[i];
    f(std::span<const T>(ws.xs), std::span<T>(ws.k3));
    for (std::size_t i = 0; i < n; ++i) ws.xs[i] = x[i] + h * ws.k3[i];
    f(std::span<const T>(ws.xs), std::span<T>(ws.k4));
    for (std::size_t i = 0; i < n; ++i)
        out[i] = x[i] +
                 (h / 6.0) * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] +
                              ws.k4[i]);
}

// Fixed-step trajectory under a zero-order-hold input sequence.
//
// `dyn(x, u, dx)` is the vector field; `us` holds steps * input_dim values,
// one input block per step. `states` receives (steps + 1) * n values with
// x0 as the first row. A non-finite component after step s raises
// divergence_error carrying s.
template <class Dyn, class T>
void rollout(Dyn&& dyn, std::span<const T> x0, std::span<const double> us,
             int input_dim, double h, std::vector<T>& states,
             Rk4Scratch<T>& ws) {
    if (input_dim <= 0) throw error("rollout: input_dim must be positive");
    if (us.size() % static_cast<std::size_t>(input_dim) != 0)
        throw error("rollout: input sequence not a multiple of input_dim");
    const std::size_t n = x0.size();
    const std::size_t steps = us.size() / static_cast<std::size_t>(input_dim);

    states.resize((steps + 1) * n);
    for (std::size_t i = 0; i < n; ++i) states[i] = x0[i];

    for (std::size_t s = 0; s < steps; ++s) {
        const auto u = us.subspan(s * static_cast<std::size_t>(input_dim),
                                  static_cast<std::size_t>(input_dim));
        const auto cur = std::span<const T>(states).subspan(s * n, n);
        const auto nxt = std::span<T>(states).subspan((s + 1) * n, n);
        rk4_step([&](std::span<const T> xx, std::span<T> dxx) { dyn(xx, u, dxx); },
                 cur, h, nxt, ws);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(value_of(nxt[i])))
                throw divergence_error(
                    "state left the finite range at step " + std::to_string(s),
                    static_cast<long>(s));
        }
    }
}

}  // namespace dilar
