#pragma once
#include <array>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "mlp.hpp"
#include "residual.hpp"

namespace dilar {

// State convention everywhere: x = [observed..., latent...], length
// obs_dim + lat_dim. Inputs u have length input_dim.
template <class M>
concept NominalModel = requires(std::span<const double> x,
                                std::span<const double> u,
                                std::span<const double> th,
                                std::span<double> dx, std::span<double> g) {
    // inputs stay plain doubles on every code path; states/params carry T

    { M::obs_dim } -> std::convertible_to<int>;
    { M::lat_dim } -> std::convertible_to<int>;
    { M::input_dim } -> std::convertible_to<int>;
    { M::theta_dim } -> std::convertible_to<int>;
    M::theta_names;
    M::template eval<double>(x, u, th, dx);
    M::template energy_gradient<double>(x, g);
};

// 2-DOF helicopter rig: rotor speed omega and elevation alpha are measured,
// elevation rate alphadot is latent.
//
//   omega'    = k2 omega + k3 omega^2 + k1 u
//   alpha'    = alphadot
//   alphadot' = k4 omega^2 - k5 sin(alpha)
struct HelicopterModel {
    static constexpr int obs_dim = 2;
    static constexpr int lat_dim = 1;
    static constexpr int input_dim = 1;
    static constexpr int theta_dim = 5;
    static constexpr std::array<std::string_view, 5> theta_names{
        "k1", "k2", "k3", "k4", "k5"};

    template <class T>
    static void eval(std::span<const T> x, std::span<const double> u,
                     std::span<const T> theta, std::span<T> dx) {
        using std::sin;
        const T& w = x[0];
        const T& a = x[1];
        const T& ad = x[2];
        dx[0] = theta[1] * w + theta[2] * w * w + theta[0] * u[0];
        dx[1] = ad;
        dx[2] = theta[3] * w * w - theta[4] * sin(a);
    }

    // Gradient of the stored energy with respect to the latent coordinates.
    // The kinetic term is (1/2) I alphadot^2 with I normalized to 1, so
    // g = [alphadot].
    template <class T>
    static void energy_gradient(std::span<const T> x, std::span<T> g) {
        g[0] = x[obs_dim];
    }
};

static_assert(NominalModel<HelicopterModel>);

enum class ResidualKind { none, dissipative, soft, full_state };

// Grey-box composition: nominal ODE plus a network residual.
//
// The latent kinds (dissipative, soft) add to latent rows only; observed
// rows pass through bit-identical to the nominal model. full_state is the
// unconstrained baseline that adds a correction to every row.
template <NominalModel M>
struct ComposedDynamics {
    static constexpr int state_dim = M::obs_dim + M::lat_dim;

    ResidualKind kind = ResidualKind::none;
    MlpSpec net;  // unused when kind == none

    static ComposedDynamics make(ResidualKind kind, std::vector<int> hidden) {
        ComposedDynamics cd;
        cd.kind = kind;
        const int z_dim = state_dim + M::input_dim;
        switch (kind) {
            case ResidualKind::none:
                break;
            case ResidualKind::dissipative:
                cd.net = DissipativeResidual::make(z_dim, M::lat_dim,
                                                   std::move(hidden)).net;
                break;
            case ResidualKind::soft:
                cd.net = SoftResidual::make(z_dim, M::lat_dim,
                                            std::move(hidden)).net;
                break;
            case ResidualKind::full_state:
                cd.net = MlpSpec{.input_dim = z_dim,
                                 .hidden_dims = std::move(hidden),
                                 .output_dim = state_dim};
                cd.net.validate();
                break;
        }
        return cd;
    }

    std::size_t phi_count() const {
        return kind == ResidualKind::none ? 0 : net.param_count();
    }

    template <class T>
    void eval(std::span<const T> x, std::span<const double> u,
              std::span<const T> theta, std::span<const T> phi,
              std::span<T> dx) const {
        M::template eval<T>(x, u, theta, dx);
        if (kind == ResidualKind::none) return;

        thread_local std::vector<T> z, out, g, r;
        z.clear();
        z.insert(z.end(), x.begin(), x.end());
        z.insert(z.end(), u.begin(), u.end());

        switch (kind) {
            case ResidualKind::full_state: {
                mlp_forward<T>(net, phi, z, out);
                for (int i = 0; i < state_dim; ++i)
                    dx[static_cast<std::size_t>(i)] += out[i];
                break;
            }
            case ResidualKind::soft: {
                mlp_forward<T>(net, phi, z, out);
                for (int i = 0; i < M::lat_dim; ++i)
                    dx[static_cast<std::size_t>(M::obs_dim + i)] += out[i];
                break;
            }
            case ResidualKind::dissipative: {
                g.assign(static_cast<std::size_t>(M::lat_dim), T(0.0));
                M::template energy_gradient<T>(x, g);
                mlp_forward<T>(net, phi, z, out);
                r.assign(static_cast<std::size_t>(M::lat_dim), T(0.0));
                residual_from_heads<T>(M::lat_dim, out, g, r);
                for (int i = 0; i < M::lat_dim; ++i)
                    dx[static_cast<std::size_t>(M::obs_dim + i)] += r[i];
                break;
            }
            case ResidualKind::none:
                break;
        }
    }

    // g'r at (x, u): the instantaneous power the residual feeds into the
    // stored energy. Structurally <= 0 for the dissipative kind; free-signed
    // for soft (that sign is what the training penalty pushes down).
    template <class T>
    T residual_power(std::span<const T> x, std::span<const double> u,
                     std::span<const T> phi) const {
        if (kind != ResidualKind::dissipative && kind != ResidualKind::soft)
            return T(0.0);
        thread_local std::vector<T> z, out, g, r;
        z.clear();
        z.insert(z.end(), x.begin(), x.end());
        z.insert(z.end(), u.begin(), u.end());
        g.assign(static_cast<std::size_t>(M::lat_dim), T(0.0));
        M::template energy_gradient<T>(x, g);
        mlp_forward<T>(net, phi, z, out);
        r.assign(static_cast<std::size_t>(M::lat_dim), T(0.0));
        if (kind == ResidualKind::dissipative) {
            residual_from_heads<T>(M::lat_dim, out, g, r);
        } else {
            for (int i = 0; i < M::lat_dim; ++i) r[static_cast<std::size_t>(i)] = out[i];
        }
        T p(0.0);
        for (int i = 0; i < M::lat_dim; ++i)
            p += g[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
        return p;
    }
};

}  // namespace dilar
