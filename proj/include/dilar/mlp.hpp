#pragma once
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ad.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace dilar {

enum class Activation { identity, tanh_act, softplus_act };

// Fully connected network description. Parameters live outside the spec as
// one flat span, in layer order: W0 (row-major, out x in), b0, W1, b1, ...
struct MlpSpec {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int output_dim = 0;
    Activation hidden_activation = Activation::tanh_act;
    Activation output_activation = Activation::identity;

    std::vector<int> layer_dims() const {
        std::vector<int> d;
        d.reserve(hidden_dims.size() + 2);
        d.push_back(input_dim);
        d.insert(d.end(), hidden_dims.begin(), hidden_dims.end());
        d.push_back(output_dim);
        return d;
    }

    std::size_t param_count() const {
        const auto d = layer_dims();
        std::size_t n = 0;
        for (std::size_t i = 0; i + 1 < d.size(); ++i)
            n += static_cast<std::size_t>(d[i + 1]) * d[i] + d[i + 1];
        return n;
    }

    void validate() const {
        if (input_dim <= 0 || output_dim <= 0)
            throw config_error("mlp needs positive input and output dims");
        for (int h : hidden_dims)
            if (h <= 0) throw config_error("mlp hidden dims must be positive");
    }
};

// Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)] drawn row-major per layer;
// biases start at zero (and consume no draws).
inline std::vector<double> init_mlp_params(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<double> p;
    p.reserve(spec.param_count());
    const auto d = spec.layer_dims();
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        const int fan_in = d[i], fan_out = d[i + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int k = 0; k < fan_out * fan_in; ++k)
            p.push_back(rng.uniform(-bound, bound));
        for (int k = 0; k < fan_out; ++k) p.push_back(0.0);
    }
    return p;
}

namespace detail {

template <class T>
T activate(const T& x, Activation a) {
    using std::tanh;
    switch (a) {
        case Activation::identity: return x;
        case Activation::tanh_act: return tanh(x);
        case Activation::softplus_act: return softplus(x);
    }
    throw config_error("unknown activation");
}

}  // namespace detail

// Forward pass, generic over double / recording scalars. Scratch buffers are
// reused across calls (per thread and instantiation) — this runs four times
// per integration step inside training loops.
template <class T>
void mlp_forward(const MlpSpec& spec, std::span<const T> params,
                 std::span<const T> input, std::vector<T>& out) {
    if (params.size() != spec.param_count())
        throw error("mlp parameter count mismatch: got " +
                    std::to_string(params.size()) + ", spec needs " +
                    std::to_string(spec.param_count()));
    if (input.size() != static_cast<std::size_t>(spec.input_dim))
        throw error("mlp input size mismatch");

    thread_local std::vector<T> cur, nxt;
    cur.assign(input.begin(), input.end());

    const auto dims = spec.layer_dims();
    std::size_t off = 0;
    for (std::size_t layer = 0; layer + 1 < dims.size(); ++layer) {
        const int nin = dims[layer], nout = dims[layer + 1];
        const bool last = layer + 2 == dims.size();
        const Activation act =
            last ? spec.output_activation : spec.hidden_activation;
        nxt.clear();
        nxt.reserve(nout);
        for (int r = 0; r < nout; ++r) {
            T acc = params[off + static_cast<std::size_t>(nout) * nin + r];  // bias
            const std::size_t row = off + static_cast<std::size_t>(r) * nin;
            for (int c = 0; c < nin; ++c) acc += params[row + c] * cur[c];
            nxt.push_back(detail::activate(acc, act));
        }
        off += static_cast<std::size_t>(nout) * nin + nout;
        cur.swap(nxt);
    }
    out.assign(cur.begin(), cur.end());
}

}  // namespace dilar
