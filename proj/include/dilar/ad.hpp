#pragma once
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "errors.hpp"

namespace dilar {

// Scalar helpers shared by the double and reverse-mode code paths. Generic
// code calls these unqualified so the right overload is picked by ADL.

// Overflow-safe softplus: log(1 + e^x).
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline double value_of(double x) { return x; }

namespace ad {

// One recorded operation. During the reverse sweep the adjoint of this node
// flows to parent `a` scaled by `wa` and to parent `b` scaled by `wb`.
// Parent index -1 means "no parent" (leaf, or constant operand).
struct Node {
    double wa, wb;
    std::int32_t a, b;
};

// Append-only record of every operation since the last clear(). Parents
// always precede children, so one backward scan is a topological traversal.
class Tape {
public:
    std::int32_t emplace(double wa, std::int32_t a, double wb, std::int32_t b) {
        nodes_.push_back(Node{wa, wb, a, b});
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    void clear() { nodes_.clear(); }  // keeps capacity
    void reserve(std::size_t n) { nodes_.reserve(n); }
    std::size_t size() const { return nodes_.size(); }
    const Node& operator[](std::size_t i) const { return nodes_[i]; }

    static Tape& active() {
        thread_local Tape t;
        return t;
    }

private:
    std::vector<Node> nodes_;
};

// Recording scalar. Implicit construction from double makes a *constant*
// (index -1, not differentiated); leaf() registers a differentiable input.
struct Value {
    double v = 0.0;
    std::int32_t i = -1;

    Value() = default;
    Value(double x) : v(x) {}
    Value(double x, std::int32_t idx) : v(x), i(idx) {}

    static Value leaf(double x) {
        return Value(x, Tape::active().emplace(0.0, -1, 0.0, -1));
    }

    Value& operator+=(const Value& o);
    Value& operator-=(const Value& o);
    Value& operator*=(const Value& o);
    Value& operator/=(const Value& o);
};

inline double value_of(Value x) { return x.v; }

inline Value operator+(Value a, Value b) {
    if (a.i < 0 && b.i < 0) return Value(a.v + b.v);
    return Value(a.v + b.v, Tape::active().emplace(1.0, a.i, 1.0, b.i));
}

inline Value operator-(Value a, Value b) {
    if (a.i < 0 && b.i < 0) return Value(a.v - b.v);
    return Value(a.v - b.v, Tape::active().emplace(1.0, a.i, -1.0, b.i));
}

inline Value operator-(Value a) {
    if (a.i < 0) return Value(-a.v);
    return Value(-a.v, Tape::active().emplace(-1.0, a.i, 0.0, -1));
}

inline Value operator*(Value a, Value b) {
    if (a.i < 0 && b.i < 0) return Value(a.v * b.v);
    return Value(a.v * b.v, Tape::active().emplace(b.v, a.i, a.v, b.i));
}

inline Value operator/(Value a, Value b) {
    if (a.i < 0 && b.i < 0) return Value(a.v / b.v);
    const double inv = 1.0 / b.v;
    return Value(a.v * inv,
                 Tape::active().emplace(inv, a.i, -a.v * inv * inv, b.i));
}

inline Value& Value::operator+=(const Value& o) { return *this = *this + o; }
inline Value& Value::operator-=(const Value& o) { return *this = *this - o; }
inline Value& Value::operator*=(const Value& o) { return *this = *this * o; }
inline Value& Value::operator/=(const Value& o) { return *this = *this / o; }

inline Value sin(Value x) {
    if (x.i < 0) return Value(std::sin(x.v));
    return Value(std::sin(x.v),
                 Tape::active().emplace(std::cos(x.v), x.i, 0.0, -1));
}

inline Value cos(Value x) {
    if (x.i < 0) return Value(std::cos(x.v));
    return Value(std::cos(x.v),
                 Tape::active().emplace(-std::sin(x.v), x.i, 0.0, -1));
}

inline Value tanh(Value x) {
    const double t = std::tanh(x.v);
    if (x.i < 0) return Value(t);
    return Value(t, Tape::active().emplace(1.0 - t * t, x.i, 0.0, -1));
}

inline Value softplus(Value x) {
    const double s = dilar::softplus(x.v);
    if (x.i < 0) return Value(s);
    const double sig = 1.0 / (1.0 + std::exp(-x.v));
    return Value(s, Tape::active().emplace(sig, x.i, 0.0, -1));
}

// Subgradient 0 at the kink, so a residual pinned exactly on the cone
// boundary contributes nothing.
inline Value relu(Value x) {
    if (x.i < 0) return Value(dilar::relu(x.v));
    const double w = x.v > 0.0 ? 1.0 : 0.0;
    return Value(dilar::relu(x.v), Tape::active().emplace(w, x.i, 0.0, -1));
}

// Reusable adjoint buffer; passing one in avoids a large allocation per
// gradient call inside optimization loops.
struct GradWorkspace {
    std::vector<double> adj;
};

// Writes d(loss)/d(leaves[k]) into out[k]. Single reverse sweep over the
// active tape, O(tape size).
inline void gradient(const Value& loss, std::span<const Value> leaves,
                     std::span<double> out, GradWorkspace& ws) {
    if (loss.i < 0)
        throw unsupported_operation_error(
            "gradient of a constant expression (nothing recorded on tape)");
    const Tape& t = Tape::active();
    ws.adj.assign(t.size(), 0.0);
    ws.adj[static_cast<std::size_t>(loss.i)] = 1.0;
    for (std::int32_t k = loss.i; k >= 0; --k) {
        const double ak = ws.adj[static_cast<std::size_t>(k)];
        if (ak == 0.0) continue;
        const Node& n = t[static_cast<std::size_t>(k)];
        if (n.a >= 0) ws.adj[static_cast<std::size_t>(n.a)] += n.wa * ak;
        if (n.b >= 0) ws.adj[static_cast<std::size_t>(n.b)] += n.wb * ak;
    }
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        if (leaves[k].i < 0)
            throw unsupported_operation_error(
                "gradient with respect to a non-leaf constant");
        out[k] = ws.adj[static_cast<std::size_t>(leaves[k].i)];
    }
}

inline std::vector<double> gradient(const Value& loss,
                                    std::span<const Value> leaves) {
    GradWorkspace ws;
    std::vector<double> out(leaves.size());
    gradient(loss, leaves, out, ws);
    return out;
}

}  // namespace ad
}  // namespace dilar
