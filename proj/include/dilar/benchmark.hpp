#pragma once
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dynamics.hpp"
#include "errors.hpp"
#include "integrator.hpp"
#include "io.hpp"
#include "param_store.hpp"
#include "rng.hpp"
#include "training.hpp"

namespace dilar {

// ---------------------------------------------------------------------------
// excitation
// ---------------------------------------------------------------------------

struct ChirpSpec {
    double f0 = 0.0;         // Hz at t = 0
    double f1 = 0.4;         // Hz at t = duration
    double duration = 100.0; // s
    double amplitude = 0.5;
    double offset = 0.5;
};

inline double chirp(const ChirpSpec& c, double t) {
    const double phase =
        c.f0 * t + (c.f1 - c.f0) * t * t / (2.0 * c.duration);
    return c.offset + c.amplitude * std::sin(2.0 * std::numbers::pi * phase);
}

// ---------------------------------------------------------------------------
// ground truth
// ---------------------------------------------------------------------------

// The data-generating plant: the nominal model plus effects the nominal
// structure does not capture — quadratic stray drag on the rotor and
// viscous + Coulomb friction on the elevation joint.
struct GroundTruthSpec {
    std::array<double, 5> theta_true{1.0, -0.4, -0.15, 0.5, 1.6};
    double c_viscous = 0.2;
    double c_coulomb = 0.0;
    double eps = 0.05;       // Coulomb tanh smoothing width
    double d_stray = 0.05;
    std::array<double, 2> noise_std{0.002, 0.005};
    int substeps = 10;       // truth integrates at h / substeps
};

struct Dataset {
    std::vector<double> t;   // rows
    std::vector<double> u;   // rows (last one unused by a rollout)
    std::vector<double> y;   // rows x 2, row-major (omega, alpha)
    double h = 0.1;
    long split_index = 500;  // last training row

    std::size_t rows() const { return t.size(); }
    long steps() const { return static_cast<long>(t.size()) - 1; }
};

// True states under held inputs, fine-substepped RK4. Returns (steps+1) x 3
// row-major states starting at x0.
inline std::vector<double> simulate_truth(const GroundTruthSpec& g,
                                          std::span<const double> x0,
                                          std::span<const double> us,
                                          int steps, double h) {
    if (g.substeps < 1) throw config_error("truth: substeps must be >= 1");
    if (x0.size() != 3) throw error("truth: state is 3-dimensional");
    if (us.size() < static_cast<std::size_t>(steps))
        throw error("truth: input sequence shorter than steps");
    HelicopterModel model;
    const std::span<const double> theta(g.theta_true);
    const auto f = [&](std::span<const double> x, std::span<const double> u,
                       std::span<double> dx) {
        model.eval<double>(x, u, theta, dx);
        dx[0] -= g.d_stray * x[0] * std::abs(x[0]);
        dx[2] -= g.c_viscous * x[2];
        dx[2] -= g.c_coulomb * std::tanh(x[2] / g.eps);
    };
    const double hh = h / g.substeps;
    std::vector<double> states(static_cast<std::size_t>(steps + 1) * 3);
    std::vector<double> x(x0.begin(), x0.end()), nxt(3);
    Rk4Scratch<double> ws;
    std::copy(x.begin(), x.end(), states.begin());
    for (int i = 0; i < steps; ++i) {
        const auto u = us.subspan(static_cast<std::size_t>(i), 1);
        for (int s = 0; s < g.substeps; ++s) {
            rk4_step(
                [&](std::span<const double> xx, std::span<double> dxx) {
                    f(xx, u, dxx);
                },
                std::span<const double>(x), hh, std::span<double>(nxt), ws);
            x.swap(nxt);
        }
        std::copy(x.begin(), x.end(),
                  states.begin() + static_cast<std::ptrdiff_t>(i + 1) * 3);
    }
    return states;
}

// Lyapunov candidate of the free (u = 0, friction-only) elevation dynamics:
// V = 1/2 alphadot^2 + k5 (1 - cos alpha).
inline double pendulum_energy(const GroundTruthSpec& g,
                              std::span<const double> x) {
    return 0.5 * x[2] * x[2] + g.theta_true[4] * (1.0 - std::cos(x[1]));
}

// Chirp-driven run from rest with additive measurement noise on every row
// (including row 0). Noise is drawn row-major: omega then alpha per row.
inline Dataset generate_ground_truth(const GroundTruthSpec& g,
                                     const ChirpSpec& c, int steps, double h,
                                     long split_index,
                                     std::uint64_t noise_seed) {
    if (steps < 1) throw config_error("generate: steps must be >= 1");
    if (split_index < 1 || split_index >= steps)
        throw config_error("generate: split_index must lie inside the run");
    Dataset d;
    d.h = h;
    d.split_index = split_index;
    d.t.resize(static_cast<std::size_t>(steps) + 1);
    d.u.resize(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        d.t[static_cast<std::size_t>(i)] = i * h;
        d.u[static_cast<std::size_t>(i)] = chirp(c, i * h);
    }
    const std::array<double, 3> x0{0.0, 0.0, 0.0};
    const auto states = simulate_truth(g, x0, d.u, steps, h);
    Rng rng(noise_seed);
    d.y.resize(static_cast<std::size_t>(steps + 1) * 2);
    for (int i = 0; i <= steps; ++i) {
        d.y[static_cast<std::size_t>(i) * 2] =
            states[static_cast<std::size_t>(i) * 3] + g.noise_std[0] * rng.normal();
        d.y[static_cast<std::size_t>(i) * 2 + 1] =
            states[static_cast<std::size_t>(i) * 3 + 1] + g.noise_std[1] * rng.normal();
    }
    return d;
}

// ---------------------------------------------------------------------------
// dataset CSV  (t,u,omega,alpha)
// ---------------------------------------------------------------------------

inline std::string dataset_to_csv(const Dataset& d) {
    std::string out = "t,u,omega,alpha\n";
    for (std::size_t i = 0; i < d.rows(); ++i) {
        out += format_double_17(d.t[i]);
        out += ',';
        out += format_double_17(d.u[i]);
        out += ',';
        out += format_double_17(d.y[i * 2]);
        out += ',';
        out += format_double_17(d.y[i * 2 + 1]);
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline double parse_double_field(std::string_view s, std::size_t lineno) {
    const std::string buf(s);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty())
        throw data_error("csv: bad numeric field '" + buf + "' on line " +
                         std::to_string(lineno));
    return v;
}

}  // namespace detail

inline Dataset dataset_from_csv(const std::string& text, long split_index) {
    Dataset d;
    d.split_index = split_index;
    std::size_t pos = 0, lineno = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string_view line(text.data() + pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = nl + 1;
        ++lineno;
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "t,u,omega,alpha")
                throw data_error("csv: expected header 't,u,omega,alpha'");
            saw_header = true;
            continue;
        }
        const auto f = detail::split_csv_line(line);
        if (f.size() != 4)
            throw data_error("csv: expected 4 fields on line " +
                             std::to_string(lineno));
        d.t.push_back(detail::parse_double_field(f[0], lineno));
        d.u.push_back(detail::parse_double_field(f[1], lineno));
        d.y.push_back(detail::parse_double_field(f[2], lineno));
        d.y.push_back(detail::parse_double_field(f[3], lineno));
    }
    if (!saw_header) throw data_error("csv: missing header");
    if (d.rows() < 2) throw data_error("csv: need at least two rows");
    d.h = d.t[1] - d.t[0];
    if (!(d.h > 0.0)) throw data_error("csv: time must be increasing");
    for (std::size_t i = 0; i + 1 < d.rows(); ++i)
        if (std::abs(d.t[i + 1] - d.t[i] - d.h) > 1e-9)
            throw data_error("csv: non-uniform time grid near row " +
                             std::to_string(i));
    if (split_index < 1 || split_index >= static_cast<long>(d.steps()))
        throw data_error("dataset: split_index must lie inside the run");
    return d;
}

inline void write_dataset_csv(const std::filesystem::path& p,
                              const Dataset& d) {
    atomic_write_file(p, dataset_to_csv(d));
}

inline Dataset read_dataset_csv(const std::filesystem::path& p,
                                long split_index) {
    return dataset_from_csv(read_file(p), split_index);
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

struct EvalResult {
    bool diverged = false;
    long diverged_step = -1;
    double rmse_train_omega = std::numeric_limits<double>::quiet_NaN();
    double rmse_train_alpha = std::numeric_limits<double>::quiet_NaN();
    double rmse_test_omega = std::numeric_limits<double>::quiet_NaN();
    double rmse_test_alpha = std::numeric_limits<double>::quiet_NaN();
    double rmse_train = std::numeric_limits<double>::quiet_NaN();
    double rmse_test = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> traj;  // finite predicted states, rows x 3
};

// Single free rollout over the whole record from (measured row 0, fitted
// latent init), scored against the measurements: train rows 1..split, test
// rows split+1..end. Per-channel RMSE plus the combined
// sqrt(mean of channel MSEs).
template <NominalModel M>
EvalResult evaluate(const ComposedDynamics<M>& dyn, const Dataset& d,
                    std::span<const double> theta, std::span<const double> phi,
                    std::span<const double> x0_lat) {
    constexpr int nx = ComposedDynamics<M>::state_dim;
    constexpr int ny = M::obs_dim;
    static_assert(ny == 2);
    if (theta.size() != static_cast<std::size_t>(M::theta_dim))
        throw config_error("evaluate: theta size mismatch");
    if (phi.size() != dyn.phi_count())
        throw config_error("evaluate: phi size mismatch");
    if (x0_lat.size() != static_cast<std::size_t>(M::lat_dim))
        throw config_error("evaluate: latent init size mismatch");

    const long steps = d.steps();
    EvalResult res;
    res.traj.reserve(static_cast<std::size_t>(steps + 1) * nx);

    std::vector<double> x(static_cast<std::size_t>(nx)), nxt(static_cast<std::size_t>(nx));
    x[0] = d.y[0];
    x[1] = d.y[1];
    for (int j = 0; j < M::lat_dim; ++j) x[static_cast<std::size_t>(ny + j)] = x0_lat[static_cast<std::size_t>(j)];
    res.traj.insert(res.traj.end(), x.begin(), x.end());

    Rk4Scratch<double> ws;
    double se_tr[2] = {0.0, 0.0}, se_te[2] = {0.0, 0.0};
    long n_tr = 0, n_te = 0;
    for (long i = 0; i < steps; ++i) {
        const auto u = std::span<const double>(d.u).subspan(static_cast<std::size_t>(i), 1);
        rk4_step(
            [&](std::span<const double> xx, std::span<double> dxx) {
                dyn.template eval<double>(xx, u, theta, phi, dxx);
            },
            std::span<const double>(x), d.h, std::span<double>(nxt), ws);
        bool finite = true;
        for (double v : nxt) finite = finite && std::isfinite(v);
        if (!finite) {
            res.diverged = true;
            res.diverged_step = i;
            return res;
        }
        x.swap(nxt);
        res.traj.insert(res.traj.end(), x.begin(), x.end());
        const long row = i + 1;
        for (int c = 0; c < 2; ++c) {
            const double dyc = x[static_cast<std::size_t>(c)] - d.y[static_cast<std::size_t>(row) * 2 + static_cast<std::size_t>(c)];
            if (row <= d.split_index)
                se_tr[c] += dyc * dyc;
            else
                se_te[c] += dyc * dyc;
        }
        if (row <= d.split_index)
            ++n_tr;
        else
            ++n_te;
    }
    if (n_tr > 0) {
        const double mw = se_tr[0] / n_tr, ma = se_tr[1] / n_tr;
        res.rmse_train_omega = std::sqrt(mw);
        res.rmse_train_alpha = std::sqrt(ma);
        res.rmse_train = std::sqrt(0.5 * (mw + ma));
    }
    if (n_te > 0) {
        const double mw = se_te[0] / n_te, ma = se_te[1] / n_te;
        res.rmse_test_omega = std::sqrt(mw);
        res.rmse_test_alpha = std::sqrt(ma);
        res.rmse_test = std::sqrt(0.5 * (mw + ma));
    }
    return res;
}

template <NominalModel M>
EvalResult evaluate(const ComposedDynamics<M>& dyn, const Dataset& d,
                    const ParamStore& p) {
    return evaluate(dyn, d, p.values("theta"), p.values("phi"),
                    p.values("x0_lat"));
}

// ---------------------------------------------------------------------------
// comparison run
// ---------------------------------------------------------------------------

enum class Variant { npm, ude, dilar_soft, dilar };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::npm: return "npm";
        case Variant::ude: return "ude";
        case Variant::dilar_soft: return "dilar_soft";
        case Variant::dilar: return "dilar";
    }
    throw error("variant_name: bad enum value");
}

inline Variant variant_from_name(std::string_view s) {
    if (s == "npm") return Variant::npm;
    if (s == "ude") return Variant::ude;
    if (s == "dilar_soft") return Variant::dilar_soft;
    if (s == "dilar") return Variant::dilar;
    throw config_error("unknown variant '" + std::string(s) +
                       "' (expected npm|ude|dilar_soft|dilar)");
}

inline ResidualKind variant_kind(Variant v) {
    switch (v) {
        case Variant::npm: return ResidualKind::none;
        case Variant::ude: return ResidualKind::full_state;
        case Variant::dilar_soft: return ResidualKind::soft;
        case Variant::dilar: return ResidualKind::dissipative;
    }
    throw error("variant_kind: bad enum value");
}

struct BenchmarkConfig {
    GroundTruthSpec truth;
    ChirpSpec chirp;
    int steps = 1000;
    double h = 0.1;
    long split_index = 500;
    double theta0_spread = 0.2;  // theta0 = theta_true * U[1 +- spread]
    int hidden = 12;             // width of both hidden layers
    FitConfig fit;               // shared optimizer/curriculum settings
    double lambda_soft = 1.0;    // penalty weight for the soft variant
    std::uint64_t seed = 1;
    int workers = 1;
    std::vector<Variant> variants{Variant::npm, Variant::ude,
                                  Variant::dilar_soft, Variant::dilar};

    BenchmarkConfig() {
        fit.thr_coeff = 1e-2;  // benchmark-scale curriculum threshold
    }
};

struct VariantResult {
    Variant variant = Variant::npm;
    enum class Status { ok, diverged, failed } status = Status::ok;
    std::string message;
    FitReport report;
    EvalResult eval;
    double seconds = 0.0;
};

inline const char* status_name(VariantResult::Status s) {
    switch (s) {
        case VariantResult::Status::ok: return "ok";
        case VariantResult::Status::diverged: return "diverged";
        case VariantResult::Status::failed: return "failed";
    }
    throw error("status_name: bad enum value");
}

struct ComparisonOutcome {
    Dataset data;
    std::vector<double> theta0;
    std::vector<double> weights;
    std::vector<VariantResult> results;  // in cfg.variants order
};

// Full benchmark protocol: generate data, fit the nominal-only model, then
// fit the residual variants from its theta (falling back to theta0 if it
// failed), and evaluate everything on the whole record. Seed layout (fixed
// regardless of which variants run): 0 noise, 1 theta0, 2 ude, 3 soft,
// 4 dilar. The residual fits are independent and may run on worker threads;
// results do not depend on the worker count.
inline ComparisonOutcome run_comparison(const BenchmarkConfig& cfg) {
    using Clock = std::chrono::steady_clock;
    if (cfg.steps < 2 || cfg.split_index < 1 ||
        cfg.split_index >= cfg.steps)
        throw config_error("compare: bad steps/split_index");
    if (cfg.fit.horizon != cfg.split_index)
        throw config_error("compare: fit.horizon must equal split_index");
    if (cfg.variants.empty()) throw config_error("compare: no variants");
    if (cfg.workers < 1) throw config_error("compare: workers must be >= 1");

    SeedSequence seq(cfg.seed);
    const std::uint64_t seed_noise = seq.next();
    const std::uint64_t seed_theta0 = seq.next();
    const std::uint64_t seed_init_ude = seq.next();
    const std::uint64_t seed_init_soft = seq.next();
    const std::uint64_t seed_init_dilar = seq.next();
    const auto variant_seed = [&](Variant v) {
        switch (v) {
            case Variant::ude: return seed_init_ude;
            case Variant::dilar_soft: return seed_init_soft;
            case Variant::dilar: return seed_init_dilar;
            default: return seed_theta0;  // unused: no network
        }
    };

    ComparisonOutcome out;
    out.data = generate_ground_truth(cfg.truth, cfg.chirp, cfg.steps, cfg.h,
                                     cfg.split_index, seed_noise);
    out.weights = cmse_weights(out.data.y, 2,
                               static_cast<std::size_t>(cfg.split_index) + 1);
    {
        Rng r(seed_theta0);
        out.theta0.resize(cfg.truth.theta_true.size());
        for (std::size_t k = 0; k < out.theta0.size(); ++k)
            out.theta0[k] = cfg.truth.theta_true[k] *
                            r.uniform(1.0 - cfg.theta0_spread,
                                      1.0 + cfg.theta0_spread);
    }

    const std::span<const double> us_train(out.data.u.data(),
                                           static_cast<std::size_t>(cfg.split_index));
    const std::span<const double> y_train(out.data.y.data(),
                                          (static_cast<std::size_t>(cfg.split_index) + 1) * 2);

    const auto run_one = [&](Variant v,
                             std::span<const double> theta_seed) {
        VariantResult r;
        r.variant = v;
        const auto t0 = Clock::now();
        try {
            ComposedDynamics<HelicopterModel> dyn =
                ComposedDynamics<HelicopterModel>::make(
                    variant_kind(v), {cfg.hidden, cfg.hidden});
            FitConfig fc = cfg.fit;
            fc.seed = variant_seed(v);
            fc.lambda_diss =
                v == Variant::dilar_soft ? cfg.lambda_soft : 0.0;
            r.report = fit(dyn, us_train, y_train, out.weights, cfg.h,
                           theta_seed, fc);
            r.eval = evaluate(dyn, out.data, r.report.params);
            if (r.eval.diverged) {
                r.status = VariantResult::Status::diverged;
                r.message = "evaluation rollout diverged at step " +
                            std::to_string(r.eval.diverged_step);
            }
        } catch (const error& e) {
            r.status = VariantResult::Status::failed;
            r.message = e.what();
        }
        r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        return r;
    };

    // the nominal-only fit seeds everything else
    std::span<const double> theta_seed(out.theta0);
    std::vector<Variant> follow;
    for (Variant v : cfg.variants) {
        if (v == Variant::npm)
            out.results.push_back(run_one(v, theta_seed));
        else
            follow.push_back(v);
    }
    for (const auto& r : out.results)
        if (r.variant == Variant::npm &&
            r.status != VariantResult::Status::failed)
            theta_seed = r.report.params.values("theta");

    std::vector<VariantResult> follow_results(follow.size());
    const int nthreads = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(cfg.workers), follow.size()));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < follow.size(); ++i)
            follow_results[i] = run_one(follow[i], theta_seed);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int k = 0; k < nthreads; ++k)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < follow.size();
                     i = next.fetch_add(1))
                    follow_results[i] = run_one(follow[i], theta_seed);
            });
        for (auto& th : pool) th.join();
    }

    // splice follow-on results back into the configured order
    std::size_t fi = 0;
    std::vector<VariantResult> ordered;
    ordered.reserve(cfg.variants.size());
    std::size_t npm_at = 0;
    for (Variant v : cfg.variants) {
        if (v == Variant::npm)
            ordered.push_back(std::move(out.results[npm_at++]));
        else
            ordered.push_back(std::move(follow_results[fi++]));
    }
    out.results = std::move(ordered);
    return out;
}

// ---------------------------------------------------------------------------
// artifacts
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double_17(v);
}

inline std::string json_num(double v) {
    if (!std::isfinite(v)) return "null";
    return format_double_17(v);
}

}  // namespace detail

// variant,status,rmse_train,rmse_test,rmse_train_omega,rmse_train_alpha,
// rmse_test_omega,rmse_test_alpha,final_loss  — deterministic given the
// configuration and seed (no timing columns).
inline std::string rmse_table_csv(const ComparisonOutcome& out) {
    std::string s =
        "variant,status,rmse_train,rmse_test,rmse_train_omega,"
        "rmse_train_alpha,rmse_test_omega,rmse_test_alpha,final_loss\n";
    for (const auto& r : out.results) {
        const bool have_fit = r.status != VariantResult::Status::failed;
        s += variant_name(r.variant);
        s += ',';
        s += status_name(r.status);
        for (const double v :
             {r.eval.rmse_train, r.eval.rmse_test, r.eval.rmse_train_omega,
              r.eval.rmse_train_alpha, r.eval.rmse_test_omega,
              r.eval.rmse_test_alpha}) {
            s += ',';
            s += detail::csv_num(v);
        }
        s += ',';
        s += have_fit ? detail::csv_num(r.report.final_loss) : "nan";
        s += '\n';
    }
    return s;
}

inline std::string rmse_table_json(const ComparisonOutcome& out) {
    std::string s = "{\n  \"theta0\": [";
    for (std::size_t k = 0; k < out.theta0.size(); ++k) {
        if (k) s += ", ";
        s += detail::json_num(out.theta0[k]);
    }
    s += "],\n  \"variants\": [\n";
    for (std::size_t i = 0; i < out.results.size(); ++i) {
        const auto& r = out.results[i];
        const bool have_fit = r.status != VariantResult::Status::failed;
        s += "    {\"name\": \"";
        s += variant_name(r.variant);
        s += "\", \"status\": \"";
        s += status_name(r.status);
        s += "\"";
        if (!r.message.empty()) {
            s += ", \"message\": ";
            s += nlohmann::json(r.message).dump();
        }
        const auto field = [&](const char* name, double v) {
            s += ", \"";
            s += name;
            s += "\": ";
            s += detail::json_num(v);
        };
        field("rmse_train", r.eval.rmse_train);
        field("rmse_test", r.eval.rmse_test);
        field("rmse_train_omega", r.eval.rmse_train_omega);
        field("rmse_train_alpha", r.eval.rmse_train_alpha);
        field("rmse_test_omega", r.eval.rmse_test_omega);
        field("rmse_test_alpha", r.eval.rmse_test_alpha);
        field("final_loss", have_fit
                                ? r.report.final_loss
                                : std::numeric_limits<double>::quiet_NaN());
        if (have_fit) {
            s += ", \"theta\": [";
            const auto& th = r.report.params.values("theta");
            for (std::size_t k = 0; k < th.size(); ++k) {
                if (k) s += ", ";
                s += detail::json_num(th[k]);
            }
            s += "]";
        }
        s += "}";
        if (i + 1 < out.results.size()) s += ",";
        s += "\n";
    }
    s += "  ]\n}\n";
    return s;
}

// t,u,omega_pred,alpha_pred,alphadot_pred — truncated at divergence.
inline std::string trajectory_csv(const Dataset& d, const EvalResult& e) {
    std::string s = "t,u,omega_pred,alpha_pred,alphadot_pred\n";
    const std::size_t rows = e.traj.size() / 3;
    for (std::size_t i = 0; i < rows; ++i) {
        s += format_double_17(d.t[i]);
        s += ',';
        s += format_double_17(d.u[i]);
        s += ',';
        s += format_double_17(e.traj[i * 3]);
        s += ',';
        s += format_double_17(e.traj[i * 3 + 1]);
        s += ',';
        s += format_double_17(e.traj[i * 3 + 2]);
        s += '\n';
    }
    return s;
}

}  // namespace dilar
