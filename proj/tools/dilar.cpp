// Command-line front end: generate | fit | eval | compare.
//
// Configuration is a JSON file plus --set dotted-path overrides; every
// command runs a fixed seed layout so that standalone runs reproduce the
// corresponding pieces of a full comparison. Exit codes: 0 success,
// 2 usage/config, 3 data, 4 fit failure.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dilar/benchmark.hpp"

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// logging (stderr, controlled by DILAR_LOG)
// ---------------------------------------------------------------------------

enum class LogLevel { debug = 0, info = 1, warn = 2, err = 3, off = 4 };

LogLevel log_threshold() {
    static const LogLevel lvl = [] {
        const char* e = std::getenv("DILAR_LOG");
        const std::string_view s = e ? e : "info";
        if (s == "debug") return LogLevel::debug;
        if (s == "info" || s.empty()) return LogLevel::info;
        if (s == "warn") return LogLevel::warn;
        if (s == "error") return LogLevel::err;
        if (s == "off" || s == "silent") return LogLevel::off;
        return LogLevel::info;
    }();
    return lvl;
}

void log(LogLevel lvl, const std::string& msg) {
    if (lvl < log_threshold()) return;
    static constexpr const char* tag[] = {"debug", "info", "warn", "error"};
    std::fprintf(stderr, "[dilar %s] %s\n", tag[static_cast<int>(lvl)],
                 msg.c_str());
}

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

json default_config() {
    const dilar::BenchmarkConfig b;  // benchmark-scale fit defaults
    json truth = {
        {"theta_true", b.truth.theta_true},
        {"c_viscous", b.truth.c_viscous},
        {"c_coulomb", b.truth.c_coulomb},
        {"eps", b.truth.eps},
        {"d_stray", b.truth.d_stray},
        {"noise_std", b.truth.noise_std},
        {"substeps", b.truth.substeps},
    };
    json chirp = {
        {"f0", b.chirp.f0},           {"f1", b.chirp.f1},
        {"duration", b.chirp.duration}, {"amplitude", b.chirp.amplitude},
        {"offset", b.chirp.offset},
    };
    return json{
        {"seed", 1},
        {"workers", 1},
        {"data",
         {{"steps", b.steps},
          {"h", b.h},
          {"split_index", b.split_index},
          {"path", "data.csv"},
          {"truth", truth},
          {"chirp", chirp}}},
        {"fit",
         {{"variant", "dilar"},
          {"iterations", b.fit.iterations},
          {"lr", b.fit.lr},
          {"lr_final_ratio", b.fit.lr_final_ratio},
          {"decay_start_frac", b.fit.decay_start_frac},
          {"beta1", b.fit.beta1},
          {"beta2", b.fit.beta2},
          {"eps", b.fit.eps},
          {"clip_norm", b.fit.clip_norm},
          {"l0", b.fit.l0},
          {"dl", b.fit.dl},
          {"thr_coeff", b.fit.thr_coeff},
          {"lambda_diss", nullptr},  // null: variant default (soft -> 1)
          {"retry_budget", b.fit.retry_budget},
          {"hidden", json::array({b.hidden, b.hidden})},
          {"theta0", nullptr},  // must be set for standalone fits
          {"checkpoint", "checkpoint.json"},
          {"report", ""}}},
        {"eval",
         {{"checkpoint", "checkpoint.json"},
          {"variant", "dilar"},
          {"trajectory", "trajectory.csv"},
          {"rmse", ""}}},
        {"compare",
         {{"variants", json::array({"npm", "ude", "dilar_soft", "dilar"})},
          {"theta0_spread", b.theta0_spread},
          {"lambda_soft", b.lambda_soft},
          {"out_dir", "results"}}},
    };
}

void merge_into(json& base, const json& patch, const std::string& path) {
    if (!patch.is_object() || !base.is_object()) {
        base = patch;
        return;
    }
    for (const auto& [k, v] : patch.items()) {
        const std::string sub = path.empty() ? k : path + "." + k;
        if (base.contains(k))
            merge_into(base[k], v, sub);
        else
            base[k] = v;  // unknown keys are rejected during extraction
    }
}

void apply_set(json& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw dilar::config_error("--set expects key.path=value, got '" + kv +
                                  "'");
    const std::string path = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;  // bare strings are fine unquoted
    }
    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(
            start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty())
            throw dilar::config_error("--set path has an empty segment: '" +
                                      path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key)) (*node)[key] = json::object();
        node = &(*node)[key];
        if (!node->is_object())
            throw dilar::config_error("--set path '" + path +
                                      "' descends into a non-object");
        start = dot + 1;
    }
}

// --- typed extraction with strict key checking -----------------------------

const json& expect_object(const json& j, const std::string& path) {
    if (!j.is_object())
        throw dilar::config_error("config: '" + path + "' must be an object");
    return j;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> known) {
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (const auto& n : known) ok = ok || k == n;
        if (!ok)
            throw dilar::config_error(
                "config: unknown key '" + (path.empty() ? k : path + "." + k) +
                "'");
    }
}

double as_num(const json& j, const std::string& path) {
    if (!j.is_number())
        throw dilar::config_error("config: '" + path + "' must be a number");
    return j.get<double>();
}

long as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer())
        throw dilar::config_error("config: '" + path +
                                  "' must be an integer");
    return j.get<long>();
}

std::string as_str(const json& j, const std::string& path) {
    if (!j.is_string())
        throw dilar::config_error("config: '" + path + "' must be a string");
    return j.get<std::string>();
}

std::vector<double> as_num_array(const json& j, const std::string& path,
                                 std::size_t n) {
    if (!j.is_array() || (n != 0 && j.size() != n))
        throw dilar::config_error("config: '" + path + "' must be an array" +
                                  (n ? " of " + std::to_string(n) + " numbers"
                                     : ""));
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(as_num(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

struct CliConfig {
    std::uint64_t seed = 1;
    int workers = 1;

    int steps = 1000;
    double h = 0.1;
    long split_index = 500;
    std::string data_path;
    dilar::GroundTruthSpec truth;
    dilar::ChirpSpec chirp;

    std::string fit_variant;
    dilar::FitConfig fit;  // horizon is filled from split_index
    std::optional<double> lambda_diss;
    std::vector<int> hidden;
    std::optional<std::vector<double>> theta0;
    std::string checkpoint_path;
    std::string report_path;

    std::string eval_checkpoint;
    std::string eval_variant;
    std::string trajectory_path;
    std::string rmse_path;

    std::vector<dilar::Variant> variants;
    double theta0_spread = 0.2;
    double lambda_soft = 1.0;
    std::string out_dir;
};

CliConfig extract_config(const json& root) {
    CliConfig c;
    expect_object(root, "(root)");
    check_keys(root, "", {"seed", "workers", "data", "fit", "eval", "compare"});

    if (root.contains("seed")) {
        const long s = as_int(root["seed"], "seed");
        if (s < 0) throw dilar::config_error("config: seed must be >= 0");
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (root.contains("workers")) {
        c.workers = static_cast<int>(as_int(root["workers"], "workers"));
        if (c.workers < 1)
            throw dilar::config_error("config: workers must be >= 1");
    }

    const json& d = expect_object(root.at("data"), "data");
    check_keys(d, "data",
               {"steps", "h", "split_index", "path", "truth", "chirp"});
    c.steps = static_cast<int>(as_int(d.at("steps"), "data.steps"));
    c.h = as_num(d.at("h"), "data.h");
    c.split_index = as_int(d.at("split_index"), "data.split_index");
    c.data_path = as_str(d.at("path"), "data.path");
    if (c.h <= 0.0) throw dilar::config_error("config: data.h must be > 0");

    const json& tr = expect_object(d.at("truth"), "data.truth");
    check_keys(tr, "data.truth",
               {"theta_true", "c_viscous", "c_coulomb", "eps", "d_stray",
                "noise_std", "substeps"});
    const auto th = as_num_array(tr.at("theta_true"), "data.truth.theta_true", 5);
    std::copy(th.begin(), th.end(), c.truth.theta_true.begin());
    c.truth.c_viscous = as_num(tr.at("c_viscous"), "data.truth.c_viscous");
    c.truth.c_coulomb = as_num(tr.at("c_coulomb"), "data.truth.c_coulomb");
    c.truth.eps = as_num(tr.at("eps"), "data.truth.eps");
    c.truth.d_stray = as_num(tr.at("d_stray"), "data.truth.d_stray");
    const auto ns = as_num_array(tr.at("noise_std"), "data.truth.noise_std", 2);
    c.truth.noise_std = {ns[0], ns[1]};
    c.truth.substeps =
        static_cast<int>(as_int(tr.at("substeps"), "data.truth.substeps"));

    const json& ch = expect_object(d.at("chirp"), "data.chirp");
    check_keys(ch, "data.chirp",
               {"f0", "f1", "duration", "amplitude", "offset"});
    c.chirp.f0 = as_num(ch.at("f0"), "data.chirp.f0");
    c.chirp.f1 = as_num(ch.at("f1"), "data.chirp.f1");
    c.chirp.duration = as_num(ch.at("duration"), "data.chirp.duration");
    c.chirp.amplitude = as_num(ch.at("amplitude"), "data.chirp.amplitude");
    c.chirp.offset = as_num(ch.at("offset"), "data.chirp.offset");

    const json& f = expect_object(root.at("fit"), "fit");
    check_keys(f, "fit",
               {"variant", "iterations", "lr", "lr_final_ratio",
                "decay_start_frac", "beta1", "beta2", "eps", "clip_norm", "l0",
                "dl", "thr_coeff", "lambda_diss", "retry_budget", "hidden",
                "theta0", "checkpoint", "report"});
    c.fit_variant = as_str(f.at("variant"), "fit.variant");
    c.fit.iterations =
        static_cast<int>(as_int(f.at("iterations"), "fit.iterations"));
    c.fit.lr = as_num(f.at("lr"), "fit.lr");
    c.fit.lr_final_ratio =
        as_num(f.at("lr_final_ratio"), "fit.lr_final_ratio");
    c.fit.decay_start_frac =
        as_num(f.at("decay_start_frac"), "fit.decay_start_frac");
    c.fit.beta1 = as_num(f.at("beta1"), "fit.beta1");
    c.fit.beta2 = as_num(f.at("beta2"), "fit.beta2");
    c.fit.eps = as_num(f.at("eps"), "fit.eps");
    c.fit.clip_norm = as_num(f.at("clip_norm"), "fit.clip_norm");
    c.fit.l0 = static_cast<int>(as_int(f.at("l0"), "fit.l0"));
    c.fit.dl = static_cast<int>(as_int(f.at("dl"), "fit.dl"));
    c.fit.thr_coeff = as_num(f.at("thr_coeff"), "fit.thr_coeff");
    if (!f.at("lambda_diss").is_null())
        c.lambda_diss = as_num(f.at("lambda_diss"), "fit.lambda_diss");
    c.fit.retry_budget =
        static_cast<int>(as_int(f.at("retry_budget"), "fit.retry_budget"));
    {
        const json& hd = f.at("hidden");
        if (!hd.is_array() || hd.empty())
            throw dilar::config_error(
                "config: fit.hidden must be a non-empty array");
        for (std::size_t i = 0; i < hd.size(); ++i)
            c.hidden.push_back(static_cast<int>(
                as_int(hd[i], "fit.hidden[" + std::to_string(i) + "]")));
    }
    if (!f.at("theta0").is_null())
        c.theta0 = as_num_array(f.at("theta0"), "fit.theta0", 5);
    c.checkpoint_path = as_str(f.at("checkpoint"), "fit.checkpoint");
    c.report_path = as_str(f.at("report"), "fit.report");

    const json& e = expect_object(root.at("eval"), "eval");
    check_keys(e, "eval", {"checkpoint", "variant", "trajectory", "rmse"});
    c.eval_checkpoint = as_str(e.at("checkpoint"), "eval.checkpoint");
    c.eval_variant = as_str(e.at("variant"), "eval.variant");
    c.trajectory_path = as_str(e.at("trajectory"), "eval.trajectory");
    c.rmse_path = as_str(e.at("rmse"), "eval.rmse");

    const json& cp = expect_object(root.at("compare"), "compare");
    check_keys(cp, "compare",
               {"variants", "theta0_spread", "lambda_soft", "out_dir"});
    {
        const json& vs = cp.at("variants");
        if (!vs.is_array() || vs.empty())
            throw dilar::config_error(
                "config: compare.variants must be a non-empty array");
        for (std::size_t i = 0; i < vs.size(); ++i)
            c.variants.push_back(dilar::variant_from_name(as_str(
                vs[i], "compare.variants[" + std::to_string(i) + "]")));
        for (std::size_t i = 0; i < c.variants.size(); ++i)
            for (std::size_t k = i + 1; k < c.variants.size(); ++k)
                if (c.variants[i] == c.variants[k])
                    throw dilar::config_error(
                        "config: compare.variants lists a variant twice");
    }
    c.theta0_spread = as_num(cp.at("theta0_spread"), "compare.theta0_spread");
    c.lambda_soft = as_num(cp.at("lambda_soft"), "compare.lambda_soft");
    c.out_dir = as_str(cp.at("out_dir"), "compare.out_dir");

    return c;
}

json load_config_file(const std::string& path) {
    std::string text;
    try {
        text = dilar::read_file(path);
    } catch (const dilar::data_error& e) {
        throw dilar::config_error(std::string("cannot read config: ") +
                                  e.what());
    }
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw dilar::config_error("config file is not valid JSON: " +
                                  std::string(e.what()));
    }
}

// Fixed sub-seed layout shared by every command, so a standalone run
// reproduces the matching slice of a full comparison:
// 0 noise, 1 theta0, 2 ude init, 3 soft init, 4 dilar init.
struct SeedLayout {
    std::uint64_t noise, theta0, ude, soft, dilar;
    explicit SeedLayout(std::uint64_t master) {
        dilar::SeedSequence seq(master);
        noise = seq.next();
        theta0 = seq.next();
        ude = seq.next();
        soft = seq.next();
        dilar = seq.next();
    }
    std::uint64_t for_variant(dilar::Variant v) const {
        switch (v) {
            case dilar::Variant::ude: return ude;
            case dilar::Variant::dilar_soft: return soft;
            case dilar::Variant::dilar: return dilar;
            default: return theta0;  // no network to draw
        }
    }
};

double variant_lambda(const CliConfig& c, dilar::Variant v) {
    if (c.lambda_diss) return *c.lambda_diss;
    return v == dilar::Variant::dilar_soft ? c.lambda_soft : 0.0;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_generate(const CliConfig& c) {
    const SeedLayout seeds(c.seed);
    log(LogLevel::info, "generating " + std::to_string(c.steps) +
                            " steps at h=" + dilar::format_double_17(c.h));
    const auto data = dilar::generate_ground_truth(
        c.truth, c.chirp, c.steps, c.h, c.split_index, seeds.noise);
    dilar::write_dataset_csv(c.data_path, data);
    std::printf("wrote %s (%zu rows, train split after row %ld)\n",
                c.data_path.c_str(), data.rows(), data.split_index);
    return 0;
}

int cmd_fit(const CliConfig& c) {
    const auto v = dilar::variant_from_name(c.fit_variant);
    if (!c.theta0)
        throw dilar::config_error(
            "fit.theta0 is required for a standalone fit (compare derives "
            "its own)");
    const auto data = dilar::read_dataset_csv(c.data_path, c.split_index);
    const auto w = dilar::cmse_weights(
        data.y, 2, static_cast<std::size_t>(data.split_index) + 1);

    auto dyn = dilar::ComposedDynamics<dilar::HelicopterModel>::make(
        dilar::variant_kind(v), c.hidden);
    dilar::FitConfig fc = c.fit;
    fc.horizon = static_cast<int>(data.split_index);
    fc.lambda_diss = variant_lambda(c, v);
    fc.seed = SeedLayout(c.seed).for_variant(v);

    log(LogLevel::info, std::string("fitting ") + dilar::variant_name(v) +
                            " for " + std::to_string(fc.iterations) +
                            " iterations");
    const auto rep = dilar::fit(
        dyn,
        std::span<const double>(data.u).first(
            static_cast<std::size_t>(fc.horizon)),
        std::span<const double>(data.y).first(
            (static_cast<std::size_t>(fc.horizon) + 1) * 2),
        w, data.h, *c.theta0, fc);
    log(LogLevel::info,
        "fit took " + std::to_string(rep.wall_seconds) + "s, " +
            std::to_string(rep.divergence_retries) + " restarts");

    rep.params.save(c.checkpoint_path);
    if (!c.report_path.empty()) {
        std::string j = "{\"variant\":\"";
        j += dilar::variant_name(v);
        j += "\",\"final_loss\":";
        j += dilar::format_double_17(rep.final_loss);
        j += ",\"t_full\":";
        j += std::to_string(rep.t_full);
        j += ",\"curriculum\":[";
        for (std::size_t i = 0; i < rep.curriculum.size(); ++i) {
            if (i) j += ',';
            j += "{\"iteration\":" + std::to_string(rep.curriculum[i].iteration) +
                 ",\"l\":" + std::to_string(rep.curriculum[i].l) + "}";
        }
        j += "],\"loss_history\":[";
        for (std::size_t i = 0; i < rep.loss_history.size(); ++i) {
            if (i) j += ',';
            j += dilar::format_double_17(rep.loss_history[i]);
        }
        j += "]}";
        dilar::atomic_write_file(c.report_path, j + "\n");
    }
    std::printf("%s: final_loss=%s t_full=%d wrote %s\n",
                dilar::variant_name(v),
                dilar::format_double_17(rep.final_loss).c_str(), rep.t_full,
                c.checkpoint_path.c_str());
    return 0;
}

int cmd_eval(const CliConfig& c) {
    const auto v = dilar::variant_from_name(c.eval_variant);
    const auto data = dilar::read_dataset_csv(c.data_path, c.split_index);
    const auto params = dilar::ParamStore::load(c.eval_checkpoint);
    const auto dyn = dilar::ComposedDynamics<dilar::HelicopterModel>::make(
        dilar::variant_kind(v), c.hidden);
    const auto res = dilar::evaluate(dyn, data, params);

    dilar::atomic_write_file(c.trajectory_path,
                             dilar::trajectory_csv(data, res));
    if (!c.rmse_path.empty()) {
        std::string j = "{\"variant\":\"";
        j += dilar::variant_name(v);
        j += "\",\"status\":\"";
        j += res.diverged ? "diverged" : "ok";
        j += "\"";
        const auto field = [&](const char* name, double val) {
            j += ",\"";
            j += name;
            j += "\":";
            j += std::isfinite(val) ? dilar::format_double_17(val) : "null";
        };
        field("rmse_train", res.rmse_train);
        field("rmse_test", res.rmse_test);
        field("rmse_train_omega", res.rmse_train_omega);
        field("rmse_train_alpha", res.rmse_train_alpha);
        field("rmse_test_omega", res.rmse_test_omega);
        field("rmse_test_alpha", res.rmse_test_alpha);
        if (res.diverged)
            j += ",\"diverged_step\":" + std::to_string(res.diverged_step);
        j += "}";
        dilar::atomic_write_file(c.rmse_path, j + "\n");
    }
    if (res.diverged) {
        std::printf("%s: diverged at step %ld; wrote %s\n",
                    dilar::variant_name(v), res.diverged_step,
                    c.trajectory_path.c_str());
    } else {
        std::printf("%s: rmse_train=%s rmse_test=%s wrote %s\n",
                    dilar::variant_name(v),
                    dilar::format_double_17(res.rmse_train).c_str(),
                    dilar::format_double_17(res.rmse_test).c_str(),
                    c.trajectory_path.c_str());
    }
    return 0;
}

int cmd_compare(const CliConfig& c) {
    dilar::BenchmarkConfig bc;
    bc.truth = c.truth;
    bc.chirp = c.chirp;
    bc.steps = c.steps;
    bc.h = c.h;
    bc.split_index = c.split_index;
    bc.theta0_spread = c.theta0_spread;
    if (c.hidden.size() != 2 || c.hidden[0] != c.hidden[1])
        throw dilar::config_error(
            "compare uses two equal hidden layers; set fit.hidden=[w,w]");
    bc.hidden = c.hidden[0];
    bc.fit = c.fit;
    bc.fit.horizon = static_cast<int>(c.split_index);
    bc.lambda_soft = c.lambda_soft;
    bc.seed = c.seed;
    bc.workers = c.workers;
    bc.variants = c.variants;

    log(LogLevel::info,
        "comparing " + std::to_string(bc.variants.size()) + " variants, " +
            std::to_string(bc.fit.iterations) + " iterations each, " +
            std::to_string(bc.workers) + " worker(s)");
    const auto out = dilar::run_comparison(bc);

    const std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);
    dilar::write_dataset_csv(dir / "data.csv", out.data);
    dilar::atomic_write_file(dir / "rmse.csv", dilar::rmse_table_csv(out));
    dilar::atomic_write_file(dir / "rmse.json", dilar::rmse_table_json(out));

    int completed = 0;
    for (const auto& r : out.results) {
        const std::string name = dilar::variant_name(r.variant);
        if (r.status != dilar::VariantResult::Status::failed) {
            dilar::atomic_write_file(dir / ("trajectory_" + name + ".csv"),
                                     dilar::trajectory_csv(out.data, r.eval));
            r.report.params.save(dir / ("checkpoint_" + name + ".json"));
        }
        switch (r.status) {
            case dilar::VariantResult::Status::ok:
                ++completed;
                std::printf("%-10s ok        rmse_train=%-12.6g rmse_test=%-12.6g (%.1fs)\n",
                            name.c_str(), r.eval.rmse_train, r.eval.rmse_test,
                            r.seconds);
                break;
            case dilar::VariantResult::Status::diverged:
                std::printf("%-10s diverged  %s\n", name.c_str(),
                            r.message.c_str());
                break;
            case dilar::VariantResult::Status::failed:
                std::printf("%-10s failed    %s\n", name.c_str(),
                            r.message.c_str());
                break;
        }
    }
    std::printf("wrote %s\n", (dir / "rmse.csv").string().c_str());
    if (completed == 0) {
        log(LogLevel::err, "no variant completed");
        return 4;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grey-box system identification on the helicopter benchmark"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> sets;
    std::int64_t seed_flag = -1;
    int workers_flag = 0;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--set", sets,
                   "override a config value, e.g. --set fit.iterations=500")
        ->take_all();
    app.add_option("--seed", seed_flag, "override the master seed");
    app.add_option("--workers", workers_flag,
                   "worker threads for comparison fits");

    auto* sub_generate =
        app.add_subcommand("generate", "simulate the plant and write the dataset");
    auto* sub_fit = app.add_subcommand("fit", "fit one variant to the dataset");
    auto* sub_eval =
        app.add_subcommand("eval", "roll out a checkpoint over the dataset");
    auto* sub_compare =
        app.add_subcommand("compare", "run the full variant comparison");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // help/version exit 0, usage errors exit 2
    }

    try {
        json cfg = default_config();
        if (!config_path.empty()) merge_into(cfg, load_config_file(config_path), "");
        for (const auto& kv : sets) apply_set(cfg, kv);
        if (seed_flag >= 0) cfg["seed"] = seed_flag;
        if (workers_flag > 0) cfg["workers"] = workers_flag;
        const CliConfig c = extract_config(cfg);

        if (sub_generate->parsed()) return cmd_generate(c);
        if (sub_fit->parsed()) return cmd_fit(c);
        if (sub_eval->parsed()) return cmd_eval(c);
        return cmd_compare(c);
    } catch (const dilar::config_error& e) {
        log(LogLevel::err, e.what());
        return 2;
    } catch (const dilar::data_error& e) {
        log(LogLevel::err, e.what());
        return 3;
    } catch (const dilar::fit_error& e) {
        log(LogLevel::err, e.what());
        return 4;
    } catch (const dilar::divergence_error& e) {
        log(LogLevel::err, e.what());
        return 4;
    } catch (const std::exception& e) {
        log(LogLevel::err, std::string("unexpected: ") + e.what());
        return 1;
    }
}
