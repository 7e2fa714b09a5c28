#pragma once
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "io.hpp"

namespace dilar {

// Formats a double with enough digits that parsing it back is bit-exact.
// Negative zero needs a decimal point: "-0" would be parsed as an integer
// and lose its sign bit.
inline std::string format_double_17(double v) {
    if (v == 0.0) return std::signbit(v) ? "-0.0" : "0";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Named, ordered groups of doubles — the unit of checkpointing. Insertion
// order is part of the identity: flatten() concatenates groups in that order
// and the JSON serialization preserves it.
class ParamStore {
public:
    struct Entry {
        std::string name;
        std::vector<double> values;
    };

    void add(std::string name, std::vector<double> values) {
        if (has(name)) throw error("duplicate parameter group: " + name);
        entries_.push_back(Entry{std::move(name), std::move(values)});
    }

    bool has(std::string_view name) const {
        for (const auto& e : entries_)
            if (e.name == name) return true;
        return false;
    }

    std::vector<double>& values(std::string_view name) {
        for (auto& e : entries_)
            if (e.name == name) return e.values;
        throw error("no parameter group named: " + std::string(name));
    }

    const std::vector<double>& values(std::string_view name) const {
        for (const auto& e : entries_)
            if (e.name == name) return e.values;
        throw error("no parameter group named: " + std::string(name));
    }

    const std::vector<Entry>& entries() const { return entries_; }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.values.size();
        return n;
    }

    std::vector<double> flatten() const {
        std::vector<double> flat;
        flat.reserve(total_size());
        for (const auto& e : entries_)
            flat.insert(flat.end(), e.values.begin(), e.values.end());
        return flat;
    }

    void assign_flat(std::span<const double> flat) {
        if (flat.size() != total_size())
            throw error("flat size mismatch: got " + std::to_string(flat.size()) +
                        ", store holds " + std::to_string(total_size()));
        std::size_t k = 0;
        for (auto& e : entries_)
            for (auto& v : e.values) v = flat[k++];
    }

    // {"entries":[{"name":...,"values":[...]}]} with every value written at
    // 17 significant digits so a round trip reproduces the exact bits.
    std::string to_json() const {
        std::string out = "{\"entries\":[";
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            if (i) out += ',';
            out += "{\"name\":";
            out += nlohmann::json(e.name).dump();  // proper string escaping
            out += ",\"values\":[";
            for (std::size_t j = 0; j < e.values.size(); ++j) {
                if (!std::isfinite(e.values[j]))
                    throw data_error("non-finite value in parameter group '" +
                                     e.name + "'");
                if (j) out += ',';
                out += format_double_17(e.values[j]);
            }
            out += "]}";
        }
        out += "]}";
        return out;
    }

    static ParamStore from_json(const std::string& text) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& ex) {
            throw data_error(std::string("checkpoint is not valid JSON: ") +
                             ex.what());
        }
        if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
            throw data_error("checkpoint must be {\"entries\": [...]}");
        ParamStore ps;
        for (const auto& je : j["entries"]) {
            if (!je.is_object() || !je.contains("name") || !je["name"].is_string() ||
                !je.contains("values") || !je["values"].is_array())
                throw data_error(
                    "each checkpoint entry needs a string 'name' and numeric "
                    "'values'");
            std::vector<double> vals;
            vals.reserve(je["values"].size());
            for (const auto& v : je["values"]) {
                if (!v.is_number())
                    throw data_error("non-numeric value in entry '" +
                                     je["name"].get<std::string>() + "'");
                vals.push_back(v.get<double>());
            }
            const auto name = je["name"].get<std::string>();
            if (ps.has(name))
                throw data_error("duplicate entry name in checkpoint: " + name);
            ps.add(name, std::move(vals));
        }
        return ps;
    }

    void save(const std::filesystem::path& path) const {
        atomic_write_file(path, to_json() + "\n");
    }

    static ParamStore load(const std::filesystem::path& path) {
        return from_json(read_file(path));
    }

private:
    std::vector<Entry> entries_;
};

}  // namespace dilar
