#pragma once
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "errors.hpp"

namespace dilar {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof())
        throw data_error("error while reading: " + path.string());
    return ss.str();
}

// Write-temp-then-rename so readers never observe a half-written file and an
// interrupted run cannot corrupt an existing one.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw data_error("cannot create file: " + tmp.string());
        out << content;
        out.flush();
        if (!out.good()) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw data_error("error while writing: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw data_error("cannot replace file: " + path.string());
    }
}

}  // namespace dilar
