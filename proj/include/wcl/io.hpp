#pragma once

// Serialization helpers shared by model files, generator files and
// experiment outputs. All floating-point values are written with 17
// significant digits so that parsing reproduces the exact double.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "wcl/errors.hpp"
#include "wcl/opalg.hpp"

namespace wcl::io {

inline constexpr const char* kSchemaVersion = "wcl-1";

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string real_array_json(const double* data, std::size_t n) {
    std::string out = "[";
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ",";
        out += fmt17(data[i]);
    }
    out += "]";
    return out;
}

// {"re": [[...]], "im": [[...]]} row-major nested arrays
inline std::string matrix_json(const Operator& m) {
    std::ostringstream os;
    auto emit = [&](bool real_part) {
        os << "[";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (r) os << ",";
            os << "[";
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (c) os << ",";
                os << fmt17(real_part ? m(r, c).real() : m(r, c).imag());
            }
            os << "]";
        }
        os << "]";
    };
    os << "{\"re\":";
    emit(true);
    os << ",\"im\":";
    emit(false);
    os << "}";
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ExperimentError("cannot open for writing: " + path);
    f << content;
    if (!f) throw ExperimentError("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ExperimentError("cannot open for reading: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

} // namespace wcl::io
