#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "loopshaper/grid.hpp"
#include "loopshaper/polynomial.hpp"
#include "loopshaper/rational.hpp"

namespace loopshaper {

using Json = nlohmann::json;

// Transfer functions serialize as {"num":[a0,a1,...], "den":[b0,b1,...]},
// ascending powers of s.
inline Json to_json(const RationalTF& tf) {
    return Json{{"num", tf.num.coeffs()}, {"den", tf.den.coeffs()}};
}

inline RationalTF tf_from_json(const Json& j) {
    return RationalTF{Polynomial(j.at("num").get<std::vector<double>>()),
                      Polynomial(j.at("den").get<std::vector<double>>())};
}

// Numbers are printed with enough digits to round-trip doubles exactly, so
// repeated runs produce byte-identical artifacts.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string bode_csv(const RationalTF& tf, const FrequencyGrid& grid) {
    std::ostringstream os;
    os << "omega_rad_s,re,im,mag,phase_deg\n";
    for (double w : grid) {
        const Complex v = tf.eval_jw(w);
        os << format_double(w) << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << ','
           << format_double(std::abs(v)) << ',' << format_double(std::arg(v) * 180.0 / M_PI) << '\n';
    }
    return os.str();
}

// Write-then-rename so interrupted runs never leave half-written artifacts.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os << contents;
        os.flush();
        if (!os) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace loopshaper
