#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace deonpol {

/// printf-style fixed significant digits, used for every CSV float.
inline std::string fmt_sig(double x, int digits = 6) {
    if (x == 0.0) x = 0.0;  // drop negative zero
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

inline std::string fmt_fixed(double x, int decimals) {
    if (x == 0.0) x = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    return buf;
}

inline std::string fmt_vector(const std::vector<double>& v, int decimals = 2) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt_fixed(v[i], decimals);
    }
    return out + "]";
}

}  // namespace deonpol
