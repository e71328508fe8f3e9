#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "oblique/problem.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(OBQ_TEST_DATA) + "/" + name; }

inline nlohmann::json read_json(const std::string& name) {
    std::ifstream in(data_path(name));
    return nlohmann::json::parse(in);
}

inline oblique::Problem make(const nlohmann::json& j, oblique::ProbeGrid probe = {}) {
    return oblique::parse_problem(j.dump(), probe);
}

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace testing
