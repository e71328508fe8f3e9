#include "oblique/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

namespace oblique {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

namespace {

void schedule_line(std::string& out, const char* level, std::size_t step, const ScheduleEntry& e) {
    out += level;
    out += ',' + std::to_string(step) + ',' + format_double(e.parameter) + ',' + format_double(e.d_estimate) +
           ',' + format_double(e.extrapolate) + ',' + format_double(e.profile_delta) + ',' +
           std::to_string(e.iterations) + '\n';
}

nlohmann::json entry_json(const ScheduleEntry& e) {
    return {{"parameter", json_number(e.parameter)},
            {"d_estimate", json_number(e.d_estimate)},
            {"extrapolate", json_number(e.extrapolate)},
            {"profile_delta", json_number(e.profile_delta)},
            {"iterations", e.iterations}};
}

}  // namespace

std::string schedule_csv(const ErgodicEstimate& est) {
    std::string out = "level,step,parameter,d_estimate,extrapolate,profile_delta,iterations\n";
    if (est.method == Method::VanishingDiscount && est.inner.empty()) {
        for (std::size_t k = 0; k < est.schedule.size(); ++k) schedule_line(out, "lambda", k, est.schedule[k]);
        return out;
    }
    const char* outer = est.method == Method::VanishingViscosity ? "eps" : "R";
    for (std::size_t k = 0; k < est.schedule.size() || k < est.inner.size(); ++k) {
        if (k < est.schedule.size()) schedule_line(out, outer, k, est.schedule[k]);
        if (k < est.inner.size())
            for (std::size_t q = 0; q < est.inner[k].size(); ++q) schedule_line(out, "lambda", q, est.inner[k][q]);
    }
    return out;
}

nlohmann::json estimate_json(const ErgodicEstimate& est) {
    nlohmann::json j;
    j["d"] = json_number(est.d);
    j["converged"] = est.converged;
    j["method"] = to_string(est.method);
    j["band"] = {json_number(est.band_lo), json_number(est.band_hi)};
    j["x0_node"] = est.x0_node;
    j["diagnostics"] = est.diagnostics;
    auto& s = j["schedule"] = nlohmann::json::array();
    for (const auto& e : est.schedule) s.push_back(entry_json(e));
    auto& in = j["inner"] = nlohmann::json::array();
    for (const auto& steps : est.inner) {
        auto a = nlohmann::json::array();
        for (const auto& e : steps) a.push_back(entry_json(e));
        in.push_back(std::move(a));
    }
    if (est.profile.values.size()) j["profile"] = field_summary(est.profile);
    return j;
}

nlohmann::json field_summary(const GridField& f) {
    nlohmann::json j;
    j["n1"] = f.geom.n1;
    j["n2"] = f.geom.n2;
    j["periodic"] = f.geom.periodic;
    j["top"] = f.geom.top;
    if (f.values.size()) {
        j["min"] = json_number(f.values.minCoeff());
        j["max"] = json_number(f.values.maxCoeff());
    }
    std::map<std::string, std::size_t> counts;
    for (NodeTag t : f.tags) ++counts[to_string(t)];
    j["tags"] = counts;
    return j;
}

std::string field_csv(const GridField& f) {
    std::string out = "x1,x2,tag,value\n";
    for (std::size_t j = 0; j < f.geom.n2; ++j)
        for (std::size_t i = 0; i < f.geom.n1; ++i) {
            const std::size_t k = f.geom.index(i, j);
            out += format_double(f.geom.x1(i)) + ',' + format_double(f.geom.x2(i, j)) + ',' +
                   (k < f.tags.size() ? to_string(f.tags[k]) : "Interior") + ',' + format_double(f.values[k]) +
                   '\n';
        }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << text;
    if (!os.good()) throw IoError("failed writing " + path);
}

}  // namespace oblique
