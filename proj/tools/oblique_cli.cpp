// Batch runner over the C API: ergodic, cell, table, homogenize, validate.
// Exit 0 when converged, 2 when a method reports a band or stops short of its
// tolerance, 1 on errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oblique/oblique.h"

namespace {

struct RunConfig {
    std::string command;
    std::string problem;
    std::string grid = "64x64";
    double tol_d = 1e-6;
    double tol_solver = 1e-9;
    std::string out = ".";
    std::vector<double> eps;
    std::vector<std::size_t> knots;
    std::string method = "auto";
    std::vector<double> x0;
    double x1 = 0.0, r = 0.0, p1 = 0.0, p2 = 0.0;
    std::vector<double> r_range{-1.0, 1.0}, p1_range{-1.0, 1.0};
    std::size_t cell_n1 = 32;
    double cell_r0 = 4.0;
    int cell_max_doublings = 5;
    int k_min = 3, k_max = 12, max_doublings = 4;
    bool no_early_stop = false;
};

bool write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
    return os.good();
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out;
}

// results.json for a run that failed before producing a result.
int report_error(const std::filesystem::path& dir, const std::string& command) {
    const std::string code = obq_last_error_code(), msg = obq_last_error();
    std::fprintf(stderr, "error [%s]: %s\n", code.c_str(), msg.c_str());
    std::ostringstream js;
    js << "{\n  \"command\": \"" << command << "\",\n  \"error\": {\n    \"code\": \"" << escape(code)
       << "\",\n    \"message\": \"" << escape(msg) << "\"\n  }\n}\n";
    write_file(dir / "results.json", js.str());
    return 1;
}

bool parse_grid(const std::string& s, std::size_t& n1, std::size_t& n2) {
    unsigned long a = 0, b = 0;
    char x = 0, tail = 0;
    if (std::sscanf(s.c_str(), "%lu%c%lu%c", &a, &x, &b, &tail) != 3 || (x != 'x' && x != 'X')) return false;
    n1 = a;
    n2 = b;
    return true;
}

int emit(const std::filesystem::path& dir, obq_result* res, obq_status st, const std::string& command) {
    if (!res) return report_error(dir, command);
    write_file(dir / "results.json", obq_result_json(res));
    for (std::size_t i = 0; i < obq_result_artifact_count(res); ++i) {
        const char* name = obq_result_artifact_name(res, i);
        write_file(dir / name, obq_result_artifact(res, name));
    }
    int code = 0;
    double lo = 0.0, hi = 0.0;
    const bool band = obq_result_band(res, &lo, &hi) != 0;
    const double d = obq_result_d(res);
    if (command == "ergodic" || command == "cell") {
        if (band)
            std::printf("d in [%.17g, %.17g] (band width %.3g, no unique limit)\n", lo, hi, hi - lo);
        else
            std::printf("d = %.17g\n", d);
    }
    if (st != OBQ_OK) std::fprintf(stderr, "warning [%s]: %s\n", obq_last_error_code(), obq_last_error());
    if (!obq_result_converged(res)) code = 2;
    obq_result_free(res);
    return code;
}

int run(const RunConfig& c) {
    namespace fs = std::filesystem;
    const fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::fprintf(stderr, "error [IoError]: cannot create %s: %s\n", c.out.c_str(), ec.message().c_str());
        return 1;
    }
    obq_options o;
    obq_options_default(&o);
    if (!parse_grid(c.grid, o.n1, o.n2)) {
        std::fprintf(stderr, "error [InvalidArgument]: --grid expects N1xN2, got '%s'\n", c.grid.c_str());
        return 1;
    }
    if (o.n1 < 16 || o.n2 < 16) {
        std::fprintf(stderr, "error [InvalidArgument]: grid must be at least 16x16\n");
        return 1;
    }
    o.tol_d = c.tol_d;
    o.tol_solver = c.tol_solver;
    o.k_min = c.k_min;
    o.k_max = c.k_max;
    o.max_doublings = c.max_doublings;
    o.early_stop = c.no_early_stop ? 0 : 1;
    o.cell_n1 = c.cell_n1;
    o.cell_r0 = c.cell_r0;
    o.cell_max_doublings = c.cell_max_doublings;
    if (c.method == "discount") o.method = OBQ_METHOD_DISCOUNT;
    else if (c.method == "truncation") o.method = OBQ_METHOD_TRUNCATION;
    else if (c.method == "viscosity") o.method = OBQ_METHOD_VISCOSITY;
    if (c.x0.size() == 2) {
        o.has_x0 = 1;
        o.x0[0] = c.x0[0];
        o.x0[1] = c.x0[1];
    }
    if (!c.knots.empty()) {
        if (c.knots.size() != 3) {
            std::fprintf(stderr, "error [InvalidArgument]: --knots expects three counts a,b,c\n");
            return 1;
        }
        for (int q = 0; q < 3; ++q) o.knots[q] = c.knots[q];
    }
    o.r_range[0] = c.r_range[0];
    o.r_range[1] = c.r_range[1];
    o.p1_range[0] = c.p1_range[0];
    o.p1_range[1] = c.p1_range[1];

    if (c.command == "validate") {
        obq_result* res = nullptr;
        int ok = 0;
        if (obq_validate(c.problem.c_str(), o.n1, o.n2, &res, &ok) != OBQ_OK) return report_error(dir, c.command);
        write_file(dir / "results.json", obq_result_json(res));
        std::fputs(obq_result_json(res), stdout);
        obq_result_free(res);
        return ok ? 0 : 1;
    }

    obq_problem* prob = nullptr;
    if (obq_problem_load(c.problem.c_str(), o.n1, o.n2, &prob) != OBQ_OK) return report_error(dir, c.command);
    obq_result* res = nullptr;
    obq_status st = OBQ_OK;
    if (c.command == "ergodic") {
        st = obq_ergodic(prob, &o, &res);
    } else if (c.command == "cell") {
        st = obq_cell(prob, c.x1, c.r, c.p1, c.p2, &o, &res);
    } else if (c.command == "table") {
        st = obq_table(prob, &o, &res);
    } else {
        const std::vector<double> eps = c.eps.empty() ? std::vector<double>{0.125, 0.0625, 0.03125} : c.eps;
        st = obq_homogenize(prob, eps.data(), eps.size(), &o, &res);
    }
    obq_problem_free(prob);
    return emit(dir, res, st, c.command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ergodic boundary constants, effective boundary laws and homogenization studies"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto common = [&cfg](CLI::App* sub) {
        sub->add_option("--problem", cfg.problem, "Problem spec (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--grid", cfg.grid, "Solve grid N1xN2 (at least 16x16)")->capture_default_str();
        sub->add_option("--tol-d", cfg.tol_d, "Tolerance on d")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--tol-solver", cfg.tol_solver, "Howard nonlinear residual")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", cfg.out, "Output directory")->capture_default_str();
        sub->add_option("--k-min", cfg.k_min, "First discount exponent (lambda = 2^-k)")->capture_default_str();
        sub->add_option("--k-max", cfg.k_max, "Last discount exponent")->capture_default_str();
        sub->add_option("--max-doublings", cfg.max_doublings, "Truncation height doublings")->capture_default_str();
        sub->add_flag("--no-early-stop", cfg.no_early_stop, "Run every schedule step");
    };
    auto cell_opts = [&cfg](CLI::App* sub) {
        sub->add_option("--cell-n1", cfg.cell_n1, "Cell columns per period")->capture_default_str();
        sub->add_option("--cell-r0", cfg.cell_r0, "First cell truncation height")->capture_default_str();
        sub->add_option("--cell-max-doublings", cfg.cell_max_doublings, "Cell truncation height doublings")
            ->capture_default_str();
    };

    auto* erg = app.add_subcommand("ergodic", "Ergodic boundary constant d");
    common(erg);
    erg->add_option("--method", cfg.method, "auto, discount, truncation or viscosity")
        ->check(CLI::IsMember({"auto", "discount", "truncation", "viscosity"}))
        ->capture_default_str();
    erg->add_option("--x0", cfg.x0, "Pinning point x,y")->delimiter(',')->expected(2);

    auto* cell = app.add_subcommand("cell", "Cell problem constant d(x1, r, p)");
    common(cell);
    cell_opts(cell);
    cell->add_option("--x1", cfg.x1, "Boundary abscissa")->capture_default_str();
    cell->add_option("--r", cfg.r, "Value argument r")->capture_default_str();
    cell->add_option("--p1", cfg.p1, "Gradient component p1")->capture_default_str();
    cell->add_option("--p2", cfg.p2, "Gradient component p2")->capture_default_str();

    auto* table = app.add_subcommand("table", "Effective law table Lbar on a knot grid");
    common(table);
    cell_opts(table);
    table->add_option("--knots", cfg.knots, "Knot counts in x1,r,p1 (default 5,7,5)")->delimiter(',');
    table->add_option("--r-range", cfg.r_range, "r knot range lo,hi")->delimiter(',')->expected(2);
    table->add_option("--p1-range", cfg.p1_range, "p1 knot range lo,hi")->delimiter(',')->expected(2);

    auto* hom = app.add_subcommand("homogenize", "Convergence of u_eps to the homogenized solution");
    common(hom);
    cell_opts(hom);
    hom->add_option("--eps", cfg.eps, "Strictly decreasing epsilons (default 1/8,1/16,1/32)")->delimiter(',');
    hom->add_option("--knots", cfg.knots, "Knot counts in x1,r,p1 (default 5,7,5)")->delimiter(',');

    auto* val = app.add_subcommand("validate", "Check a problem spec against every assumption");
    common(val);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    for (auto* s : {erg, cell, table, hom, val})
        if (s->parsed()) cfg.command = s->get_name();
    return run(cfg);
}
