#include "hypdrift/lab.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace hypdrift {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& p, const std::string& body, std::vector<std::string>& files) {
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << body;
    files.push_back(p.string());
}

std::string xy_csv(const std::vector<std::array<double, 3>>& rows) {
    std::string out = "x,y,stderr\n";
    for (const auto& r : rows)
        out += fmt(r[0]) + ',' + fmt(r[1]) + ',' + fmt(r[2]) + '\n';
    return out;
}

struct Builtin {
    const char* doc;
    ExperimentConfig config;
    const char* expected;  // suite expectation
};

const std::map<std::string, Builtin>& builtins() {
    static const std::map<std::string, Builtin> table = [] {
        std::map<std::string, Builtin> t;
        {
            ExperimentConfig c;
            c.name = "f2-uniform-equality";
            c.action = "free(2)";
            c.n = 10'000;
            c.batch = 1000;
            c.ball_radius = 12;
            c.window_lo = 6;
            c.window_hi = 12;
            c.deviation_radius = 6;
            c.phi_grid = {20, 40, 80};
            c.out_dir = "out/f2-uniform-equality";
            t.emplace(c.name, Builtin{"uniform nearest-neighbour walk on F_2 with F = 0", c,
                                      "equality-consistent"});
        }
        {
            ExperimentConfig c;
            c.name = "f3-uniform-equality";
            c.action = "free(3)";
            c.n = 5000;
            c.batch = 500;
            c.ball_radius = 8;
            c.window_lo = 4;
            c.window_hi = 8;
            c.bucket_n = 6;
            c.deviation_radius = 4;
            c.out_dir = "out/f3-uniform-equality";
            t.emplace(c.name, Builtin{"uniform nearest-neighbour walk on F_3 with F = 0", c,
                                      "equality-consistent"});
        }
        {
            ExperimentConfig c;
            c.name = "modular-strict";
            c.action = "modular";
            c.measure = {{"s", 2.0}, {"t", 1.0}, {"T", 1.0}};
            c.n = 5000;
            c.batch = 500;
            c.ball_radius = 12;
            c.window_lo = 6;
            c.window_hi = 12;
            c.deviation_radius = 6;
            c.phi_grid = {20, 40, 80};
            c.out_dir = "out/modular-strict";
            t.emplace(c.name,
                      Builtin{"PSL(2,Z), uniform on {S, S^-1, T, T^-1} (S = S^-1), F = 0", c,
                              "strictly-less"});
        }
        {
            ExperimentConfig c = t.at("modular-strict").config;
            c.name = "modular-shifted";
            c.potential = "constant";
            c.potential_c = 1.0;
            c.deviation_radius = 0;
            c.phi_grid.clear();
            c.out_dir = "out/modular-shifted";
            t.emplace(c.name, Builtin{"modular-strict with the constant potential F = 1", c,
                                      "strictly-less"});
        }
        {
            ExperimentConfig c;
            c.name = "schottky-constant";
            c.action = "schottky";
            c.potential = "constant";
            c.potential_c = 0.5;
            c.n = 5000;
            c.batch = 500;
            c.ball_radius = 12;
            c.window_lo = 6;
            c.window_hi = 12;
            c.out_dir = "out/schottky-constant";
            t.emplace(c.name, Builtin{"Schottky group, uniform walk, F = 1/2", c, "guivarch"});
        }
        {
            ExperimentConfig c;
            c.name = "modular-bump";
            c.action = "modular";
            c.measure = {{"s", 2.0}, {"t", 1.0}, {"T", 1.0}};
            c.potential = "plane-bump";
            c.potential_amplitude = 1.0;
            c.potential_tilt = 0.3;
            c.potential_step = 0.02;
            c.n = 5000;
            c.batch = 500;
            c.fake_drift_n = 300;
            c.fake_drift_batch = 200;
            c.ball_radius = 10;
            c.window_lo = 5;
            c.window_hi = 10;
            c.out_dir = "out/modular-bump";
            t.emplace(c.name,
                      Builtin{"PSL(2,Z) with a tilted bump potential around the orbit of i", c,
                              "guivarch"});
        }
        return t;
    }();
    return table;
}

double default_shadow_radius(const GroupAction& a, const ExperimentConfig& c) {
    if (c.shadow_radius >= 0.0)
        return c.shadow_radius;
    return a.model() == Model::tree ? 0.0 : 2.0;
}

}  // namespace

json module_versions() {
    return {{"geometry", kLabVersion}, {"groups", kLabVersion}, {"walk", kLabVersion},
            {"gibbs", kLabVersion},    {"diagnostics", kLabVersion}, {"lab", kLabVersion},
            {"report_schema", kReportSchemaVersion}};
}

std::vector<std::string> builtin_config_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : builtins())
        out.push_back(k);
    return out;
}

ExperimentConfig builtin_config(std::string_view name) {
    const auto it = builtins().find(std::string(name));
    if (it == builtins().end())
        throw std::invalid_argument("unknown builtin config '" + std::string(name) + "'");
    return it->second.config;
}

RunOutput run_experiment(const ExperimentConfig& config, const std::optional<std::string>& out_dir) {
    RunOutput out;
    const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(config.out_dir);
    const std::string fingerprint = config.fingerprint();
    json report{{"schema_version", kReportSchemaVersion},
                {"generated_at", utc_now()},
                {"fingerprint", fingerprint},
                {"module_versions", module_versions()},
                {"config", json::parse(config.canonical())}};
    try {
        fs::create_directories(dir);
        const auto action = make_action(config);
        const WalkMeasure mu = make_config_measure(action, config);
        const Potential F = make_config_potential(*action, config);

        InequalityReport rep = inequality_report(mu, F, make_inequality_params(config));
        rep.fingerprint = fingerprint;
        report["inequality"] = rep.to_json();
        write_file(dir / "drift.csv",
                   xy_csv({{static_cast<double>(config.n / 2), rep.ell_half.value, rep.ell_half.stderr_},
                           {static_cast<double>(config.n), rep.ell.value, rep.ell.stderr_}}),
                   out.files);
        out.exit_code = rep.verdict == Verdict::inconclusive ? 2 : 0;
        if (!rep.guivarch_holds && rep.failing_component.empty())
            report["guivarch_violation"] = true;

        if (config.deviation_radius > 0.0 && rep.failing_component.empty()) {
            const OrbitBall ball = orbit_ball(*action, config.deviation_radius);
            const DeviationReport dev = metric_deviation_report(mu, F, rep.v_F.value, ball);
            report["deviation"] = dev.to_json();
            write_file(dir / "deviation.csv", dev.to_csv(), out.files);
            std::vector<std::array<double, 3>> growth;
            for (const auto& r : dev.rows)
                growth.push_back({r.displacement, std::abs(r.deviation), r.green_stderr});
            write_file(dir / "deviation_growth.csv", xy_csv(growth), out.files);
        }

        if (!config.phi_grid.empty() && rep.failing_component.empty()) {
            const OrbitBall ball = orbit_ball(*action, config.atoms_radius);
            const double v = rep.v_F.value;
            const GibbsAtoms atoms = patterson_atoms(ball, action, F, v + config.atoms_epsilon, v,
                                                     config.atoms_max_tail);
            ConformalShadows::Params sp;
            sp.radius = default_shadow_radius(*action, config);
            sp.pool = config.phi_pool;
            sp.seed = derive_seed(config.seed, "shadows");
            const ConformalShadows shadows(mu, F, atoms, v, sp);
            const ShadowRatioTable tab = shadow_ratio_stats(shadows, mu, config.phi_grid,
                                                            config.phi_batch,
                                                            derive_seed(config.seed, "phi"));
            report["shadow_ratios"] = tab.to_json();
            report["shadow_ratios"]["atoms_tail_bound"] = atoms.tail_bound;
            if (!tab.rows.empty()) {
                const Estimate& c = tab.rows.back().cesaro_psi_over_n;
                const double sigma = std::hypot(c.stderr_, rep.sigma);
                report["shadow_ratios"]["cesaro_check"] = {
                    {"n", tab.rows.back().n},
                    {"cesaro_psi_over_n", c.value},
                    {"h_minus_l_v", -rep.gap},
                    {"sigma", sigma},
                    {"within_3_sigma", std::abs(c.value + rep.gap) <= 3.0 * sigma}};
            }
            write_file(dir / "shadow_ratios.csv", tab.to_csv(), out.files);
        }
        write_file(dir / "report.json", report.dump(2) + "\n", out.files);
    } catch (const std::exception& e) {
        out.exit_code = 1;
        out.error = e.what();
        report["error"] = e.what();
        try {
            write_file(dir / "report.json", report.dump(2) + "\n", out.files);
        } catch (const std::exception&) {
        }
    }
    out.report = std::move(report);
    return out;
}

std::string list_text(std::string_view kind) {
    std::ostringstream os;
    if (kind == "actions") {
        os << "free(k)    free group of rank k on its Cayley tree (free2, free3 accepted)\n"
           << "schottky   two-generator Schottky group on the upper half-plane\n"
           << "modular    PSL(2,Z) on the upper half-plane\n";
    } else if (kind == "measures") {
        os << "uniform    equal weights on the generators and their inverses (empty measure)\n"
           << "weighted   [[word, weight], ...] over generator words, e.g. "
              "[[\"a\",0.4],[\"A\",0.2],[\"b\",0.2],[\"B\",0.2]]\n";
    } else if (kind == "potentials") {
        os << "zero        F = 0\n"
           << "constant    F = potential_c\n"
           << "plane-bump  Gamma-invariant bump around the orbit of i with amplitude, tilt and "
              "quadrature step (plane actions)\n";
    } else if (kind == "configs") {
        for (const auto& [k, b] : builtins())
            os << k << std::string(k.size() < 22 ? 22 - k.size() : 1, ' ') << b.doc << '\n';
    } else {
        throw std::invalid_argument("unknown kind '" + std::string(kind) +
                                    "' (expected actions, measures, potentials or configs)");
    }
    return os.str();
}

std::string describe_text(std::string_view name) {
    std::ostringstream os;
    if (const auto it = builtins().find(std::string(name)); it != builtins().end()) {
        os << it->first << ": " << it->second.doc << "\n"
           << "expected: " << it->second.expected << "\n"
           << it->second.config.to_json().dump(2) << "\n";
        return os.str();
    }
    if (name == "zero" || name == "constant" || name == "plane-bump") {
        std::string all = list_text("potentials");
        std::istringstream in(all);
        for (std::string line; std::getline(in, line);)
            if (line.rfind(std::string(name) + " ", 0) == 0)
                os << line << '\n';
        return os.str();
    }
    GroupAction a = [&] {
        try {
            return GroupAction::by_name(name);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("unknown name '" + std::string(name) +
                                        "' (not an action, potential or builtin config)");
        }
    }();
    os << a.name() << " (" << (a.model() == Model::tree ? "tree" : "upper half-plane")
       << ", basepoint " << (a.model() == Model::tree ? "e" : "i") << ")\n";
    if (a.kind() == ActionKind::modular) {
        os << "generators S, T\n"
           << "  S = [[0, -1], [1, 0]]    z -> -1/z\n"
           << "  T = [[1, 1], [0, 1]]     z -> z + 1\n"
           << "elements in normal form over s = S, r = ST, R = (ST)^2\n";
        return os.str();
    }
    os << "generators";
    for (const auto& g : a.generators())
        os << ' ' << g.symbol << " (inverse " << g.inverse_symbol << ")";
    os << '\n';
    if (a.model() == Model::plane) {
        for (const auto& g : a.generators()) {
            const Mat2& m = g.isometry.matrix();
            os << "  " << g.symbol << " = [[" << m.a << ", " << m.b << "], [" << m.c << ", "
               << m.d << "]]\n";
        }
    }
    return os.str();
}

std::vector<std::string> suite_config_names() {
    return {"f2-uniform-equality", "f3-uniform-equality", "modular-strict",
            "modular-shifted",     "schottky-constant",   "modular-bump"};
}

std::vector<SuiteRow> run_suite(const std::string& out_dir, std::optional<std::uint64_t> seed) {
    std::vector<SuiteRow> rows;
    for (const auto& name : suite_config_names()) {
        ExperimentConfig c = builtin_config(name);
        if (seed)
            c.seed = *seed;
        const RunOutput r = run_experiment(c, (fs::path(out_dir) / name).string());
        SuiteRow row;
        row.config = name;
        row.expected = builtins().at(name).expected;
        row.exit_code = r.exit_code;
        row.fingerprint = c.fingerprint();
        if (r.exit_code == 1) {
            row.observed = "error: " + r.error;
        } else {
            const json& q = r.report.at("inequality");
            row.observed = q.at("verdict").get<std::string>();
            row.guivarch_holds = q.at("guivarch_holds").get<bool>();
        }
        row.pass = r.exit_code != 1 && row.guivarch_holds &&
                   (row.expected == "guivarch" || row.expected == row.observed);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string suite_table(const std::vector<SuiteRow>& rows) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-22s %-20s %-20s %-9s %s\n", "config", "expected", "observed",
                  "guivarch", "result");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-22s %-20s %-20s %-9s %s\n", r.config.c_str(),
                      r.expected.c_str(), r.observed.c_str(), r.guivarch_holds ? "yes" : "no",
                      r.pass ? "PASS" : "FAIL");
        os << buf;
    }
    return os.str();
}

}  // namespace hypdrift
