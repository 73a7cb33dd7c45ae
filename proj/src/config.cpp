#include "hypdrift/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace hypdrift {

using nlohmann::json;

namespace {

struct Field {
    const char* type;  // schema type
    const char* doc;
    std::function<void(ExperimentConfig&, const json&, const std::string&)> read;
    std::function<json(const ExperimentConfig&)> write;
};

double as_number(const json& v, const std::string& path) {
    if (!v.is_number())
        throw ConfigError(path, "expected a number, got " + std::string(v.type_name()));
    const double x = v.get<double>();
    if (!std::isfinite(x))
        throw ConfigError(path, "expected a finite number");
    return x;
}

std::uint64_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_unsigned())
        throw ConfigError(path, "expected a nonnegative integer, got " + v.dump());
    return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string())
        throw ConfigError(path, "expected a string, got " + std::string(v.type_name()));
    return v.get<std::string>();
}

template <class T>
Field number(const char* doc, T ExperimentConfig::*m) {
    return {"number", doc,
            [m](ExperimentConfig& c, const json& v, const std::string& p) {
                c.*m = static_cast<T>(as_number(v, p));
            },
            [m](const ExperimentConfig& c) { return json(c.*m); }};
}

template <class T>
Field count(const char* doc, T ExperimentConfig::*m) {
    return {"integer", doc,
            [m](ExperimentConfig& c, const json& v, const std::string& p) {
                c.*m = static_cast<T>(as_count(v, p));
            },
            [m](const ExperimentConfig& c) { return json(c.*m); }};
}

Field text(const char* doc, std::string ExperimentConfig::*m) {
    return {"string", doc,
            [m](ExperimentConfig& c, const json& v, const std::string& p) { c.*m = as_string(v, p); },
            [m](const ExperimentConfig& c) { return json(c.*m); }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t.emplace("name", text("label used in reports", &ExperimentConfig::name));
        t.emplace("action", text("free(k), free2, free3, schottky or modular",
                                 &ExperimentConfig::action));
        t.emplace("measure",
                  Field{"array", "[[word, weight], ...]; empty for uniform on the generators",
                        [](ExperimentConfig& c, const json& v, const std::string& p) {
                            if (!v.is_array())
                                throw ConfigError(p, "expected an array of [word, weight] pairs");
                            c.measure.clear();
                            for (std::size_t i = 0; i < v.size(); ++i) {
                                const std::string q = p + "[" + std::to_string(i) + "]";
                                const json& e = v[i];
                                if (!e.is_array() || e.size() != 2)
                                    throw ConfigError(q, "expected [word, weight]");
                                const std::string w = as_string(e[0], q + "[0]");
                                const double x = as_number(e[1], q + "[1]");
                                if (x <= 0.0)
                                    throw ConfigError(q + "[1]", "weight must be positive");
                                c.measure.emplace_back(w, x);
                            }
                        },
                        [](const ExperimentConfig& c) {
                            json a = json::array();
                            for (const auto& [w, x] : c.measure)
                                a.push_back(json::array({w, x}));
                            return a;
                        }});
        t.emplace("potential", text("zero, constant or plane-bump", &ExperimentConfig::potential));
        t.emplace("potential_c", number("constant value, or shift added to the bump",
                                        &ExperimentConfig::potential_c));
        t.emplace("potential_amplitude", number("bump amplitude", &ExperimentConfig::potential_amplitude));
        t.emplace("potential_tilt", number("bump tilt", &ExperimentConfig::potential_tilt));
        t.emplace("potential_step", number("quadrature step", &ExperimentConfig::potential_step));
        t.emplace("n", count("path length", &ExperimentConfig::n));
        t.emplace("batch", count("number of paths", &ExperimentConfig::batch));
        t.emplace("fake_drift_n", count("path length for the fake drift (0: n)",
                                        &ExperimentConfig::fake_drift_n));
        t.emplace("fake_drift_batch", count("paths for the fake drift (0: batch)",
                                            &ExperimentConfig::fake_drift_batch));
        t.emplace("ball_radius", number("orbit ball radius for the pressure", &ExperimentConfig::ball_radius));
        t.emplace("window_lo", number("pressure fit window start", &ExperimentConfig::window_lo));
        t.emplace("window_hi", number("pressure fit window end", &ExperimentConfig::window_hi));
        t.emplace("bucket_n", count("largest convolution power for bucket entropies (0: off)",
                                    &ExperimentConfig::bucket_n));
        t.emplace("bucket_eps", number("relative shell width for bucket entropies",
                                       &ExperimentConfig::bucket_eps));
        t.emplace("equality_sigmas", number("|gap| bound for equality-consistent",
                                            &ExperimentConfig::equality_sigmas));
        t.emplace("strict_sigmas", number("gap bound for strictly-less", &ExperimentConfig::strict_sigmas));
        t.emplace("deviation_radius", number("ball radius for the deviation report (0: off)",
                                             &ExperimentConfig::deviation_radius));
        t.emplace("phi_grid",
                  Field{"array", "path lengths for shadow ratios (empty: off)",
                        [](ExperimentConfig& c, const json& v, const std::string& p) {
                            if (!v.is_array())
                                throw ConfigError(p, "expected an array of positive integers");
                            c.phi_grid.clear();
                            for (std::size_t i = 0; i < v.size(); ++i) {
                                const auto k = as_count(v[i], p + "[" + std::to_string(i) + "]");
                                if (k == 0)
                                    throw ConfigError(p + "[" + std::to_string(i) + "]",
                                                      "must be positive");
                                c.phi_grid.push_back(k);
                            }
                        },
                        [](const ExperimentConfig& c) { return json(c.phi_grid); }});
        t.emplace("phi_batch", count("paths for shadow ratios", &ExperimentConfig::phi_batch));
        t.emplace("phi_pool", count("harmonic samples for shadow ratios", &ExperimentConfig::phi_pool));
        t.emplace("shadow_radius", number("shadow radius (negative: 0 tree, 2 plane)",
                                          &ExperimentConfig::shadow_radius));
        t.emplace("atoms_radius", number("ball radius for Gibbs atoms", &ExperimentConfig::atoms_radius));
        t.emplace("atoms_epsilon", number("s - v_F for Gibbs atoms", &ExperimentConfig::atoms_epsilon));
        t.emplace("atoms_max_tail", number("largest accepted relative tail bound",
                                           &ExperimentConfig::atoms_max_tail));
        t.emplace("seed", count("master seed", &ExperimentConfig::seed));
        t.emplace("out_dir", text("output directory", &ExperimentConfig::out_dir));
        return t;
    }();
    return table;
}

void validate(const ExperimentConfig& c) {
    try {
        (void)GroupAction::by_name(c.action);
    } catch (const std::exception& e) {
        throw ConfigError("$.action", e.what());
    }
    if (c.potential != "zero" && c.potential != "constant" && c.potential != "plane-bump")
        throw ConfigError("$.potential", "expected zero, constant or plane-bump, got '" +
                                             c.potential + "'");
    if (c.potential_step <= 0.0)
        throw ConfigError("$.potential_step", "must be positive");
    if (c.n < 100)
        throw ConfigError("$.n", "must be at least 100");
    if (c.batch < 2)
        throw ConfigError("$.batch", "must be at least 2");
    if (c.ball_radius <= 0.0)
        throw ConfigError("$.ball_radius", "must be positive");
    if (!(c.window_lo < c.window_hi))
        throw ConfigError("$.window_hi", "must exceed window_lo");
    if (c.window_hi > c.ball_radius)
        throw ConfigError("$.window_hi", "must not exceed ball_radius");
    if (c.equality_sigmas <= 0.0 || c.strict_sigmas < c.equality_sigmas)
        throw ConfigError("$.strict_sigmas", "need 0 < equality_sigmas <= strict_sigmas");
    if (c.deviation_radius < 0.0)
        throw ConfigError("$.deviation_radius", "must be nonnegative");
    if (!c.phi_grid.empty() && c.phi_batch < 2)
        throw ConfigError("$.phi_batch", "must be at least 2");
    if (c.atoms_epsilon <= 0.0)
        throw ConfigError("$.atoms_epsilon", "must be positive");
    if (c.out_dir.empty())
        throw ConfigError("$.out_dir", "must not be empty");
}

}  // namespace

json ExperimentConfig::to_json() const {
    json j = json::object();
    for (const auto& [k, f] : fields())
        j[k] = f.write(*this);
    return j;
}

std::string ExperimentConfig::canonical() const {
    json j = to_json();
    j.erase("out_dir");
    return j.dump();
}

std::string ExperimentConfig::fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object())
        throw ConfigError("$", "expected a JSON object");
    ExperimentConfig c;
    for (const auto& [k, v] : j.items()) {
        const auto it = fields().find(k);
        if (it == fields().end())
            throw ConfigError("$." + k, "unknown field");
        it->second.read(c, v, "$." + k);
    }
    validate(c);
    return c;
}

namespace {

// Tracks the member path while parsing so a syntax error can name the field.
class SyntaxPathTracker : public nlohmann::json_sax<json> {
public:
    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }
    bool start_object(std::size_t) override { return open(false); }
    bool end_object() override { return close(); }
    bool start_array(std::size_t) override { return open(true); }
    bool end_array() override { return close(); }
    bool key(string_t& k) override {
        if (!stack_.empty())
            stack_.back().key = k;
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
        return false;
    }

    std::string path() const {
        std::string out = "$";
        for (const auto& f : stack_) {
            if (f.array)
                out += "[" + std::to_string(f.index) + "]";
            else if (!f.key.empty())
                out += "." + f.key;
        }
        return out;
    }

private:
    struct Frame {
        bool array = false;
        std::size_t index = 0;
        std::string key;
    };
    bool value() {
        if (!stack_.empty() && stack_.back().array)
            ++stack_.back().index;
        return true;
    }
    bool open(bool array) {
        stack_.push_back({array, 0, {}});
        return true;
    }
    bool close() {
        stack_.pop_back();
        return value();
    }
    std::vector<Frame> stack_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n')
                ++line, col = 1;
            else
                ++col;
        }
        SyntaxPathTracker tracker;
        json::sax_parse(text, &tracker);
        throw ConfigError(tracker.path(), "malformed JSON at line " + std::to_string(line) +
                                              ", column " + std::to_string(col));
    }
    return config_from_json(j);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

json config_schema() {
    json props = json::object();
    for (const auto& [k, f] : fields())
        props[k] = {{"type", f.type}, {"description", f.doc}};
    return {{"$schema", "https://json-schema.org/draft/2020-12/schema"},
            {"title", "hypdrift experiment"},
            {"type", "object"},
            {"additionalProperties", false},
            {"properties", props}};
}

std::shared_ptr<const GroupAction> make_action(const ExperimentConfig& c) {
    return std::make_shared<const GroupAction>(GroupAction::by_name(c.action));
}

WalkMeasure make_config_measure(std::shared_ptr<const GroupAction> action,
                                const ExperimentConfig& c) {
    if (c.measure.empty())
        return uniform_measure(*action);
    return make_measure(std::move(action), c.measure);
}

Potential make_config_potential(const GroupAction& action, const ExperimentConfig& c) {
    if (c.potential == "zero")
        return Potential::zero();
    if (c.potential == "constant")
        return Potential::constant(c.potential_c);
    Potential F = Potential::plane_bump(action, c.potential_amplitude, c.potential_tilt,
                                        c.potential_step);
    return c.potential_c != 0.0 ? F.plus(c.potential_c) : F;
}

InequalityParams make_inequality_params(const ExperimentConfig& c) {
    InequalityParams p;
    p.n = c.n;
    p.batch = c.batch;
    p.seed = c.seed;
    p.ball_radius = c.ball_radius;
    p.window_lo = c.window_lo;
    p.window_hi = c.window_hi;
    p.equality_sigmas = c.equality_sigmas;
    p.strict_sigmas = c.strict_sigmas;
    p.bucket_n = c.bucket_n;
    p.bucket_eps = c.bucket_eps;
    p.fake_drift_n = c.fake_drift_n;
    p.fake_drift_batch = c.fake_drift_batch;
    return p;
}

}  // namespace hypdrift
