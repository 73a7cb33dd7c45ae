#include "hypdrift/walk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace hypdrift {

namespace {

// Products of at most `depth` atoms reach every generator and its inverse.
bool generates_as_semigroup(const GroupAction& action, const std::vector<Atom>& support,
                            int depth) {
    std::unordered_set<std::string> targets;
    for (const auto& gen : action.generators())
        targets.insert(action.element(std::string(1, gen.symbol)));
    std::unordered_set<std::string> seen;
    std::vector<std::string> layer{""};
    for (int d = 1; d <= depth && !layer.empty(); ++d) {
        std::vector<std::string> next;
        for (const auto& w : layer) {
            for (const auto& a : support) {
                std::string x = action.multiply(w, a.element);
                if (seen.insert(x).second) {
                    targets.erase(x);
                    next.push_back(std::move(x));
                }
            }
            if (targets.empty())
                return true;
            if (seen.size() > 2'000'000)
                break;
        }
        layer = std::move(next);
    }
    return targets.empty();
}

}  // namespace

// ------------------------------------------------------------- measures

void WalkMeasure::finalize() {
    const GroupAction& a = *action_;
    cumulative_.clear();
    double acc = 0.0;
    for (const auto& atom : support_) {
        acc += atom.probability;
        cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;
    matrices_.clear();
    if (a.model() == Model::plane)
        for (const auto& atom : support_)
            matrices_.push_back(a.matrix(atom.element));

    std::unordered_set<std::string> gens;
    for (const auto& gen : a.generators())
        gens.insert(a.element(std::string(1, gen.symbol)));
    nearest_neighbour_ = std::all_of(support_.begin(), support_.end(),
                                     [&](const Atom& x) { return gens.count(x.element) > 0; });
    symmetric_ = std::all_of(support_.begin(), support_.end(), [&](const Atom& x) {
        return std::abs(probability(a.inverse(x.element)) - x.probability) <= 1e-12;
    });
    moments_ = {};
    for (const auto& atom : support_) {
        const double n = a.word_norm(atom.element);
        moments_.c2 += std::pow(2.0, n) * atom.probability;
        moments_.c4 += std::pow(4.0, n) * atom.probability;
        moments_.c8 += std::pow(8.0, n) * atom.probability;
    }
}

std::size_t WalkMeasure::draw(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), support_.size() - 1);
}

double WalkMeasure::probability(std::string_view g) const {
    for (const auto& atom : support_)
        if (atom.element == g)
            return atom.probability;
    return 0.0;
}

WalkMeasure make_measure(std::shared_ptr<const GroupAction> action,
                         const std::vector<std::pair<std::string, double>>& spec) {
    if (!action)
        throw std::invalid_argument("make_measure: no action");
    WalkMeasure mu;
    mu.action_ = std::move(action);
    double total = 0.0;
    for (const auto& [w, weight] : spec) {
        if (!(weight > 0.0) || !std::isfinite(weight))
            throw std::invalid_argument("make_measure: weight of '" + w + "' must be positive");
        const std::string g = mu.action_->element(w);
        auto it = std::find_if(mu.support_.begin(), mu.support_.end(),
                               [&](const Atom& a) { return a.element == g; });
        if (it == mu.support_.end())
            mu.support_.push_back({g, weight});
        else
            it->probability += weight;
        total += weight;
    }
    if (mu.support_.size() < 2)
        throw std::invalid_argument("make_measure: degenerate support (fewer than two elements)");
    for (auto& a : mu.support_)
        a.probability /= total;
    if (!generates_as_semigroup(*mu.action_, mu.support_, 6))
        throw std::invalid_argument(
            "make_measure: support does not generate the group as a semigroup "
            "(some generator or inverse is not a product of at most 6 atoms)");
    mu.finalize();
    return mu;
}

WalkMeasure make_measure(const GroupAction& action,
                         const std::vector<std::pair<std::string, double>>& spec) {
    return make_measure(std::make_shared<const GroupAction>(action), spec);
}

WalkMeasure uniform_measure(const GroupAction& action) {
    std::vector<std::pair<std::string, double>> spec;
    for (const auto& gen : action.generators())
        spec.emplace_back(std::string(1, gen.symbol), 1.0);
    if (action.kind() == ActionKind::modular) {
        // Uniform on {S, S^-1, T, T^-1}; S is an involution.
        spec = {{"s", 1.0}, {"S", 1.0}, {"t", 1.0}, {"T", 1.0}};
    }
    return make_measure(action, spec);
}

WalkMeasure reflect(const WalkMeasure& mu) {
    WalkMeasure out;
    out.action_ = mu.action_;
    for (const auto& a : mu.support_)
        out.support_.push_back({mu.action_->inverse(a.element), a.probability});
    out.finalize();
    return out;
}

// ------------------------------------------------------------- paths

void PathTracker::step(std::size_t atom) {
    const GroupAction& a = mu_->action();
    a.append(word_, mu_->support()[atom].element);
    if (track_matrix_ && a.model() == Model::plane)
        m_.right_multiply(mu_->matrix(atom));
    ++steps_;
}

double PathTracker::displacement() const {
    if (mu_->action().model() == Model::tree)
        return static_cast<double>(word_.size());
    if (!track_matrix_)
        throw std::logic_error("PathTracker: matrix tracking disabled");
    return m_.displacement_from_i();
}

std::string SamplePath::position(const WalkMeasure& mu, std::size_t k) const {
    if (k > increments.size())
        throw std::out_of_range("SamplePath::position: k exceeds the path length");
    std::string w;
    for (std::size_t i = 0; i < k; ++i)
        mu.action().append(w, mu.support()[increments[i]].element);
    return w;
}

std::uint64_t path_seed(std::uint64_t seed, std::size_t i) { return derive_seed(seed, i); }

SamplePath sample_path(const WalkMeasure& mu, std::size_t n, std::uint64_t seed, std::size_t i) {
    SamplePath p;
    p.seed = path_seed(seed, i);
    Rng rng(p.seed);
    p.increments.resize(n);
    for (auto& x : p.increments)
        x = static_cast<std::uint32_t>(mu.draw(rng.uniform()));
    return p;
}

std::vector<SamplePath> sample_paths(const WalkMeasure& mu, std::size_t n, std::size_t batch,
                                     std::uint64_t seed) {
    if (n == 0 || batch == 0)
        throw std::invalid_argument("sample_paths: n and batch must be >= 1");
    std::vector<SamplePath> out(batch);
    parallel_for(batch, [&](std::size_t i) { out[i] = sample_path(mu, n, seed, i); });
    return out;
}

std::string paths_to_jsonl(const WalkMeasure& mu, const std::vector<SamplePath>& paths) {
    std::string out;
    for (const auto& p : paths) {
        nlohmann::json j;
        j["seed"] = p.seed;
        auto& inc = j["increments"] = nlohmann::json::array();
        for (auto i : p.increments)
            inc.push_back(mu.support()[i].element);
        out += j.dump();
        out += '\n';
    }
    return out;
}

// ------------------------------------------------------------- convolution

std::vector<Atom> convolution_power(const WalkMeasure& mu, std::size_t n, std::size_t cap) {
    const GroupAction& a = mu.action();
    std::unordered_map<std::string, double> cur{{"", 1.0}};
    for (std::size_t step = 0; step < n; ++step) {
        std::unordered_map<std::string, double> next;
        next.reserve(cur.size() * mu.support().size());
        for (const auto& [w, p] : cur) {
            for (const auto& atom : mu.support())
                next[a.multiply(w, atom.element)] += p * atom.probability;
            if (next.size() > cap)
                throw CapExceeded("convolution_power: support exceeds cap " + std::to_string(cap));
        }
        cur = std::move(next);
    }
    std::vector<Atom> out;
    out.reserve(cur.size());
    for (auto& [w, p] : cur)
        out.push_back({w, p});
    std::sort(out.begin(), out.end(),
              [](const Atom& x, const Atom& y) { return x.element < y.element; });
    return out;
}

double shannon_entropy(const std::vector<Atom>& dist) {
    double h = 0.0;
    for (const auto& a : dist)
        if (a.probability > 0.0)
            h -= a.probability * std::log(a.probability);
    return h;
}

}  // namespace hypdrift
