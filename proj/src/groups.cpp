#include "hypdrift/groups.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "hypdrift/word.hpp"

namespace hypdrift {

namespace {

constexpr Mat2 kS{0, -1, 1, 0};
constexpr Mat2 kR{0, -1, 1, 1};    // S T
constexpr Mat2 kR2{-1, -1, 1, 0};  // (S T)^2
constexpr Mat2 kT{1, 1, 0, 1};
constexpr Mat2 kTinv{1, -1, 0, 1};

constexpr Mat2 kSchottkyA{3.0, 0.0, 0.0, 1.0 / 3.0};
constexpr Mat2 kSchottkyAinv{1.0 / 3.0, 0.0, 0.0, 3.0};
constexpr Mat2 kSchottkyB{5.0 / 3.0, -4.0 / 3.0, -4.0 / 3.0, 5.0 / 3.0};
constexpr Mat2 kSchottkyBinv{5.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 5.0 / 3.0};

int rotation(char c) { return c == 'r' ? 1 : (c == 'R' ? 2 : 0); }
char rotation_letter(int k) { return k == 1 ? 'r' : 'R'; }

// Isometric circle |cz + d| = 1 of a Mobius map, as a real interval.
std::pair<double, double> isometric_disk(const Mat2& m) {
    const double centre = -m.d / m.c;
    const double radius = 1.0 / std::abs(m.c);
    return {centre - radius, centre + radius};
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

// ------------------------------------------------------------- actions

GroupAction GroupAction::free_group(int rank) {
    if (rank < 2 || rank > 26)
        throw std::invalid_argument("free group rank must lie in [2, 26]");
    GroupAction g;
    g.name_ = "free(" + std::to_string(rank) + ")";
    g.kind_ = ActionKind::free_group;
    g.model_ = Model::tree;
    g.rank_ = rank;
    g.basepoint_ = ModelPoint::tree("");
    for (int i = 0; i < rank; ++i) {
        const char c = static_cast<char>('a' + i);
        const char C = word::inverse_letter(c);
        g.generators_.push_back({c, C, Isometry::tree(std::string(1, c))});
        g.generators_.push_back({C, c, Isometry::tree(std::string(1, C))});
    }
    return g;
}

GroupAction GroupAction::schottky() {
    GroupAction g;
    g.name_ = "schottky";
    g.kind_ = ActionKind::schottky;
    g.model_ = Model::plane;
    g.rank_ = 2;
    g.basepoint_ = ModelPoint::plane(0.0, 1.0);
    // a, A have isometric circles centred at 0 and infinity; check that the
    // disks of b and B are disjoint from each other and from those of a, A.
    const auto b = isometric_disk(kSchottkyB);
    const auto B = isometric_disk(kSchottkyBinv);
    const double inner = 1.0 / 3.0, outer = 3.0;
    for (const auto& d : {b, B}) {
        const bool clear = (d.first > inner && d.second < outer) ||
                           (d.second < -inner && d.first > -outer);
        if (!clear)
            throw std::logic_error("schottky: isometric disks overlap");
    }
    if (!(b.second < B.first || B.second < b.first))
        throw std::logic_error("schottky: isometric disks overlap");
    g.generators_ = {{'a', 'A', Isometry::mobius(kSchottkyA)},
                     {'A', 'a', Isometry::mobius(kSchottkyAinv)},
                     {'b', 'B', Isometry::mobius(kSchottkyB)},
                     {'B', 'b', Isometry::mobius(kSchottkyBinv)}};
    return g;
}

GroupAction GroupAction::modular() {
    GroupAction g;
    g.name_ = "modular";
    g.kind_ = ActionKind::modular;
    g.model_ = Model::plane;
    g.rank_ = 2;
    g.basepoint_ = ModelPoint::plane(0.0, 1.0);
    g.generators_ = {{'s', 's', Isometry::mobius(kS)},
                     {'t', 'T', Isometry::mobius(kT)},
                     {'T', 't', Isometry::mobius(kTinv)}};
    return g;
}

GroupAction GroupAction::by_name(std::string_view name) {
    if (name == "schottky")
        return schottky();
    if (name == "modular")
        return modular();
    if (name.starts_with("free")) {
        std::string_view rest = name.substr(4);
        if (rest.size() >= 2 && rest.front() == '(' && rest.back() == ')')
            rest = rest.substr(1, rest.size() - 2);
        if (!rest.empty() && std::all_of(rest.begin(), rest.end(),
                                         [](char c) { return c >= '0' && c <= '9'; }))
            return free_group(std::stoi(std::string(rest)));
    }
    throw std::invalid_argument("unknown action '" + std::string(name) +
                                "' (expected free(k), schottky or modular)");
}

double GroupAction::default_margin() const {
    return kind_ == ActionKind::free_group ? 0.0 : 0.5;
}

// ------------------------------------------------------------- elements

void GroupAction::append_letter(std::string& g, char c) const {
    if (kind_ != ActionKind::modular) {
        word::push_reduced(g, c);
        return;
    }
    if (c == 's') {
        if (!g.empty() && g.back() == 's')
            g.pop_back();
        else
            g.push_back('s');
        return;
    }
    int k = rotation(c);
    if (!g.empty() && g.back() != 's') {
        k = (k + rotation(g.back())) % 3;
        g.pop_back();
        if (k != 0)
            g.push_back(rotation_letter(k));
    } else {
        g.push_back(c);
    }
}

std::string GroupAction::element(std::string_view generator_word) const {
    std::string out;
    std::string_view w = generator_word;
    std::string parsed;
    if (w.find("\xe2\x81\xbb") != std::string_view::npos) {
        parsed = word::parse_pretty(w);
        w = parsed;
    }
    for (char c : w) {
        if (kind_ == ActionKind::modular) {
            switch (c) {
                case 's':
                case 'S': append_letter(out, 's'); break;
                case 't': append_letter(out, 's'); append_letter(out, 'r'); break;
                case 'T': append_letter(out, 'R'); append_letter(out, 's'); break;
                case 'r':
                case 'R': append_letter(out, c); break;
                default:
                    throw std::invalid_argument(std::string("modular group: unknown letter '") +
                                                c + "' (use s, t, T)");
            }
        } else {
            const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (!word::is_letter(c) || lower - 'a' >= rank_)
                throw std::invalid_argument(name_ + ": unknown letter '" + std::string(1, c) + "'");
            append_letter(out, c);
        }
    }
    return out;
}

void GroupAction::append(std::string& g, std::string_view h) const {
    for (char c : h)
        append_letter(g, c);
}

std::string GroupAction::multiply(std::string_view g, std::string_view h) const {
    std::string out(g);
    append(out, h);
    return out;
}

std::string GroupAction::inverse(std::string_view g) const {
    if (kind_ != ActionKind::modular)
        return word::inverse(g);
    std::string out(g.rbegin(), g.rend());
    for (char& c : out)
        if (c != 's')
            c = c == 'r' ? 'R' : 'r';
    return out;
}

Mat2 GroupAction::letter_matrix(char c) const {
    switch (kind_) {
        case ActionKind::modular:
            return c == 's' ? kS : (c == 'r' ? kR : kR2);
        case ActionKind::schottky:
            switch (c) {
                case 'a': return kSchottkyA;
                case 'A': return kSchottkyAinv;
                case 'b': return kSchottkyB;
                case 'B': return kSchottkyBinv;
                default: break;
            }
            break;
        case ActionKind::free_group: break;
    }
    throw std::invalid_argument(name_ + ": no matrix for letter '" + std::string(1, c) + "'");
}

Mat2 GroupAction::matrix(std::string_view g) const {
    if (model_ != Model::plane)
        throw ModelMismatch();
    Mat2 m{};
    for (char c : g)
        m = m * letter_matrix(c);
    return m;
}

Isometry GroupAction::isometry(std::string_view g) const {
    if (model_ == Model::tree)
        return Isometry::tree(g);
    return Isometry::mobius(matrix(g));
}

ModelPoint GroupAction::orbit_point(std::string_view g) const {
    if (model_ == Model::tree)
        return ModelPoint::tree(g);
    return apply(isometry(g), basepoint_);
}

double GroupAction::displacement(std::string_view g) const {
    if (model_ == Model::tree)
        return static_cast<double>(g.size());
    return displacement_from_i(matrix(g));
}

int GroupAction::word_norm(std::string_view g) const {
    if (kind_ != ActionKind::modular)
        return static_cast<int>(g.size());
    // g = R^{a_0} S R^{a_1} S ... S R^{a_m}. Every generator crosses one S-edge
    // of the tree of triangles, so a geodesic crosses the m edges on the way
    // in order. Within a triangle, positions are counted relative to the
    // vertex where the next edge leaves; a nonzero rotation costs 2 (R = S T,
    // R^2 = T^-1 S). Crossing options: S from 0 lands at 0, T from 0 lands at
    // 1, T^-1 from 1 lands at 0.
    std::vector<int> a{0};
    std::size_t i = 0;
    if (!g.empty() && g[0] != 's') {
        a[0] = rotation(g[0]);
        i = 1;
    }
    while (i < g.size()) {
        ++i;  // 's'
        if (i < g.size() && g[i] != 's') {
            a.push_back(rotation(g[i]));
            ++i;
        } else {
            a.push_back(0);
        }
    }
    const std::size_t m = a.size() - 1;
    const auto rot = [](int from, int to) { return from == to ? 0 : 2; };
    if (m == 0)
        return rot(0, a[0]);
    constexpr int kInfCost = std::numeric_limits<int>::max() / 4;
    struct Crossing {
        int from, land;
    };
    constexpr std::array<Crossing, 3> crossings{{{0, 0}, {0, 1}, {1, 0}}};
    std::array<int, 3> cost{kInfCost, kInfCost, kInfCost};
    cost[(3 - a[0]) % 3] = 0;
    for (std::size_t k = 1; k <= m; ++k) {
        std::array<int, 3> landed{kInfCost, kInfCost, kInfCost};
        for (int p = 0; p < 3; ++p) {
            if (cost[p] >= kInfCost)
                continue;
            for (const auto& cr : crossings)
                landed[cr.land] = std::min(landed[cr.land], cost[p] + rot(p, cr.from) + 1);
        }
        if (k == m) {
            int best = kInfCost;
            for (int j = 0; j < 3; ++j)
                if (landed[j] < kInfCost)
                    best = std::min(best, landed[j] + rot(j, a[m]));
            return best;
        }
        std::array<int, 3> next{kInfCost, kInfCost, kInfCost};
        for (int j = 0; j < 3; ++j)
            if (landed[j] < kInfCost)
                next[((j - a[k]) % 3 + 3) % 3] = std::min(next[((j - a[k]) % 3 + 3) % 3], landed[j]);
        cost = next;
    }
    return kInfCost;
}

std::optional<int> GroupAction::word_norm_bfs(std::string_view g, std::size_t cap) const {
    const std::string target(g);
    if (target.empty())
        return 0;
    std::unordered_set<std::string> seen{""};
    std::vector<std::string> layer{""};
    std::vector<std::string> gens;
    for (const auto& gen : generators_)
        gens.push_back(element(std::string(1, gen.symbol)));
    for (int depth = 1; !layer.empty(); ++depth) {
        std::vector<std::string> next;
        for (const auto& w : layer) {
            for (const auto& s : gens) {
                std::string x = multiply(w, s);
                if (x == target)
                    return depth;
                if (seen.insert(x).second) {
                    if (seen.size() >= cap)
                        return std::nullopt;
                    next.push_back(std::move(x));
                }
            }
        }
        layer = std::move(next);
    }
    return std::nullopt;
}

// ------------------------------------------------------------- orbit balls

OrbitBall::OrbitBall(std::vector<OrbitEntry> entries, std::vector<Mat2> matrices,
                     OrbitCertificate cert)
    : entries_(std::move(entries)), matrices_(std::move(matrices)), cert_(std::move(cert)) {}

std::size_t OrbitBall::count_within(double r) const {
    const auto it = std::upper_bound(entries_.begin(), entries_.end(), r + 1e-9,
                                     [](double v, const OrbitEntry& e) { return v < e.displacement; });
    return static_cast<std::size_t>(it - entries_.begin());
}

std::vector<std::size_t> OrbitBall::shell(int n) const {
    std::vector<std::size_t> out;
    const auto lo = std::lower_bound(
        entries_.begin(), entries_.end(), static_cast<double>(n - 1) - 1e-9,
        [](const OrbitEntry& e, double v) { return e.displacement < v; });
    for (auto it = lo; it != entries_.end() && it->displacement <= n + 1e-9; ++it)
        out.push_back(static_cast<std::size_t>(it - entries_.begin()));
    return out;
}

std::string OrbitBall::to_csv() const {
    std::string out = "word,displacement\n";
    for (const auto& e : entries_) {
        out += e.element;
        out += ',';
        out += fmt(e.displacement);
        out += '\n';
    }
    return out;
}

OrbitBall orbit_ball(const GroupAction& action, double radius, std::size_t cap,
                     std::optional<double> margin) {
    if (!(radius >= 0.0))
        throw std::invalid_argument("orbit_ball: radius must be >= 0");
    OrbitCertificate cert;
    cert.radius = radius;
    cert.margin = margin.value_or(action.default_margin());
    cert.canonical_form = action.kind() == ActionKind::modular
                              ? "Z/2*Z/3 normal form over s, r, R"
                              : "freely reduced word";
    const double limit = radius + cert.margin;
    const bool plane = action.model() == Model::plane;

    // Letters that may follow the last letter of a canonical word.
    std::vector<char> alphabet;
    if (action.kind() == ActionKind::modular)
        alphabet = {'s', 'r', 'R'};
    else
        for (const auto& gen : action.generators())
            alphabet.push_back(gen.symbol);
    const auto may_follow = [&](const std::string& w, char c) {
        if (w.empty())
            return true;
        if (action.kind() == ActionKind::modular)
            return (w.back() == 's') != (c == 's');
        return w.back() != word::inverse_letter(c);
    };

    struct Frame {
        std::string w;
        Mat2 m;
    };
    std::vector<OrbitEntry> entries;
    std::vector<Frame> stack{{"", Mat2{}}};
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const double d = plane ? displacement_from_i(f.m) : static_cast<double>(f.w.size());
        if (d > limit + 1e-12)
            continue;
        if (cert.visited >= cap) {
            cert.complete = false;
            break;
        }
        ++cert.visited;
        cert.max_depth = std::max(cert.max_depth, static_cast<int>(f.w.size()));
        if (d <= radius + 1e-12)
            entries.push_back({f.w, d, static_cast<int>(f.w.size())});
        for (auto it = alphabet.rbegin(); it != alphabet.rend(); ++it) {
            if (!may_follow(f.w, *it))
                continue;
            Frame next{f.w + *it, f.m};
            if (plane)
                next.m = f.m * action.matrix(std::string_view(&*it, 1));
            stack.push_back(std::move(next));
        }
    }
    std::sort(entries.begin(), entries.end(), [](const OrbitEntry& x, const OrbitEntry& y) {
        if (x.displacement != y.displacement)
            return x.displacement < y.displacement;
        return x.element < y.element;
    });
    std::vector<Mat2> matrices;
    if (plane) {
        matrices.reserve(entries.size());
        for (const auto& e : entries)
            matrices.push_back(action.matrix(e.element));
    }
    return OrbitBall(std::move(entries), std::move(matrices), std::move(cert));
}

Estimate critical_exponent(const OrbitBall& ball, double window_lo, double window_hi) {
    if (window_hi > ball.radius() + 1e-9)
        throw std::invalid_argument("critical_exponent: window exceeds ball radius");
    if (!ball.complete())
        throw std::invalid_argument("critical_exponent: orbit ball is incomplete");
    std::vector<double> xs, ys;
    for (int r = static_cast<int>(std::ceil(window_lo - 1e-9)); r <= window_hi + 1e-9; ++r) {
        xs.push_back(r);
        ys.push_back(std::log(static_cast<double>(ball.count_within(r))));
    }
    if (xs.size() < 4)
        throw std::invalid_argument("critical_exponent: fewer than 4 radii in the window");
    const LinearFit fit = linear_fit(xs, ys);
    return make_estimate(fit.slope, fit.slope_stderr, ball.count_within(window_hi), 0,
                         "orbit-count-fit");
}

DistortionReport parabolic_distortion_report(const GroupAction& action,
                                             std::string_view parabolic, int n_max,
                                             int window_lo, int window_hi) {
    if (!action.has_parabolics())
        throw std::invalid_argument("parabolic_distortion_report: " + action.name() +
                                    " has no parabolic elements");
    const std::string p = action.element(parabolic);
    const Mat2 m = action.matrix(p);
    if (std::abs(std::abs(m.trace()) - 2.0) > 1e-9)
        throw std::invalid_argument("parabolic_distortion_report: element is not parabolic");
    if (window_hi > n_max || window_lo < 1 || window_hi - window_lo < 3)
        throw std::invalid_argument("parabolic_distortion_report: bad fit window");
    DistortionReport rep;
    rep.window_lo = window_lo;
    rep.window_hi = window_hi;
    rep.liminf_ratio = std::numeric_limits<double>::infinity();
    std::string pn;
    std::vector<double> xs, ys;
    for (int n = 1; n <= n_max; ++n) {
        action.append(pn, p);
        DistortionRow row;
        row.n = n;
        row.word_norm = action.word_norm(pn);
        row.displacement = action.displacement(pn);
        row.ratio = std::log(static_cast<double>(row.word_norm)) / row.displacement;
        if (n >= window_lo && n <= window_hi) {
            xs.push_back(row.displacement);
            ys.push_back(std::log(static_cast<double>(row.word_norm)));
            rep.liminf_ratio = std::min(rep.liminf_ratio, row.ratio);
        }
        rep.rows.push_back(row);
    }
    rep.fit = linear_fit(xs, ys);
    return rep;
}

}  // namespace hypdrift
