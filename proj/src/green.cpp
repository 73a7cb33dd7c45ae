#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "hypdrift/walk.hpp"
#include "hypdrift/word.hpp"

namespace hypdrift {

namespace {

constexpr std::size_t kMcBlocks = 64;

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Twice the geometric tail fitted to the ratio of the last two two-step sums
// (nearest neighbour walks on free groups are periodic with period 2).
double tail_bound(const std::vector<double>& a) {
    const std::size_t n = a.size();
    if (n < 4)
        return std::numeric_limits<double>::infinity();
    const double recent = a[n - 1] + a[n - 2];
    const double before = a[n - 3] + a[n - 4];
    if (recent <= 0.0)
        return 0.0;
    if (before <= 0.0)
        return std::numeric_limits<double>::infinity();
    const double q = recent / before;
    if (q >= 1.0)
        return std::numeric_limits<double>::infinity();
    return 2.0 * recent * q / (1.0 - q);
}

std::size_t default_horizon(const WalkMeasure& mu, std::string_view g) {
    return 40 + 10 * static_cast<std::size_t>(mu.action().word_norm(g));
}

// Sum_{n <= N} mu^n(g) for nearest-neighbour measures on a free basis, from
// first-passage time distributions of single letters.
GreenValue truncated_free_nn(const WalkMeasure& mu, std::string_view g, std::size_t N) {
    const GroupAction& act = mu.action();
    std::vector<char> letters;
    for (const auto& gen : act.generators())
        letters.push_back(gen.symbol);
    const std::size_t L = letters.size();
    const auto index = [&](char c) {
        return static_cast<std::size_t>(std::find(letters.begin(), letters.end(), c) -
                                        letters.begin());
    };
    std::vector<double> p(L);
    std::vector<std::size_t> inv(L);
    for (std::size_t i = 0; i < L; ++i) {
        p[i] = mu.probability(std::string(1, letters[i]));
        inv[i] = index(word::inverse_letter(letters[i]));
    }
    // h[x][t]: probability that the first visit to letter x happens at time t.
    std::vector<std::vector<double>> h(L, std::vector<double>(N + 1, 0.0));
    for (std::size_t t = 1; t <= N; ++t) {
        for (std::size_t x = 0; x < L; ++x) {
            double v = t == 1 ? p[x] : 0.0;
            for (std::size_t y = 0; y < L; ++y) {
                if (y == x || p[y] == 0.0)
                    continue;
                const auto& back = h[inv[y]];
                double conv = 0.0;
                for (std::size_t u = 1; u + 2 <= t; ++u)
                    conv += back[u] * h[x][t - 1 - u];
                v += p[y] * conv;
            }
            h[x][t] = v;
        }
    }
    // Return probabilities r[t] = mu^t(e).
    std::vector<double> first_return(N + 1, 0.0), r(N + 1, 0.0);
    for (std::size_t t = 2; t <= N; ++t)
        for (std::size_t y = 0; y < L; ++y)
            first_return[t] += p[y] * h[inv[y]][t - 1];
    r[0] = 1.0;
    for (std::size_t t = 1; t <= N; ++t)
        for (std::size_t u = 1; u <= t; ++u)
            r[t] += first_return[u] * r[t - u];
    // First-visit distribution of g, then convolve with returns.
    std::vector<double> hit(N + 1, 0.0);
    hit[0] = 1.0;
    for (char c : g) {
        const auto& hx = h[index(c)];
        std::vector<double> next(N + 1, 0.0);
        for (std::size_t s = 0; s <= N; ++s) {
            if (hit[s] == 0.0)
                continue;
            for (std::size_t t = 1; s + t <= N; ++t)
                next[s + t] += hit[s] * hx[t];
        }
        hit = std::move(next);
    }
    std::vector<double> a(N + 1, 0.0);
    for (std::size_t s = 0; s <= N; ++s)
        if (hit[s] != 0.0)
            for (std::size_t t = 0; s + t <= N; ++t)
                a[s + t] += hit[s] * r[t];
    GreenValue out;
    double sum = 0.0;
    for (double x : a)
        sum += x;
    out.value = sum;
    out.truncation_bound = tail_bound(a);
    out.n_samples = N;
    return out;
}

// Generic sparse convolution, keeping canonical words no longer than
// |g| + slack. Mass dropped at step n can contribute at most G(e,e) later
// visits to g, which is added to the tail bound.
GreenValue truncated_generic(const WalkMeasure& mu, std::string_view g, const GreenParams& params,
                             std::size_t N) {
    const GroupAction& act = mu.action();
    const std::size_t max_len = g.size() + params.spatial_slack;
    std::unordered_map<std::string, double> cur{{"", 1.0}};
    std::vector<double> a{g.empty() ? 1.0 : 0.0};
    std::vector<double> ret{1.0};
    double dropped = 0.0;
    const std::string target(g);
    for (std::size_t n = 1; n <= N; ++n) {
        std::unordered_map<std::string, double> next;
        next.reserve(cur.size() * mu.support().size());
        for (const auto& [w, p] : cur) {
            for (const auto& atom : mu.support()) {
                std::string x = act.multiply(w, atom.element);
                if (x.size() > max_len)
                    dropped += p * atom.probability;
                else
                    next[std::move(x)] += p * atom.probability;
            }
        }
        if (next.size() > params.cap)
            throw CapExceeded("green_function: convolution support exceeds cap");
        cur = std::move(next);
        const auto it = cur.find(target);
        a.push_back(it == cur.end() ? 0.0 : it->second);
        const auto e = cur.find("");
        ret.push_back(e == cur.end() ? 0.0 : e->second);
    }
    GreenValue out;
    double sum = 0.0, gee = 0.0;
    for (double x : a)
        sum += x;
    for (double x : ret)
        gee += x;
    out.value = sum;
    out.truncation_bound = tail_bound(a) + dropped * gee;
    out.n_samples = N;
    return out;
}

}  // namespace

std::string_view to_string(GreenMethod m) {
    switch (m) {
        case GreenMethod::exact_recursive: return "exact-recursive";
        case GreenMethod::truncated_convolution: return "truncated-convolution";
        case GreenMethod::monte_carlo: return "monte-carlo";
    }
    return "?";
}

GreenMethod parse_green_method(std::string_view s) {
    if (s == "exact-recursive")
        return GreenMethod::exact_recursive;
    if (s == "truncated-convolution")
        return GreenMethod::truncated_convolution;
    if (s == "monte-carlo")
        return GreenMethod::monte_carlo;
    throw std::invalid_argument("unknown Green method '" + std::string(s) +
                                "' (exact-recursive, truncated-convolution, monte-carlo)");
}

// ------------------------------------------------------------- exact

std::optional<ExactGreen> ExactGreen::make(const WalkMeasure& mu) {
    const GroupAction& act = mu.action();
    if (!mu.nearest_neighbour())
        return std::nullopt;
    ExactGreen out;
    if (act.free_basis()) {
        std::vector<char> letters;
        for (const auto& gen : act.generators())
            letters.push_back(gen.symbol);
        const std::size_t L = letters.size();
        std::vector<double> p(L), F(L, 0.0);
        std::vector<std::size_t> inv(L);
        for (std::size_t i = 0; i < L; ++i) {
            p[i] = mu.probability(std::string(1, letters[i]));
            inv[i] = static_cast<std::size_t>(
                std::find(letters.begin(), letters.end(), word::inverse_letter(letters[i])) -
                letters.begin());
        }
        // F(x) = mu(x) + sum_{y != x} mu(y) F(y^-1) F(x), minimal solution.
        for (int it = 0; it < 1'000'000; ++it) {
            double change = 0.0;
            std::vector<double> next(L);
            for (std::size_t x = 0; x < L; ++x) {
                double loop = 0.0;
                for (std::size_t y = 0; y < L; ++y)
                    if (y != x)
                        loop += p[y] * F[inv[y]];
                next[x] = p[x] / (1.0 - loop);
                change = std::max(change, std::abs(next[x] - F[x]));
            }
            F = std::move(next);
            if (change < 1e-17)
                break;
        }
        double back = 0.0;
        for (std::size_t y = 0; y < L; ++y)
            back += p[y] * F[inv[y]];
        out.log_gee_ = -std::log(1.0 - back);
        for (std::size_t i = 0; i < L; ++i)
            out.log_first_passage_.emplace_back(letters[i], std::log(F[i]));
        return out;
    }
    // PSL(2,Z) with steps S, T = S R, T^-1 = R^2 S.
    out.modular_ = true;
    const double pS = mu.probability("s"), pT = mu.probability("sr"), pTi = mu.probability("Rs");
    struct Step {
        double p;
        int rot, land;
    };
    const std::array<Step, 3> steps{{{pS, 0, 0}, {pT, 0, 1}, {pTi, 2, 0}}};
    // phi[i][j]: from position i relative to the exit vertex of a triangle,
    // probability that the first crossing of the exit edge lands at j.
    double phi[3][2] = {};
    for (int it = 0; it < 1'000'000; ++it) {
        double next[3][2] = {};
        for (int i = 0; i < 3; ++i) {
            for (const auto& s : steps) {
                const int v = (i + s.rot) % 3;
                if (v == 0) {
                    next[i][s.land] += s.p;
                } else {
                    for (int jp = 0; jp < 2; ++jp)
                        for (int j = 0; j < 2; ++j)
                            next[i][j] += s.p * phi[s.land][jp] * phi[(v + jp) % 3][j];
                }
            }
        }
        double change = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) {
                change = std::max(change, std::abs(next[i][j] - phi[i][j]));
                phi[i][j] = next[i][j];
            }
        if (change < 1e-17)
            break;
    }
    // Excursions that return to the same triangle.
    double M[3][3] = {};
    for (int i = 0; i < 3; ++i)
        for (const auto& s : steps) {
            const int v = (i + s.rot) % 3;
            for (int jp = 0; jp < 2; ++jp)
                M[i][(v + jp) % 3] += s.p * phi[s.land][jp];
        }
    // G_loc = (I - M)^-1 by Gauss-Jordan.
    double A[3][6] = {};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
            A[i][j] = (i == j ? 1.0 : 0.0) - M[i][j];
        A[i][3 + i] = 1.0;
    }
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c]))
                piv = r;
        for (int k = 0; k < 6; ++k)
            std::swap(A[c][k], A[piv][k]);
        const double d = A[c][c];
        for (int k = 0; k < 6; ++k)
            A[c][k] /= d;
        for (int r = 0; r < 3; ++r) {
            if (r == c)
                continue;
            const double f = A[r][c];
            for (int k = 0; k < 6; ++k)
                A[r][k] -= f * A[c][k];
        }
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j)
            out.phi_[i][j] = phi[i][j];
        for (int j = 0; j < 3; ++j)
            out.gloc_[i][j] = A[i][3 + j];
    }
    out.log_gee_ = std::log(out.gloc_[0][0]);
    return out;
}

double ExactGreen::log_green(std::string_view g) const {
    if (!modular_) {
        double s = log_gee_;
        for (char c : g) {
            const auto it = std::find_if(log_first_passage_.begin(), log_first_passage_.end(),
                                         [c](const auto& x) { return x.first == c; });
            if (it == log_first_passage_.end())
                throw std::invalid_argument("ExactGreen: unknown letter");
            s += it->second;
        }
        return s;
    }
    const auto rot = [](char c) { return c == 'r' ? 1 : (c == 'R' ? 2 : 0); };
    std::vector<int> a{0};
    std::size_t i = 0;
    if (!g.empty() && g[0] != 's') {
        a[0] = rot(g[0]);
        i = 1;
    }
    while (i < g.size()) {
        ++i;
        if (i < g.size() && g[i] != 's') {
            a.push_back(rot(g[i]));
            ++i;
        } else {
            a.push_back(0);
        }
    }
    const std::size_t m = a.size() - 1;
    if (m == 0)
        return std::log(gloc_[0][a[0]]);
    double v[3] = {0, 0, 0};
    v[(3 - a[0]) % 3] = 1.0;
    double log_scale = 0.0;
    double u[2] = {0, 0};
    for (std::size_t k = 1; k <= m; ++k) {
        for (int j = 0; j < 2; ++j)
            u[j] = v[0] * phi_[0][j] + v[1] * phi_[1][j] + v[2] * phi_[2][j];
        const double norm = std::max(u[0], u[1]);
        u[0] /= norm;
        u[1] /= norm;
        log_scale += std::log(norm);
        if (k < m) {
            v[0] = v[1] = v[2] = 0.0;
            for (int j = 0; j < 2; ++j)
                v[((j - a[k]) % 3 + 3) % 3] += u[j];
        }
    }
    const double tail = u[0] * gloc_[0][a[m]] + u[1] * gloc_[1][a[m]];
    return log_scale + std::log(tail);
}

// ------------------------------------------------------------- estimators

std::vector<GreenValue> green_function_mc(const WalkMeasure& mu,
                                          const std::vector<std::string>& targets,
                                          std::size_t paths, std::size_t horizon,
                                          std::uint64_t seed) {
    if (paths < 2 || horizon == 0)
        throw std::invalid_argument("monte-carlo Green: needs >= 2 paths and horizon >= 1");
    std::unordered_map<std::string, std::size_t> index;
    std::size_t max_len = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        index.emplace(targets[i], i);
        max_len = std::max(max_len, targets[i].size());
    }
    const std::size_t T = targets.size();
    const std::size_t blocks = std::min(kMcBlocks, paths);
    std::vector<std::vector<RunningStats>> partial(blocks, std::vector<RunningStats>(T));
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t lo = paths * b / blocks, hi = paths * (b + 1) / blocks;
        std::vector<double> count(T);
        for (std::size_t i = lo; i < hi; ++i) {
            std::fill(count.begin(), count.end(), 0.0);
            Rng rng(path_seed(seed, i));
            PathTracker tr(mu, false);
            if (const auto it = index.find(""); it != index.end())
                count[it->second] += 1.0;
            for (std::size_t k = 0; k < horizon; ++k) {
                tr.step(mu.draw(rng.uniform()));
                if (tr.element().size() <= max_len)
                    if (const auto it = index.find(tr.element()); it != index.end())
                        count[it->second] += 1.0;
            }
            for (std::size_t t = 0; t < T; ++t)
                partial[b][t].add(count[t]);
        }
    });
    std::vector<GreenValue> out(T);
    for (std::size_t t = 0; t < T; ++t) {
        RunningStats s;
        for (std::size_t b = 0; b < blocks; ++b)
            s.merge(partial[b][t]);
        static_cast<Estimate&>(out[t]) =
            make_estimate(s.mean(), s.stderr_of_mean(), paths, seed, "monte-carlo");
    }
    return out;
}

GreenValue green_function(const WalkMeasure& mu, std::string_view g_in, GreenMethod method,
                          const GreenParams& params) {
    const std::string g(g_in);
    switch (method) {
        case GreenMethod::exact_recursive: {
            const auto ex = ExactGreen::make(mu);
            if (!ex)
                throw std::invalid_argument(
                    "exact-recursive Green function needs a nearest-neighbour measure");
            GreenValue out;
            static_cast<Estimate&>(out) = make_estimate(ex->green(g), 0.0, 0, 0, "exact-recursive");
            return out;
        }
        case GreenMethod::truncated_convolution: {
            const std::size_t N = params.horizon ? params.horizon : default_horizon(mu, g);
            GreenValue out = (mu.action().free_basis() && mu.nearest_neighbour())
                                 ? truncated_free_nn(mu, g, N)
                                 : truncated_generic(mu, g, params, N);
            out.method = "truncated-convolution";
            if (!(out.truncation_bound <= 0.1 * out.value))
                throw HorizonTooSmall("truncated-convolution: tail bound " +
                                      fmt(out.truncation_bound) + " exceeds 10% of value " +
                                      fmt(out.value) + " at horizon " + std::to_string(N));
            return out;
        }
        case GreenMethod::monte_carlo: {
            const std::size_t N = params.horizon ? params.horizon : 200;
            return green_function_mc(mu, {g}, params.paths, N, params.seed).front();
        }
    }
    throw std::logic_error("unreachable");
}

Estimate green_metric(const WalkMeasure& mu, std::string_view g, GreenMethod method,
                      const GreenParams& params) {
    if (g.empty())
        return make_estimate(0.0, 0.0, 0, 0, std::string(to_string(method)));
    if (method == GreenMethod::exact_recursive) {
        const auto ex = ExactGreen::make(mu);
        if (!ex)
            throw std::invalid_argument(
                "exact-recursive Green function needs a nearest-neighbour measure");
        return make_estimate(ex->green_distance(g), 0.0, 0, 0, "exact-recursive");
    }
    GreenValue ge, gg;
    if (method == GreenMethod::monte_carlo) {
        const std::size_t N = params.horizon ? params.horizon : 200;
        const auto v = green_function_mc(mu, {std::string(g), ""}, params.paths, N, params.seed);
        gg = v[0];
        ge = v[1];
    } else {
        GreenParams p = params;
        if (!p.horizon)
            p.horizon = default_horizon(mu, g);
        gg = green_function(mu, g, method, p);
        ge = green_function(mu, "", method, p);
    }
    if (!(gg.value > 0.0))
        throw std::runtime_error("green_metric: Green value of '" + std::string(g) +
                                 "' is zero (no visits)");
    const double rel = std::hypot(gg.stderr_ / gg.value, ge.stderr_ / ge.value);
    return make_estimate(-std::log(gg.value / ge.value), rel, gg.n_samples, gg.seed,
                         std::string(to_string(method)));
}

GreenBusemann green_busemann(const WalkMeasure& mu, std::string_view g_in,
                             const BoundaryPoint& zeta, const std::vector<std::string>& approach,
                             GreenMethod method, const GreenParams& params) {
    const GroupAction& act = mu.action();
    if (zeta.model() != act.model())
        throw ModelMismatch();
    if (approach.size() < 4)
        throw std::invalid_argument("green_busemann: approach needs at least 4 elements");
    for (std::size_t i = 1; i < approach.size(); ++i)
        if (!(act.displacement(approach[i]) > act.displacement(approach[i - 1])))
            throw std::invalid_argument("green_busemann: approach displacements must increase");
    const std::string g(g_in);
    const std::string g_inv = act.inverse(g);
    GreenBusemann out;
    double var = 0.0;
    for (const auto& h : approach) {
        const Estimate a = green_metric(mu, act.multiply(g_inv, h), method, params);
        const Estimate b = green_metric(mu, h, method, params);
        out.differences.push_back(a.value - b.value);
        var = a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_;
    }
    for (std::size_t i = 1; i < out.differences.size(); ++i)
        out.increments.push_back(std::abs(out.differences[i] - out.differences[i - 1]));
    for (std::size_t i = 1; i < out.increments.size(); ++i)
        if (out.increments[i] > out.increments[i - 1] + 1e-12)
            out.cauchy = false;
    out.value = make_estimate(out.differences.back(), std::sqrt(var), approach.size(), params.seed,
                              std::string(to_string(method)));
    return out;
}

std::string green_table_csv(const std::vector<GreenRow>& rows) {
    std::string out = "element,displacement,green_value,stderr,method\n";
    for (const auto& r : rows) {
        out += r.element + ',' + fmt(r.displacement) + ',' + fmt(r.value.value) + ',' +
               fmt(r.value.stderr_) + ',' + r.value.method + '\n';
    }
    return out;
}

}  // namespace hypdrift
