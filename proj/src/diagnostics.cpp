#include "hypdrift/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "hypdrift/word.hpp"

namespace hypdrift {

using cplx = std::complex<double>;
using nlohmann::json;

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Position of a walk: canonical word and, on the plane, a scaled matrix.
struct Position {
    std::string word;
    ScaledMatrix matrix;
};

double displacement(const GroupAction& a, const Position& p) {
    return a.model() == Model::tree ? static_cast<double>(p.word.size())
                                    : p.matrix.displacement_from_i();
}

// Positions of path i at the given (sorted) checkpoints.
std::vector<Position> walk_positions(const WalkMeasure& mu, std::size_t i, std::uint64_t seed,
                                     const std::vector<std::size_t>& checkpoints,
                                     bool need_word = true) {
    const GroupAction& a = mu.action();
    const bool plane = a.model() == Model::plane;
    const std::size_t n = checkpoints.back();
    const SamplePath path = sample_path(mu, n, seed, i);
    std::vector<Position> out;
    out.reserve(checkpoints.size());
    Position cur;
    std::size_t next = 0;
    while (next < checkpoints.size() && checkpoints[next] == 0)
        out.push_back(cur), ++next;
    for (std::size_t k = 0; k < n; ++k) {
        const auto atom = path.increments[k];
        if (need_word || !plane)
            a.append(cur.word, mu.support()[atom].element);
        if (plane)
            cur.matrix.right_multiply(mu.matrix(atom));
        while (next < checkpoints.size() && checkpoints[next] == k + 1)
            out.push_back(cur), ++next;
    }
    return out;
}

// Matrix of the isometry taking i to z.
ScaledMatrix inverse_of_chart(cplx z) {
    const double s = std::sqrt(z.imag());
    return ScaledMatrix(Mat2{1.0 / s, -z.real() / s, 0.0, s});
}

// d(target, [o, p]) for the walk endpoint p.
double gate_height(const GroupAction& a, const Shadow& shadow, const Position& p) {
    if (a.model() == Model::tree)
        return dist_to_segment(shadow.target(), shadow.source(), ModelPoint::tree(p.word));
    const double sa = dist(shadow.source(), shadow.target());
    const double sb = (inverse_of_chart(shadow.target().z()) * p.matrix).displacement_from_i();
    const double sc = p.matrix.displacement_from_i();
    return plane_segment_height(sa, sb, sc);
}

double height(Model m, double a, double b, double c) {
    return m == Model::tree ? tree_segment_height(a, b, c) : plane_segment_height(a, b, c);
}

double median(std::vector<double> v) {
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
    }
    return m;
}

json fit_json(const LinearFit& f) {
    return {{"slope", f.slope},
            {"intercept", f.intercept},
            {"slope_stderr", f.slope_stderr},
            {"intercept_stderr", f.intercept_stderr},
            {"points", f.n}};
}

}  // namespace

json to_json(const Estimate& e) {
    return {{"value", e.value},
            {"stderr", e.stderr_},
            {"n_samples", e.n_samples},
            {"seed", e.seed},
            {"method", e.method}};
}

// ------------------------------------------------------------- drift

DriftEstimate drift(const WalkMeasure& mu, std::size_t n, std::size_t batch, std::uint64_t seed) {
    if (n < 100)
        throw std::invalid_argument("drift: n must be >= 100");
    if (batch < 2)
        throw std::invalid_argument("drift: batch must be >= 2");
    const GroupAction& a = mu.action();
    std::vector<std::pair<double, double>> rows(batch);
    const std::vector<std::size_t> cps{n / 2, n};
    parallel_for(batch, [&](std::size_t i) {
        const auto pos = walk_positions(mu, i, seed, cps, a.model() == Model::tree);
        rows[i] = {displacement(a, pos[0]) / static_cast<double>(n / 2),
                   displacement(a, pos[1]) / static_cast<double>(n)};
    });
    RunningStats half, full;
    for (const auto& [h, f] : rows) {
        half.add(h);
        full.add(f);
    }
    return {make_estimate(full.mean(), full.stderr_of_mean(), batch, seed, "batch-mean"),
            make_estimate(half.mean(), half.stderr_of_mean(), batch, seed, "batch-mean")};
}

// ------------------------------------------------------------- entropy

std::string_view to_string(EntropyMethod m) {
    return m == EntropyMethod::exact_convolution ? "exact-convolution" : "green-drift";
}

EntropyMethod parse_entropy_method(std::string_view s) {
    if (s == "exact-convolution")
        return EntropyMethod::exact_convolution;
    if (s == "green-drift")
        return EntropyMethod::green_drift;
    throw std::invalid_argument("unknown entropy method '" + std::string(s) +
                                "' (expected exact-convolution or green-drift)");
}

EntropyResult entropy(const WalkMeasure& mu, EntropyMethod method, const EntropyParams& p) {
    EntropyResult out;
    if (method == EntropyMethod::exact_convolution) {
        if (p.n < 1)
            throw std::invalid_argument("entropy: n must be >= 1");
        double prev = 0.0;
        for (std::size_t k = 1; k <= p.n; ++k) {
            const double H = shannon_entropy(convolution_power(mu, k, p.cap));
            out.per_step.push_back(H / static_cast<double>(k));
            out.increments.push_back(H - prev);
            if (k > 1 && out.increments[k - 1] > out.increments[k - 2] + 1e-12)
                out.monotone_increments = false;
            prev = H;
        }
        out.value = make_estimate(out.increments.back(), 0.0, p.n, 0, "exact-convolution");
        return out;
    }
    const auto green = ExactGreen::make(mu);
    if (!green)
        throw std::invalid_argument(
            "entropy: green-drift needs the closed-form Green function (nearest-neighbour "
            "measure on a free basis or on {S, T, T^-1})");
    if (p.n < 2 || p.batch < 2)
        throw std::invalid_argument("entropy: green-drift needs n >= 2 and batch >= 2");
    std::vector<std::pair<double, double>> rows(p.batch);
    const std::vector<std::size_t> cps{p.n / 2, p.n};
    parallel_for(p.batch, [&](std::size_t i) {
        const auto pos = walk_positions(mu, i, p.seed, cps);
        rows[i] = {green->green_distance(pos[0].word) / static_cast<double>(p.n / 2),
                   green->green_distance(pos[1].word) / static_cast<double>(p.n)};
    });
    RunningStats half, full;
    for (const auto& [h, f] : rows) {
        half.add(h);
        full.add(f);
    }
    out.value = make_estimate(full.mean(), full.stderr_of_mean(), p.batch, p.seed, "green-drift");
    out.half = make_estimate(half.mean(), half.stderr_of_mean(), p.batch, p.seed, "green-drift");
    return out;
}

// ------------------------------------------------------------- harmonic measure

std::vector<Estimate> harmonic_shadow_masses(const WalkMeasure& mu,
                                             const std::vector<Shadow>& shadows, std::size_t n,
                                             std::size_t batch, std::uint64_t seed) {
    const GroupAction& a = mu.action();
    if (batch < 2 || n < 1)
        throw std::invalid_argument("harmonic_shadow_mass: n >= 1 and batch >= 2 required");
    double reach = 0.0;
    for (const auto& s : shadows) {
        if (s.model() != a.model())
            throw ModelMismatch();
        if (!(s.source() == a.basepoint()))
            throw std::invalid_argument("harmonic_shadow_mass: shadow source must be the basepoint");
        reach = std::max(reach, dist(s.source(), s.target()));
    }
    std::vector<Position> ends(batch);
    parallel_for(batch, [&](std::size_t i) {
        ends[i] = walk_positions(mu, i, seed, {n}, a.model() == Model::tree)[0];
    });
    double mean_d = 0.0;
    for (const auto& e : ends)
        mean_d += displacement(a, e);
    mean_d /= static_cast<double>(batch);
    if (mean_d < 3.0 * reach + 20.0)
        throw PreconditionFailed("harmonic_shadow_mass: mean displacement " + fmt(mean_d) +
                                 " at horizon " + std::to_string(n) + " is below 3 d(o, target) + 20 = " +
                                 fmt(3.0 * reach + 20.0));
    std::vector<Estimate> out;
    for (const auto& s : shadows) {
        std::size_t hits = 0;
        for (const auto& e : ends)
            hits += gate_height(a, s, e) <= s.radius() + 1e-12;
        const double p = static_cast<double>(hits) / static_cast<double>(batch);
        out.push_back(make_estimate(p, std::sqrt(p * (1.0 - p) / static_cast<double>(batch)), batch,
                                    seed, "hitting-fraction"));
    }
    return out;
}

Estimate harmonic_shadow_mass(const WalkMeasure& mu, const Shadow& shadow, std::size_t n,
                              std::size_t batch, std::uint64_t seed) {
    return harmonic_shadow_masses(mu, {shadow}, n, batch, seed)[0];
}

// ------------------------------------------------------------- conformal shadows

ConformalShadows::ConformalShadows(const WalkMeasure& mu, const Potential& F,
                                   const GibbsAtoms& atoms, double v_hat, Params params)
    : mu_(&mu), F_(F), atoms_(&atoms), v_hat_(v_hat), params_(params) {
    const GroupAction& a = mu.action();
    if (atoms.action->name() != a.name())
        throw std::invalid_argument("ConformalShadows: atoms and measure live on different actions");
    green_ = ExactGreen::make(mu);
    if (!green_)
        throw std::invalid_argument(
            "ConformalShadows: the harmonic side needs the closed-form Green function");
    if (params_.pool < 30)
        throw std::invalid_argument("ConformalShadows: pool must hold at least 30 samples");
    for (const auto& m : atoms.matrices)
        atom_matrices_.emplace_back(m);
    std::size_t N = params_.horizon;
    if (N == 0) {
        const double ell = drift(mu, 200, 64, derive_seed(params_.seed, "pilot")).value.value;
        N = static_cast<std::size_t>(std::ceil(60.0 / std::max(ell, 1e-3)));
        N = std::clamp<std::size_t>(N, 50, 20000);
        params_.horizon = N;
    }
    pool_.resize(params_.pool);
    const std::uint64_t pool_seed = derive_seed(params_.seed, "pool");
    parallel_for(params_.pool, [&](std::size_t i) {
        Position p = walk_positions(mu, i, pool_seed, {N})[0];
        Sample s;
        s.log_green = green_->log_green(p.word);
        s.displacement = displacement(a, p);
        s.matrix = p.matrix;
        s.element = std::move(p.word);
        pool_[i] = std::move(s);
    });
}

double ConformalShadows::height(double a, double b, double c) const {
    return hypdrift::height(mu_->action().model(), a, b, c);
}

double ConformalShadows::displacement_of_product(std::string_view g, const ScaledMatrix& gm,
                                                 std::string_view h,
                                                 const ScaledMatrix& hm) const {
    if (mu_->action().model() == Model::tree)
        return static_cast<double>(word::distance(word::inverse(g), h));
    return (gm * hm).displacement_from_i();
}

ConformalShadows::Mass ConformalShadows::gibbs(std::string_view g) const {
    const GroupAction& act = mu_->action();
    const bool plane = act.model() == Model::plane;
    const ScaledMatrix gm = plane ? ScaledMatrix(act.matrix(g)) : ScaledMatrix();
    const std::string ginv = plane ? std::string() : word::inverse(g);
    const double a = plane ? gm.displacement_from_i() : static_cast<double>(g.size());
    Mass m;
    for (std::size_t i = 0; i < atoms_->atoms.size(); ++i) {
        const GibbsAtom& at = atoms_->atoms[i];
        const double b = at.displacement;
        const double c = plane ? (gm * atom_matrices_[i]).displacement_from_i()
                               : static_cast<double>(word::distance(ginv, at.element));
        if (height(a, b, c) > params_.radius + 1e-12)
            continue;
        double dF = 0.0;
        if (F_.plane_only())
            dF = fake_distance_orbit(F_, gm * atom_matrices_[i]) - at.fake_distance;
        else
            dF = F_.shift() * (c - b);
        m.value += at.normalized_mass * std::exp(dF - v_hat_ * (c - b));
        ++m.hits;
    }
    return m;
}

ConformalShadows::Mass ConformalShadows::harmonic(std::string_view g) const {
    const GroupAction& act = mu_->action();
    const bool plane = act.model() == Model::plane;
    const ScaledMatrix gm = plane ? ScaledMatrix(act.matrix(g)) : ScaledMatrix();
    const std::string ginv = plane ? std::string() : word::inverse(g);
    const double a = plane ? gm.displacement_from_i() : static_cast<double>(g.size());
    Mass m;
    for (const auto& s : pool_) {
        const double c = displacement_of_product(g, gm, s.element, s.matrix);
        if (height(a, s.displacement, c) > params_.radius + 1e-12)
            continue;
        m.value += std::exp(green_->log_green(act.multiply(g, s.element)) - s.log_green);
        ++m.hits;
    }
    m.value /= static_cast<double>(pool_.size());
    return m;
}

json ShadowRatioTable::to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows)
        rows_j.push_back({{"n", r.n},
                          {"paths", r.paths},
                          {"median_phi", r.median_phi},
                          {"mean_phi", r.mean_phi},
                          {"p_phi_ge_0.5", r.p_ge_05},
                          {"p_phi_ge_0.1", r.p_ge_01},
                          {"p_phi_ge_0.01", r.p_ge_001},
                          {"psi", hypdrift::to_json(r.psi)},
                          {"psi_over_n", hypdrift::to_json(r.psi_over_n)},
                          {"cesaro_mean_phi", r.cesaro_mean_phi},
                          {"cesaro_psi_over_n", hypdrift::to_json(r.cesaro_psi_over_n)},
                          {"min_hits", r.min_hits},
                          {"low_confidence", r.low_confidence}});
    return {{"radius", radius}, {"rows", rows_j}};
}

std::string ShadowRatioTable::to_csv() const {
    std::string out =
        "n,median_phi,mean_phi,p_phi_ge_0.5,p_phi_ge_0.1,p_phi_ge_0.01,psi,psi_stderr,"
        "psi_over_n,psi_over_n_stderr,cesaro_mean_phi,cesaro_psi_over_n,low_confidence\n";
    for (const auto& r : rows)
        out += std::to_string(r.n) + ',' + fmt(r.median_phi) + ',' + fmt(r.mean_phi) + ',' +
               fmt(r.p_ge_05) + ',' + fmt(r.p_ge_01) + ',' + fmt(r.p_ge_001) + ',' +
               fmt(r.psi.value) + ',' + fmt(r.psi.stderr_) + ',' + fmt(r.psi_over_n.value) + ',' +
               fmt(r.psi_over_n.stderr_) + ',' + fmt(r.cesaro_mean_phi) + ',' +
               fmt(r.cesaro_psi_over_n.value) + ',' +
               (r.low_confidence ? "1" : "0") + '\n';
    return out;
}

ShadowRatioTable shadow_ratio_stats(const ConformalShadows& shadows, const WalkMeasure& mu,
                                    const std::vector<std::size_t>& grid_in, std::size_t batch,
                                    std::uint64_t seed) {
    if (grid_in.empty() || batch < 2)
        throw std::invalid_argument("shadow_ratio_stats: need a grid and batch >= 2");
    std::vector<std::size_t> grid = grid_in;
    std::sort(grid.begin(), grid.end());
    struct Cell {
        double phi;
        std::size_t hits;
    };
    std::vector<std::vector<Cell>> cells(batch, std::vector<Cell>(grid.size()));
    parallel_for(batch, [&](std::size_t i) {
        const auto pos = walk_positions(mu, i, seed, grid);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const auto k = shadows.gibbs(pos[j].word);
            const auto nu = shadows.harmonic(pos[j].word);
            const double phi = nu.value > 0.0 ? k.value / nu.value
                                              : std::numeric_limits<double>::infinity();
            cells[i][j] = {phi, std::min(k.hits, nu.hits)};
        }
    });
    ShadowRatioTable t;
    t.radius = shadows.radius();
    double cesaro = 0.0, cesaro_psi = 0.0, cesaro_psi_err = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        ShadowRatioRow r;
        r.n = grid[j];
        r.paths = batch;
        std::vector<double> phis;
        RunningStats mean, psi, psin;
        r.min_hits = std::numeric_limits<std::size_t>::max();
        std::size_t c05 = 0, c01 = 0, c001 = 0;
        for (std::size_t i = 0; i < batch; ++i) {
            const Cell& c = cells[i][j];
            phis.push_back(c.phi);
            r.min_hits = std::min(r.min_hits, c.hits);
            c05 += c.phi >= 0.5;
            c01 += c.phi >= 0.1;
            c001 += c.phi >= 0.01;
            if (std::isfinite(c.phi) && c.phi > 0.0) {
                mean.add(c.phi);
                psi.add(std::log(c.phi));
                psin.add(std::log(c.phi) / static_cast<double>(r.n));
            }
        }
        const double b = static_cast<double>(batch);
        r.median_phi = median(phis);
        r.mean_phi = mean.mean();
        r.p_ge_05 = static_cast<double>(c05) / b;
        r.p_ge_01 = static_cast<double>(c01) / b;
        r.p_ge_001 = static_cast<double>(c001) / b;
        r.psi = make_estimate(psi.mean(), psi.stderr_of_mean(), psi.count(), seed, "batch-mean");
        r.psi_over_n =
            make_estimate(psin.mean(), psin.stderr_of_mean(), psin.count(), seed, "batch-mean");
        cesaro += r.mean_phi;
        r.cesaro_mean_phi = cesaro / static_cast<double>(j + 1);
        cesaro_psi += r.psi_over_n.value;
        cesaro_psi_err += r.psi_over_n.stderr_;
        r.cesaro_psi_over_n = make_estimate(cesaro_psi / static_cast<double>(j + 1),
                                            cesaro_psi_err / static_cast<double>(j + 1),
                                            psin.count(), seed, "cesaro-mean");
        r.low_confidence = r.min_hits < 30 || psi.count() < batch;
        t.rows.push_back(r);
    }
    return t;
}

// ------------------------------------------------------------- inequality

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::equality_consistent: return "equality-consistent";
        case Verdict::strictly_less: return "strictly-less";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

json InequalityReport::to_json() const {
    json j{{"schema_version", kReportSchemaVersion},
           {"kind", "inequality"},
           {"action", action},
           {"measure", measure},
           {"potential", potential},
           {"h", hypdrift::to_json(h_green)},
           {"ell", hypdrift::to_json(ell)},
           {"ell_half", hypdrift::to_json(ell_half)},
           {"v_F", hypdrift::to_json(v_F)},
           {"ell_F", hypdrift::to_json(ell_F)},
           {"gap", gap},
           {"sigma", sigma},
           {"verdict", std::string(hypdrift::to_string(verdict))},
           {"guivarch_holds", guivarch_holds},
           {"bucket_entropies", bucket_entropies},
           {"fingerprint", fingerprint}};
    if (h_exact)
        j["h_exact_convolution"] = hypdrift::to_json(*h_exact);
    if (v_critical)
        j["v_critical"] = hypdrift::to_json(*v_critical);
    if (!failing_component.empty())
        j["failing_component"] = failing_component;
    return j;
}

InequalityReport inequality_report(const WalkMeasure& mu, const Potential& F,
                                   const InequalityParams& p) {
    const GroupAction& act = mu.action();
    InequalityReport rep;
    rep.action = act.name();
    rep.potential = F.name();
    for (const auto& at : mu.support())
        rep.measure += (rep.measure.empty() ? "" : " ") + (at.element.empty() ? "e" : at.element) +
                       ":" + fmt(at.probability);
    auto fail = [&](const char* component, const std::exception& e) {
        if (rep.failing_component.empty())
            rep.failing_component = std::string(component) + ": " + e.what();
    };
    bool ok = true;
    try {
        const auto d = drift(mu, p.n, p.batch, derive_seed(p.seed, "drift"));
        rep.ell = d.value;
        rep.ell_half = d.half;
    } catch (const std::exception& e) {
        fail("drift", e);
        ok = false;
    }
    try {
        EntropyParams ep;
        ep.n = p.n;
        ep.batch = p.batch;
        ep.seed = derive_seed(p.seed, "entropy");
        rep.h_green = entropy(mu, EntropyMethod::green_drift, ep).value;
    } catch (const std::exception& e) {
        fail("entropy", e);
        ok = false;
    }
    try {
        const OrbitBall ball = orbit_ball(act, p.ball_radius);
        rep.v_F = pressure(ball, act, F, p.window_lo, p.window_hi).value;
        if (F.kind() == PotentialKind::zero)
            rep.v_critical = critical_exponent(ball, p.window_lo, p.window_hi);
    } catch (const std::exception& e) {
        fail("pressure", e);
        ok = false;
    }
    try {
        const std::size_t fb = p.fake_drift_batch ? p.fake_drift_batch : p.batch;
        rep.ell_F = fake_drift(F, mu, p.fake_drift_n ? p.fake_drift_n : p.n, fb, derive_seed(p.seed, "fake-drift")).value;
    } catch (const std::exception& e) {
        fail("fake-drift", e);
        ok = false;
    }
    if (p.bucket_n > 0) {
        try {
            for (std::size_t n = 2; n <= p.bucket_n; n += 2) {
                const auto dist_n = convolution_power(mu, n, 2'000'000);
                std::vector<double> mass;
                const double width = p.bucket_eps * static_cast<double>(n);
                for (const auto& at : dist_n) {
                    const double d = act.displacement(at.element);
                    const auto k = static_cast<std::size_t>(std::floor(d / width));
                    if (mass.size() <= k)
                        mass.resize(k + 1, 0.0);
                    mass[k] += at.probability;
                }
                double H = 0.0;
                for (double m : mass)
                    if (m > 0.0)
                        H -= m * std::log(m);
                rep.bucket_entropies.push_back(H);
                if (n + 2 > p.bucket_n) {
                    const double Hn = shannon_entropy(dist_n);
                    const double Hp = shannon_entropy(convolution_power(mu, n - 1, 2'000'000));
                    rep.h_exact = make_estimate(Hn - Hp, 0.0, n, 0, "exact-convolution");
                }
            }
        } catch (const CapExceeded&) {
            // cross-check skipped when the convolution support is too large
        }
    }
    if (ok) {
        rep.gap = rep.ell.value * rep.v_F.value - rep.ell_F.value - rep.h_green.value;
        rep.sigma = std::sqrt(std::pow(rep.v_F.value * rep.ell.stderr_, 2) +
                              std::pow(rep.ell.value * rep.v_F.stderr_, 2) +
                              std::pow(rep.ell_F.stderr_, 2) + std::pow(rep.h_green.stderr_, 2));
        if (rep.gap > p.strict_sigmas * rep.sigma)
            rep.verdict = Verdict::strictly_less;
        else if (std::abs(rep.gap) <= p.equality_sigmas * rep.sigma)
            rep.verdict = Verdict::equality_consistent;
        else
            rep.verdict = Verdict::inconclusive;
        rep.guivarch_holds = rep.gap >= -3.0 * rep.sigma;
    }
    return rep;
}

// ------------------------------------------------------------- deviations

json DeviationReport::to_json() const {
    return {{"schema_version", kReportSchemaVersion},
            {"kind", "metric-deviation"},
            {"v_F", v_F},
            {"rows", rows.size()},
            {"max_abs_deviation", max_abs_deviation},
            {"growth", fit_json(growth)},
            {"witnesses", witnesses},
            {"mc_noise_flag", mc_noise_flag},
            {"ancona",
             {{"constant", ancona_constant},
              {"gate", ancona_gate},
              {"triples", ancona_triples},
              {"violations", ancona_violations},
              {"max_defect", ancona_max_defect}}}};
}

std::string DeviationReport::to_csv() const {
    std::string out = "element,green_distance,green_stderr,displacement,fake_distance,deviation\n";
    for (const auto& r : rows)
        out += r.element + ',' + fmt(r.green_distance) + ',' + fmt(r.green_stderr) + ',' +
               fmt(r.displacement) + ',' + fmt(r.fake_distance) + ',' + fmt(r.deviation) + '\n';
    return out;
}

DeviationReport metric_deviation_report(const WalkMeasure& mu, const Potential& F, double v_F,
                                        const std::vector<std::string>& elements,
                                        const DeviationParams& p) {
    const GroupAction& act = mu.action();
    const auto exact = p.method == GreenMethod::exact_recursive ? ExactGreen::make(mu)
                                                                : std::optional<ExactGreen>{};
    if (p.method == GreenMethod::exact_recursive && !exact)
        throw std::invalid_argument(
            "metric_deviation_report: exact-recursive Green function unavailable for this measure");
    DeviationReport rep;
    rep.v_F = v_F;
    rep.rows.resize(elements.size());
    auto row_for = [&](std::size_t i) {
        DeviationRow r;
        r.element = elements[i];
        if (exact) {
            r.green_distance = exact->green_distance(r.element);
            r.green_stderr = 0.0;
        } else {
            const Estimate e = green_metric(mu, r.element, p.method, p.green);
            r.green_distance = e.value;
            r.green_stderr = e.stderr_;
        }
        r.displacement = act.displacement(r.element);
        r.fake_distance = fake_distance_orbit(F, act, r.element);
        r.deviation = r.green_distance - v_F * r.displacement + r.fake_distance;
        rep.rows[i] = std::move(r);
    };
    if (exact)
        parallel_for(elements.size(), row_for);
    else
        for (std::size_t i = 0; i < elements.size(); ++i)
            row_for(i);

    std::vector<double> xs, ys;
    double max_d = 0.0, max_se = 0.0;
    for (const auto& r : rep.rows) {
        rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(r.deviation));
        xs.push_back(r.displacement);
        ys.push_back(std::abs(r.deviation));
        max_d = std::max(max_d, r.displacement);
        max_se = std::max(max_se, r.green_stderr);
    }
    if (xs.size() >= 2)
        rep.growth = linear_fit(xs, ys);
    rep.mc_noise_flag = max_se > 0.2 * rep.max_abs_deviation && max_se > 0.0;
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
        if (rep.rows[i].displacement >= 0.5 * max_d)
            order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(rep.rows[x].deviation) > std::abs(rep.rows[y].deviation);
    });
    for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i)
        rep.witnesses.push_back(rep.rows[order[i]].element);

    // relative Ancona inequality on triples (e, g2, g3) with g2 o near [o, g3 o]
    rep.ancona_constant = p.ancona_constant.value_or(2.0 * rep.max_abs_deviation + 1e-9);
    const double gate = p.gate >= 0.0 ? p.gate : (act.model() == Model::tree ? 0.0 : 1.0);
    rep.ancona_gate = gate;
    if (exact && !elements.empty()) {
        const std::size_t stride =
            std::max<std::size_t>(1, elements.size() / std::max<std::size_t>(1, p.ancona_targets));
        const std::size_t pool_stride = std::max<std::size_t>(1, elements.size() / 2000);
        for (std::size_t t = 0; t < elements.size(); t += stride) {
            const std::string& g3 = elements[t];
            const double c = act.displacement(g3);
            const double dg3 = exact->green_distance(g3);
            // prefixes of the canonical word, then a spread of ball elements
            std::vector<std::string> cands;
            for (std::size_t k = 1; k < g3.size(); ++k)
                cands.push_back(act.element(g3.substr(0, k)));
            for (std::size_t k = 0; k < elements.size(); k += pool_stride)
                cands.push_back(elements[k]);
            std::unordered_set<std::string> seen;
            for (const auto& g2 : cands) {
                if (g2.empty() || g2 == g3 || !seen.insert(g2).second)
                    continue;
                const std::string step = act.multiply(act.inverse(g2), g3);
                const double a = act.displacement(g2);
                const double b = act.displacement(step);
                if (height(act.model(), a, b, c) > gate + 1e-12)
                    continue;
                const double defect =
                    exact->green_distance(g2) + exact->green_distance(step) - dg3;
                ++rep.ancona_triples;
                rep.ancona_max_defect = std::max(rep.ancona_max_defect, defect);
                if (defect > rep.ancona_constant)
                    ++rep.ancona_violations;
            }
        }
    }
    return rep;
}

DeviationReport metric_deviation_report(const WalkMeasure& mu, const Potential& F, double v_F,
                                        const OrbitBall& ball, const DeviationParams& params) {
    std::vector<std::string> elements;
    for (const auto& e : ball.entries())
        elements.push_back(e.element);
    return metric_deviation_report(mu, F, v_F, elements, params);
}

// ------------------------------------------------------------- deviation tails

json DeviationTail::to_json() const {
    return {{"schema_version", kReportSchemaVersion},
            {"kind", "deviation-tail"},
            {"k", k},
            {"n", n},
            {"paths", paths},
            {"a", a},
            {"tail", tail},
            {"fit", fit_json(fit)},
            {"degenerate", degenerate},
            {"monotone", monotone}};
}

std::string DeviationTail::to_csv() const {
    std::string out = "x,y,stderr\n";
    const double m = static_cast<double>(paths);
    for (std::size_t i = 0; i < a.size(); ++i)
        out += fmt(a[i]) + ',' + fmt(tail[i]) + ',' + fmt(std::sqrt(tail[i] * (1 - tail[i]) / m)) +
               '\n';
    return out;
}

DeviationTail deviation_tail(const WalkMeasure& mu, std::size_t k, std::size_t n,
                             const std::vector<double>& a_grid, std::size_t batch,
                             std::uint64_t seed) {
    if (k > n || n == 0)
        throw std::invalid_argument("deviation_tail: need k <= n and n >= 1");
    if (batch < 2 || a_grid.empty())
        throw std::invalid_argument("deviation_tail: need batch >= 2 and a nonempty grid");
    const GroupAction& act = mu.action();
    const bool plane = act.model() == Model::plane;
    std::vector<double> h(batch);
    parallel_for(batch, [&](std::size_t i) {
        const SamplePath path = sample_path(mu, n, seed, i);
        std::string head, tail;
        ScaledMatrix mh, mt;
        for (std::size_t s = 0; s < n; ++s) {
            const auto atom = path.increments[s];
            if (plane)
                (s < k ? mh : mt).right_multiply(mu.matrix(atom));
            else
                act.append(s < k ? head : tail, mu.support()[atom].element);
        }
        if (plane) {
            h[i] = plane_segment_height(mh.displacement_from_i(), mt.displacement_from_i(),
                                        (mh * mt).displacement_from_i());
        } else {
            std::string all = head;
            act.append(all, tail);
            h[i] = tree_segment_height(static_cast<double>(head.size()),
                                       static_cast<double>(tail.size()),
                                       static_cast<double>(all.size()));
        }
    });
    DeviationTail out;
    out.k = k;
    out.n = n;
    out.paths = batch;
    out.a = a_grid;
    std::sort(out.a.begin(), out.a.end());
    std::vector<double> xs, ys;
    for (double a : out.a) {
        std::size_t c = 0;
        for (double x : h)
            c += x > a;
        const double p = static_cast<double>(c) / static_cast<double>(batch);
        if (!out.tail.empty() && p > out.tail.back())
            out.monotone = false;
        out.tail.push_back(p);
        if (p > 0.0) {
            xs.push_back(a);
            ys.push_back(std::log(p));
        }
    }
    out.degenerate = xs.size() < 2;
    if (!out.degenerate)
        out.fit = linear_fit(xs, ys);
    return out;
}

// ------------------------------------------------------------- Green decay

json GreenDecay::to_json() const {
    return {{"schema_version", kReportSchemaVersion},
            {"kind", "green-decay"},
            {"band", {band_lo, band_hi}},
            {"min_ratio", min_ratio},
            {"max_ratio", max_ratio},
            {"fit", fit_json(fit)},
            {"elements", rows.size()},
            {"pass", pass}};
}

GreenDecay green_decay_check(const WalkMeasure& mu, int max_norm, double band_lo,
                             double band_hi, GreenMethod method, const GreenParams& params) {
    const GroupAction& act = mu.action();
    if (max_norm < 1)
        throw std::invalid_argument("green_decay_check: max_norm must be >= 1");
    // breadth-first search over the generators gives every element by word norm
    std::vector<std::string> gens;
    for (const auto& g : act.generators())
        gens.push_back(act.element(std::string(1, g.symbol)));
    std::unordered_set<std::string> seen{""};
    std::vector<std::string> layer{""};
    std::vector<std::pair<std::string, int>> elems;
    for (int d = 1; d <= max_norm; ++d) {
        std::vector<std::string> next;
        for (const auto& w : layer)
            for (const auto& g : gens) {
                std::string x = act.multiply(w, g);
                if (seen.insert(x).second) {
                    elems.emplace_back(x, d);
                    next.push_back(std::move(x));
                }
            }
        layer = std::move(next);
    }
    GreenDecay out;
    out.band_lo = band_lo;
    out.band_hi = band_hi;
    out.rows.resize(elems.size());
    const auto exact = method == GreenMethod::exact_recursive ? ExactGreen::make(mu)
                                                              : std::optional<ExactGreen>{};
    if (method == GreenMethod::exact_recursive && !exact)
        throw std::invalid_argument("green_decay_check: exact-recursive Green function unavailable");
    auto row = [&](std::size_t i) {
        const auto& [g, norm] = elems[i];
        const double dg = exact ? exact->green_distance(g) : green_metric(mu, g, method, params).value;
        out.rows[i] = {g, norm, dg, dg / norm};
    };
    if (method == GreenMethod::monte_carlo)
        for (std::size_t i = 0; i < elems.size(); ++i)
            row(i);
    else
        parallel_for(elems.size(), row);
    out.min_ratio = std::numeric_limits<double>::infinity();
    out.max_ratio = -std::numeric_limits<double>::infinity();
    std::vector<double> xs, ys;
    for (const auto& r : out.rows) {
        out.min_ratio = std::min(out.min_ratio, r.ratio);
        out.max_ratio = std::max(out.max_ratio, r.ratio);
        xs.push_back(r.word_norm);
        ys.push_back(r.green_distance);
    }
    if (xs.size() >= 2)
        out.fit = linear_fit(xs, ys);
    out.pass = out.min_ratio >= band_lo && out.max_ratio <= band_hi;
    return out;
}

}  // namespace hypdrift
