#pragma once

// Top-level estimators: drift, entropy, harmonic and Gibbs shadow masses,
// the inequality h <= l v_F - l_F, bounded-deviation checks, deviation tails
// and Green decay.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypdrift/geometry.hpp"
#include "hypdrift/gibbs.hpp"
#include "hypdrift/groups.hpp"
#include "hypdrift/stats.hpp"
#include "hypdrift/walk.hpp"

namespace hypdrift {

inline constexpr int kReportSchemaVersion = 1;

struct DriftEstimate {
    Estimate value;  // d(o, omega_n o) / n
    Estimate half;   // at n / 2
};

/// Batch mean of d(o, omega_n o) / n over independent paths.
DriftEstimate drift(const WalkMeasure& mu, std::size_t n, std::size_t batch, std::uint64_t seed);

enum class EntropyMethod { exact_convolution, green_drift };

std::string_view to_string(EntropyMethod m);
EntropyMethod parse_entropy_method(std::string_view s);

struct EntropyParams {
    std::size_t n = 6;            // convolution power (exact) or path length (green drift)
    std::size_t batch = 1000;     // green drift
    std::uint64_t seed = 1;       // green drift
    std::size_t cap = 5'000'000;  // exact convolution support cap
};

struct EntropyResult {
    Estimate value;
    Estimate half;                     // green drift at n / 2
    std::vector<double> per_step;      // H(mu^{*k}) / k, k = 1..n (exact)
    std::vector<double> increments;    // H(mu^{*k}) - H(mu^{*(k-1)}) (exact)
    bool monotone_increments = true;   // exact
};

/// exact-convolution: value is the last increment, an upper bound for h.
/// green-drift: batch mean of d_G(e, omega_n) / n with the closed-form Green
/// function; throws std::invalid_argument when it is unavailable.
EntropyResult entropy(const WalkMeasure& mu, EntropyMethod method, const EntropyParams& params);

/// Fraction of paths with the geodesic [o, omega_n o] passing within r of the
/// shadow target (binomial stderr). Requires mean d(o, omega_n o) >= 3 d(o,
/// target) + 20.
Estimate harmonic_shadow_mass(const WalkMeasure& mu, const Shadow& shadow, std::size_t n,
                              std::size_t batch, std::uint64_t seed);

/// Same paths for every shadow.
std::vector<Estimate> harmonic_shadow_masses(const WalkMeasure& mu,
                                             const std::vector<Shadow>& shadows, std::size_t n,
                                             std::size_t batch, std::uint64_t seed);

class PreconditionFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shadow masses of Sh_r(o, g o) for group elements, computed by moving the
/// shadow to Sh_r(g^-1 o, o) and reweighting with the quasi-invariance of
/// each measure. The harmonic side uses a pool of nu-samples omega_N and the
/// closed-form Green function.
class ConformalShadows {
public:
    struct Params {
        double radius = 0.0;
        std::size_t pool = 4000;  // nu samples
        std::size_t horizon = 0;  // N; 0 picks one with mean displacement >= 60
        std::uint64_t seed = 1;
    };
    ConformalShadows(const WalkMeasure& mu, const Potential& F, const GibbsAtoms& atoms,
                     double v_hat, Params params);

    struct Mass {
        double value = 0.0;
        std::size_t hits = 0;  // atoms or samples inside the gate
    };
    Mass gibbs(std::string_view g) const;
    Mass harmonic(std::string_view g) const;
    double radius() const { return params_.radius; }

private:
    struct Sample {
        std::string element;
        ScaledMatrix matrix;
        double log_green;
        double displacement;
    };
    double height(double a, double b, double c) const;
    double displacement_of_product(std::string_view g, const ScaledMatrix& gm,
                                   std::string_view h, const ScaledMatrix& hm) const;

    const WalkMeasure* mu_;
    Potential F_;
    const GibbsAtoms* atoms_;
    double v_hat_;
    Params params_;
    std::optional<ExactGreen> green_;
    std::vector<ScaledMatrix> atom_matrices_;
    std::vector<Sample> pool_;
};

struct ShadowRatioRow {
    std::size_t n = 0;
    std::size_t paths = 0;
    double median_phi = 0, mean_phi = 0;
    double p_ge_05 = 0, p_ge_01 = 0, p_ge_001 = 0;
    Estimate psi;          // mean of psi_n = log phi_n
    Estimate psi_over_n;   // mean of psi_n / n
    double cesaro_mean_phi = 0;  // average of mean_phi over the grid up to n
    Estimate cesaro_psi_over_n;  // average of psi_over_n over the grid up to n (mean stderr)
    std::size_t min_hits = 0;
    bool low_confidence = false;  // some path had fewer than 30 hits
};

struct ShadowRatioTable {
    double radius = 0;
    std::vector<ShadowRatioRow> rows;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// phi_n = kappa(Sh_r(o, omega_n o)) / nu(Sh_r(o, omega_n o)) over `batch` paths
/// for every n in the grid.
ShadowRatioTable shadow_ratio_stats(const ConformalShadows& shadows, const WalkMeasure& mu,
                                    const std::vector<std::size_t>& grid, std::size_t batch,
                                    std::uint64_t seed);

// ------------------------------------------------------------- inequality

enum class Verdict { equality_consistent, strictly_less, inconclusive };
std::string_view to_string(Verdict v);

struct InequalityParams {
    std::size_t n = 10'000;
    std::size_t batch = 1000;
    std::uint64_t seed = 1;
    double ball_radius = 12.0;
    double window_lo = 6.0;
    double window_hi = 12.0;
    double equality_sigmas = 2.0;
    double strict_sigmas = 3.0;
    std::size_t bucket_n = 8;         // exact-convolution bucket check (0 disables)
    double bucket_eps = 0.25;
    std::size_t fake_drift_n = 0;     // 0: same as n
    std::size_t fake_drift_batch = 0; // 0: same as batch
};

struct InequalityReport {
    std::string action, measure, potential;
    Estimate h_green;                  // green drift
    std::optional<Estimate> h_exact;   // last exact-convolution increment
    Estimate ell;
    Estimate ell_half;
    Estimate v_F;
    std::optional<Estimate> v_critical;  // critical exponent (F = 0 comparison)
    Estimate ell_F;
    double gap = 0.0;
    double sigma = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::string failing_component;
    bool guivarch_holds = false;  // h <= l v_F - l_F + 3 sigma
    std::vector<double> bucket_entropies;
    std::string fingerprint;

    nlohmann::json to_json() const;
};

InequalityReport inequality_report(const WalkMeasure& mu, const Potential& F,
                                   const InequalityParams& params);

// ------------------------------------------------------------- deviations

struct DeviationRow {
    std::string element;
    double green_distance;
    double green_stderr;
    double displacement;
    double fake_distance;
    double deviation;  // d_G - v_F d + d_F
};

struct DeviationReport {
    double v_F = 0.0;
    std::vector<DeviationRow> rows;
    double max_abs_deviation = 0.0;
    LinearFit growth;                    // |deviation| against displacement
    std::vector<std::string> witnesses;  // largest |deviation| at the outer half
    bool mc_noise_flag = false;          // Green stderr above 20% of the deviation scale
    double ancona_constant = 0.0;
    double ancona_gate = 0.0;
    std::size_t ancona_triples = 0;
    std::size_t ancona_violations = 0;
    double ancona_max_defect = 0.0;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

struct DeviationParams {
    GreenMethod method = GreenMethod::exact_recursive;
    GreenParams green;
    double gate = -1.0;                  // g2 o within this distance of [o, g3 o]; negative: 0 tree, 1 plane
    std::optional<double> ancona_constant;  // default 2 max |deviation| + 1e-9
    std::size_t ancona_targets = 200;
};

/// Rows for the given elements (e.g. a ball or a parabolic orbit).
DeviationReport metric_deviation_report(const WalkMeasure& mu, const Potential& F, double v_F,
                                        const std::vector<std::string>& elements,
                                        const DeviationParams& params = {});

/// Rows for every entry of the ball.
DeviationReport metric_deviation_report(const WalkMeasure& mu, const Potential& F, double v_F,
                                        const OrbitBall& ball, const DeviationParams& params = {});

struct DeviationTail {
    std::size_t k = 0, n = 0, paths = 0;
    std::vector<double> a;
    std::vector<double> tail;  // P(d(omega_k o, [o, omega_n o]) > a)
    LinearFit fit;             // log tail against a, over positive tails
    bool degenerate = false;
    bool monotone = true;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

DeviationTail deviation_tail(const WalkMeasure& mu, std::size_t k, std::size_t n,
                             const std::vector<double>& a_grid, std::size_t batch,
                             std::uint64_t seed);

struct GreenDecayRow {
    std::string element;
    int word_norm;
    double green_distance;
    double ratio;
};

struct GreenDecay {
    double band_lo = 0, band_hi = 0;
    double min_ratio = 0, max_ratio = 0;
    LinearFit fit;  // d_G against word norm
    std::vector<GreenDecayRow> rows;
    bool pass = false;

    nlohmann::json to_json() const;
};

/// d_G(e, g) / ||g|| for every g with 1 <= ||g|| <= max_norm, checked against
/// [band_lo, band_hi].
GreenDecay green_decay_check(const WalkMeasure& mu, int max_norm, double band_lo,
                             double band_hi, GreenMethod method, const GreenParams& params = {});

nlohmann::json to_json(const Estimate& e);

}  // namespace hypdrift
