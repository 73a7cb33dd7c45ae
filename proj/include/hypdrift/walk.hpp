#pragma once

// Random walks on the built-in groups: step measures, seeded sample paths,
// exact convolution powers and Green functions.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hypdrift/geometry.hpp"
#include "hypdrift/groups.hpp"
#include "hypdrift/stats.hpp"

namespace hypdrift {

struct MomentProfile {
    double c2 = 0, c4 = 0, c8 = 0;  // sum_g c^||g|| mu(g)
};

struct Atom {
    std::string element;  // canonical form
    double probability;
};

class WalkMeasure {
public:
    const GroupAction& action() const { return *action_; }
    std::shared_ptr<const GroupAction> action_ptr() const { return action_; }
    const std::vector<Atom>& support() const { return support_; }
    bool symmetric() const { return symmetric_; }
    const MomentProfile& moments() const { return moments_; }
    /// Support inside the generators and their inverses.
    bool nearest_neighbour() const { return nearest_neighbour_; }

    /// Index of the atom selected by a uniform u in [0, 1).
    std::size_t draw(double u) const;
    /// Matrix of atom i (plane actions).
    const Mat2& matrix(std::size_t i) const { return matrices_[i]; }
    /// mu(g) for a canonical element, 0 off the support.
    double probability(std::string_view g) const;

private:
    friend WalkMeasure make_measure(std::shared_ptr<const GroupAction>,
                                    const std::vector<std::pair<std::string, double>>&);
    friend WalkMeasure reflect(const WalkMeasure&);
    void finalize();

    std::shared_ptr<const GroupAction> action_;
    std::vector<Atom> support_;
    std::vector<double> cumulative_;
    std::vector<Mat2> matrices_;
    bool symmetric_ = false;
    bool nearest_neighbour_ = false;
    MomentProfile moments_;
};

/// Weights are normalised; words are generator words (e.g. "a", "A", "t").
/// Throws std::invalid_argument for nonpositive weights, a single-element
/// support, or a support that does not reach every generator and inverse as a
/// product of at most 6 atoms.
WalkMeasure make_measure(std::shared_ptr<const GroupAction> action,
                         const std::vector<std::pair<std::string, double>>& spec);
WalkMeasure make_measure(const GroupAction& action,
                         const std::vector<std::pair<std::string, double>>& spec);

/// Uniform measure on the generators (with inverses) of the action.
WalkMeasure uniform_measure(const GroupAction& action);

/// mu_check(g) = mu(g^-1).
WalkMeasure reflect(const WalkMeasure& mu);

/// Position omega_k = g_1 ... g_k of a walk, as a canonical word and, on the
/// plane, a log-scaled matrix.
class PathTracker {
public:
    /// Without `track_matrix` only the canonical word is maintained.
    explicit PathTracker(const WalkMeasure& mu, bool track_matrix = true)
        : mu_(&mu), track_matrix_(track_matrix) {}
    void step(std::size_t atom);
    const std::string& element() const { return word_; }
    /// d(o, omega_k o).
    double displacement() const;
    std::size_t steps() const { return steps_; }

private:
    const WalkMeasure* mu_;
    bool track_matrix_;
    std::string word_;
    ScaledMatrix m_;
    std::size_t steps_ = 0;
};

/// Increments of one path, stored as atom indices.
struct SamplePath {
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> increments;

    std::size_t length() const { return increments.size(); }
    /// omega_k as a canonical word (replayed from the increments).
    std::string position(const WalkMeasure& mu, std::size_t k) const;
};

/// Seed of path i in a batch: derive_seed(seed, i).
std::uint64_t path_seed(std::uint64_t seed, std::size_t i);

/// Increments of path i, reproducible on their own.
SamplePath sample_path(const WalkMeasure& mu, std::size_t n, std::uint64_t seed, std::size_t i);

std::vector<SamplePath> sample_paths(const WalkMeasure& mu, std::size_t n, std::size_t batch,
                                     std::uint64_t seed);

/// One JSON object per line: {"seed":..,"increments":["a","B",...]}.
std::string paths_to_jsonl(const WalkMeasure& mu, const std::vector<SamplePath>& paths);

/// Exact mu^{*n} with canonical-form dedup, sorted by element.
std::vector<Atom> convolution_power(const WalkMeasure& mu, std::size_t n,
                                    std::size_t cap = 5'000'000);

/// Shannon entropy -sum p log p.
double shannon_entropy(const std::vector<Atom>& dist);

// ------------------------------------------------------------- Green

enum class GreenMethod { exact_recursive, truncated_convolution, monte_carlo };

std::string_view to_string(GreenMethod m);
GreenMethod parse_green_method(std::string_view s);

struct GreenParams {
    std::size_t horizon = 0;        // 0: 40 + 10 ||g|| (truncated), 200 (monte carlo)
    std::size_t paths = 200'000;    // monte carlo
    std::uint64_t seed = 1;         // monte carlo
    std::size_t cap = 2'000'000;    // support cap for generic convolution
    std::size_t spatial_slack = 16; // generic convolution keeps |w| <= |g| + slack
};

struct GreenValue : Estimate {
    double truncation_bound = 0.0;  // tail bound (truncated convolution)
};

class HorizonTooSmall : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Closed-form Green function for the measures where it is available:
/// nearest-neighbour measures on a free basis (free group, Schottky) via
/// first-passage generating functions, and measures supported on {S, T, T^-1}
/// in PSL(2,Z) via transfer across the tree of triangles. Values are kept in
/// log form so that elements of length in the thousands stay finite.
class ExactGreen {
public:
    /// nullopt when the measure is outside the supported class.
    static std::optional<ExactGreen> make(const WalkMeasure& mu);

    double log_green(std::string_view g) const;  // log G(e, g)
    double green(std::string_view g) const { return std::exp(log_green(g)); }
    double log_green_identity() const { return log_gee_; }
    /// d_G(e, g) = -log(G(e,g) / G(e,e)).
    double green_distance(std::string_view g) const { return log_gee_ - log_green(g); }

private:
    bool modular_ = false;
    double log_gee_ = 0.0;
    // free basis: hitting probability of each letter
    std::vector<std::pair<char, double>> log_first_passage_;
    // modular transfer data
    double phi_[3][2] = {};
    double gloc_[3][3] = {};
};

/// G(e, g) by the chosen method.
GreenValue green_function(const WalkMeasure& mu, std::string_view g, GreenMethod method,
                          const GreenParams& params = {});

/// Monte-Carlo expected visit counts to each target over the same paths.
std::vector<GreenValue> green_function_mc(const WalkMeasure& mu,
                                          const std::vector<std::string>& targets,
                                          std::size_t paths, std::size_t horizon,
                                          std::uint64_t seed);

/// d_G(e, g) = -log(G(e,g)/G(e,e)) with delta-method stderr.
Estimate green_metric(const WalkMeasure& mu, std::string_view g, GreenMethod method,
                      const GreenParams& params = {});

struct GreenBusemann {
    Estimate value;
    std::vector<double> differences;  // d_G(g, g_n) - d_G(e, g_n) along the approach
    std::vector<double> increments;   // successive |differences| changes
    bool cauchy = true;               // increments nonincreasing
};

/// beta^G_zeta(g, e) estimated along the approach sequence g_n -> zeta.
GreenBusemann green_busemann(const WalkMeasure& mu, std::string_view g,
                             const BoundaryPoint& zeta, const std::vector<std::string>& approach,
                             GreenMethod method, const GreenParams& params = {});

struct GreenRow {
    std::string element;
    double displacement;
    GreenValue value;
};

/// CSV with columns element,displacement,green_value,stderr,method.
std::string green_table_csv(const std::vector<GreenRow>& rows);

}  // namespace hypdrift
