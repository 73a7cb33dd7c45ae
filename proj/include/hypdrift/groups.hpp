#pragma once

// Built-in group actions: the free group F_k on its Cayley tree, a
// two-generator Schottky group and PSL(2,Z) acting on the upper half-plane.
//
// Group elements are handled as canonical strings:
//   free group, Schottky   reduced words over a, b, ... (uppercase = inverse)
//   modular group          the Z/2 * Z/3 normal form over 's' = S,
//                          'r' = R = ST and 'R' = R^2, alternating s and r/R.
// Generator words typed by users (e.g. "stT" for the modular group) are
// parsed to canonical form by GroupAction::element.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypdrift/geometry.hpp"
#include "hypdrift/stats.hpp"

namespace hypdrift {

enum class ActionKind { free_group, schottky, modular };

struct Generator {
    char symbol;
    char inverse_symbol;
    Isometry isometry;
};

class GroupAction {
public:
    static GroupAction free_group(int rank);
    /// Generators a = [[3,0],[0,1/3]] and b = K a K^-1 with K the quarter
    /// turn about i; the four isometric-circle disks are disjoint.
    static GroupAction schottky();
    static GroupAction modular();
    /// "free(k)" / "free2", "schottky", "modular".
    static GroupAction by_name(std::string_view name);

    const std::string& name() const { return name_; }
    ActionKind kind() const { return kind_; }
    Model model() const { return model_; }
    const ModelPoint& basepoint() const { return basepoint_; }
    std::span<const Generator> generators() const { return generators_; }
    bool has_parabolics() const { return kind_ == ActionKind::modular; }
    bool convex_cocompact() const { return kind_ != ActionKind::modular; }
    /// Elements are reduced words in a free basis (free group, Schottky).
    bool free_basis() const { return kind_ != ActionKind::modular; }
    int rank() const { return rank_; }

    /// Canonical form of a word in the generator symbols.
    std::string element(std::string_view generator_word) const;
    std::string multiply(std::string_view g, std::string_view h) const;
    std::string inverse(std::string_view g) const;
    /// g <- g h for canonical g, h.
    void append(std::string& g, std::string_view h) const;

    Isometry isometry(std::string_view g) const;
    /// Matrix of g (plane actions).
    Mat2 matrix(std::string_view g) const;
    ModelPoint orbit_point(std::string_view g) const;
    /// d(o, g o).
    double displacement(std::string_view g) const;

    /// Shortest word length in the generators, computed exactly from the
    /// canonical form (free reduction, or a cut-point recursion on the
    /// Z/2 * Z/3 tree of triangles for the modular group).
    int word_norm(std::string_view g) const;

    /// Breadth-first certificate of the word norm; nullopt if g is not met
    /// before `cap` elements have been visited.
    std::optional<int> word_norm_bfs(std::string_view g, std::size_t cap) const;

    /// Default pruning slack for orbit enumeration (displacement beyond R at
    /// which BFS still expands elements).
    double default_margin() const;

private:
    GroupAction() = default;
    void append_letter(std::string& g, char canonical_letter) const;
    Mat2 letter_matrix(char canonical_letter) const;

    std::string name_;
    ActionKind kind_ = ActionKind::free_group;
    Model model_ = Model::tree;
    int rank_ = 0;
    ModelPoint basepoint_ = ModelPoint::tree("");
    std::vector<Generator> generators_;
};

struct OrbitEntry {
    std::string element;
    double displacement;
    int depth;  // length of the canonical word
};

struct OrbitCertificate {
    double radius = 0.0;
    double margin = 0.0;          // expansion threshold is radius + margin
    int max_depth = 0;            // longest canonical word expanded
    std::size_t visited = 0;      // elements within radius + margin
    bool complete = true;         // false when the cap was hit
    std::string canonical_form;   // dedup key description
};

/// Gamma o ∩ B_R(o), deduplicated by canonical form.
class OrbitBall {
public:
    OrbitBall() = default;
    OrbitBall(std::vector<OrbitEntry> entries, std::vector<Mat2> matrices, OrbitCertificate cert);

    std::span<const OrbitEntry> entries() const { return entries_; }
    const OrbitCertificate& certificate() const { return cert_; }
    double radius() const { return cert_.radius; }
    bool complete() const { return cert_.complete; }
    /// Matrices parallel to entries() for plane actions (empty on the tree).
    std::span<const Mat2> matrices() const { return matrices_; }

    /// |{g : d(o,go) <= r}| for r <= radius().
    std::size_t count_within(double r) const;
    /// Entries with n-1 <= d(o,go) <= n.
    std::vector<std::size_t> shell(int n) const;

    /// CSV with columns word,displacement.
    std::string to_csv() const;

private:
    std::vector<OrbitEntry> entries_;  // sorted by displacement
    std::vector<Mat2> matrices_;
    OrbitCertificate cert_;
};

class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Depth-first enumeration of canonical words, extending only elements with
/// d(o,go) <= R + margin. Canonical forms are unique, so no two entries
/// represent the same element. If `cap` elements have been expanded the
/// partial ball is returned with certificate().complete == false.
OrbitBall orbit_ball(const GroupAction& action, double radius, std::size_t cap = 20'000'000,
                     std::optional<double> margin = std::nullopt);

/// Least-squares slope of log |Gamma o ∩ B_R(o)| over integer R in the window.
Estimate critical_exponent(const OrbitBall& ball, double window_lo, double window_hi);

struct DistortionRow {
    int n;
    int word_norm;
    double displacement;
    double ratio;  // log ||p^n|| / d(o, p^n o)
};

struct DistortionReport {
    std::vector<DistortionRow> rows;
    LinearFit fit;           // log ||p^n|| against d(o, p^n o) over the window
    double liminf_ratio;     // min ratio over the window
    int window_lo, window_hi;
};

/// Rows for n = 1..N and the exponent fit over n in [window_lo, window_hi].
DistortionReport parabolic_distortion_report(const GroupAction& action,
                                             std::string_view parabolic, int n_max,
                                             int window_lo = 8, int window_hi = 60);

}  // namespace hypdrift
