#pragma once

// Potentials on unit tangent data, F-ake distances, Gibbs cocycles,
// topological pressure and atomic Patterson-Gibbs densities.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hypdrift/geometry.hpp"
#include "hypdrift/groups.hpp"
#include "hypdrift/stats.hpp"
#include "hypdrift/walk.hpp"

namespace hypdrift {

enum class PotentialKind { zero, constant, plane_bump };

class BumpField;

struct HcConstants {
    double c1 = 1.0;
    double c2 = 0.5;
    double growth_a = 1.5;  // |F(x) - F(y)| <= b a^{d(x,y)}
    double growth_b = 1.0;
};

/// F(z, v) = shift + bump(z) + tilt * (d/dv) bump(z).
///
/// bump(z) = A sum_{p in Gamma o} exp(-d(z, p)^2) is Gamma-invariant, and the
/// tilt term is a derivative along the direction, so its integral along a
/// geodesic from x to y is tilt * (bump(y) - bump(x)). The reflected potential
/// F o iota flips the sign of the tilt.
class Potential {
public:
    static Potential zero();
    static Potential constant(double c);
    /// Declared HC constants c1 = 4, c2 = 1/2 (plane only).
    static Potential plane_bump(const GroupAction& action, double amplitude, double tilt = 0.0,
                                double step = 0.0025);

    PotentialKind kind() const { return kind_; }
    std::string name() const;
    bool plane_only() const { return kind_ == PotentialKind::plane_bump; }
    /// Constant part (the whole potential for zero / constant).
    double shift() const { return shift_; }
    double amplitude() const { return amplitude_; }
    double tilt() const { return tilt_; }
    double step() const { return step_; }
    const HcConstants& hc() const { return hc_; }

    /// F(z, v) for the unit tangent vector at z with Euclidean angle theta.
    double evaluate(const ModelPoint& z, double theta = 0.0) const;
    /// The Gamma-invariant bump part (0 for zero / constant).
    double bump(std::complex<double> z) const;

    /// F + c.
    Potential plus(double c) const;
    /// F o iota.
    Potential reflected() const;
    /// Same potential with quadrature step h.
    Potential with_step(double h) const;
    Potential with_hc(HcConstants hc) const;

private:
    PotentialKind kind_ = PotentialKind::zero;
    double shift_ = 0.0;
    double amplitude_ = 0.0;
    double tilt_ = 0.0;
    double step_ = 0.0025;
    HcConstants hc_;
    std::shared_ptr<const BumpField> field_;
};

/// d_F(x, y) = integral of F along [x, y]; composite midpoint rule with the
/// potential's step on the plane, exact for constant potentials.
double fake_distance(const Potential& F, const ModelPoint& x, const ModelPoint& y);

/// d_F(o, g o) for a plane orbit point given by a (log-scaled) matrix. Throws
/// std::domain_error beyond displacement 68, where chart points lose precision.
double fake_distance_orbit(const Potential& F, const ScaledMatrix& g);

/// d_F(o, g o) for a group element.
double fake_distance_orbit(const Potential& F, const GroupAction& action, std::string_view g);

struct HcReport {
    std::size_t samples = 0;
    double max_ratio_a = 0.0;          // clause (a): observed / bound
    double max_ratio_corollary = 0.0;  // |d_F(x,z) - d_F(y,z)| / ((c1 + max|F|)(d(x,y) + 1))
    double max_ratio_growth = 0.0;     // |F(x) - F(y)| / (b a^{d(x,y)})
    bool pass = false;
};

/// Samples quadruples (x, y, x', y') with d(x,x'), d(y,y') <= 1 and triples
/// (x, y, z) near the basepoint; ball maxima of |F| are estimated by sampling.
HcReport hc_validate(const Potential& F, std::size_t samples, std::uint64_t seed,
                     double max_separation = 4.0);

/// beta^F_zeta(x, y) ~ d_F(x, z_T) - d_F(y, z_T), z_T at distance T from x
/// on [x, zeta). stderr_ holds |value(T) - value(T/2)|.
struct GibbsCocycle {
    Estimate value;
    bool converging = true;  // the T/2 -> T change is below the T/4 -> T/2 change
};
GibbsCocycle gibbs_cocycle(const Potential& F, const BoundaryPoint& zeta, const ModelPoint& x,
                           const ModelPoint& y, double horizon = 30.0);

struct PressureFit {
    Estimate value;
    std::vector<int> shells;          // n in the window
    std::vector<double> log_sums;     // log sum_{g in S_n} e^{d_F(o,go)}
};

/// Least-squares slope of log sum_{S_n} e^{d_F(o,go)} over integer n in the
/// window; S_n = {n-1 <= d(o,go) <= n}.
PressureFit pressure(const OrbitBall& ball, const GroupAction& action, const Potential& F,
                     double window_lo, double window_hi);

/// Fake distances d_F(o, g o) for every ball entry, in entry order.
std::vector<double> fake_distances(const OrbitBall& ball, const GroupAction& action,
                                   const Potential& F);

struct GibbsAtom {
    std::string element;
    double displacement;
    double fake_distance;
    double weight;           // e^{d_F - s d}
    double normalized_mass;  // weight / Q
};

struct GibbsAtoms {
    double s = 0.0;
    double pressure = 0.0;       // v_F estimate used for the tail check
    double normalization = 0.0;  // Q(s) over the ball
    double tail_bound = 0.0;     // estimated mass beyond the ball, relative to Q
    double radius = 0.0;
    std::shared_ptr<const GroupAction> action;
    std::vector<GibbsAtom> atoms;
    std::vector<Mat2> matrices;  // plane actions

    std::string to_csv() const;
};

/// Atoms with weights e^{d_F(o,go) - s d(o,go)}. Requires s >= v_F + 0.02 and a
/// relative tail bound sum_{n > R} (last shell sum) e^{(v_F - s)(n - R)} / Q at
/// most max_tail.
/// Without v_hat the pressure is fitted on [R/2, R].
GibbsAtoms patterson_atoms(const OrbitBall& ball, std::shared_ptr<const GroupAction> action,
                           const Potential& F, double s, std::optional<double> v_hat = {},
                           double max_tail = 0.01);

class TailBoundExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Normalised weight of atoms h o whose geodesic [o, h o] passes within r of
/// the shadow target (prefix test on the tree).
double gibbs_shadow_mass(const GibbsAtoms& atoms, const Shadow& shadow);

struct FakeDrift {
    Estimate value;             // d_F(o, omega_n o) / n
    Estimate half;              // same at n / 2
    std::vector<double> tail_t; // Kingman diagnostic thresholds
    std::vector<double> tail_p; // P(|beta^F - d_F| > t) at those thresholds
};

/// Batch mean of d_F(o, omega_n o) / n. The diagnostic compares d_F(o, omega_n o)
/// with the Gibbs cocycle proxy d_F(o, omega_m o) - d_F(omega_n o, omega_m o),
/// m = n + n/4.
FakeDrift fake_drift(const Potential& F, const WalkMeasure& mu, std::size_t n, std::size_t batch,
                     std::uint64_t seed);

}  // namespace hypdrift
