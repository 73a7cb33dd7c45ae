#pragma once

// Closed-form kernel for the two model spaces: the upper half-plane H^2 and
// the Cayley tree of a free group. All objects are immutable values.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace hypdrift {

enum class Model { plane, tree };

std::string_view to_string(Model m);

class ModelMismatch : public std::invalid_argument {
public:
    ModelMismatch() : std::invalid_argument("geometry: arguments live in different models") {}
};

/// Raised when a tree boundary point is asked for letters beyond its depth,
/// or a Gromov product of two boundary points cannot be resolved.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thin-triangle constant used as the tolerance for limit-by-truncation
/// statements: log(1 + sqrt 2) on the plane, 0 on the tree.
inline constexpr double kPlaneDelta = 0.88137358701954302523;

inline double hyperbolicity_constant(Model m) {
    return m == Model::plane ? kPlaneDelta : 0.0;
}

class ModelPoint {
public:
    /// Requires Im z > 1e-12.
    static ModelPoint plane(std::complex<double> z);
    static ModelPoint plane(double re, double im) { return plane({re, im}); }
    /// Requires a freely reduced word.
    static ModelPoint tree(std::string_view word);

    Model model() const { return data_.index() == 0 ? Model::plane : Model::tree; }
    std::complex<double> z() const;
    const std::string& word() const;

    bool operator==(const ModelPoint&) const = default;

private:
    explicit ModelPoint(std::variant<std::complex<double>, std::string> d) : data_(std::move(d)) {}
    std::variant<std::complex<double>, std::string> data_;
};

/// Point of the Gromov boundary. On the plane: a real number or infinity.
/// On the tree: an infinite reduced word written as prefix · period^∞,
/// of which only the first `depth` letters may be read.
class BoundaryPoint {
public:
    static BoundaryPoint plane(double x);
    static BoundaryPoint plane_infinity();
    static BoundaryPoint tree(std::string_view prefix, std::string_view period, std::size_t depth);

    Model model() const { return model_; }
    bool is_infinity() const { return infinite_; }
    double real() const { return x_; }
    const std::string& prefix() const { return prefix_; }
    const std::string& period() const { return period_; }
    std::size_t depth() const { return depth_; }

    /// Letter i of the infinite word (tree only); throws past the depth.
    char letter(std::size_t i) const;
    /// First n letters (tree only); throws if n > depth.
    std::string truncate(std::size_t n) const;

    bool operator==(const BoundaryPoint&) const = default;

private:
    BoundaryPoint() = default;
    Model model_ = Model::plane;
    bool infinite_ = false;
    double x_ = 0.0;
    std::string prefix_;
    std::string period_;
    std::size_t depth_ = 0;
};

struct Mat2 {
    double a = 1, b = 0, c = 0, d = 1;
    double det() const { return a * d - b * c; }
    double trace() const { return a + d; }
    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
};

/// Orientation-preserving isometry: a projective SL(2,R) matrix on the plane
/// (stored with det 1 and a canonical sign), a reduced word on the tree.
class Isometry {
public:
    static Isometry mobius(double a, double b, double c, double d);
    static Isometry mobius(const Mat2& m) { return mobius(m.a, m.b, m.c, m.d); }
    static Isometry tree(std::string_view word);
    static Isometry identity(Model m);

    Model model() const { return data_.index() == 0 ? Model::plane : Model::tree; }
    const Mat2& matrix() const;
    const std::string& word() const;

    /// (g * h)(x) = g(h(x)).
    Isometry operator*(const Isometry& h) const;
    Isometry inverse() const;

    /// Projective matrix equality within tol, exact word equality on the tree.
    bool approx_equal(const Isometry& h, double tol = 1e-7) const;

private:
    explicit Isometry(std::variant<Mat2, std::string> d) : data_(std::move(d)) {}
    std::variant<Mat2, std::string> data_;
};

ModelPoint apply(const Isometry& g, const ModelPoint& x);
BoundaryPoint apply(const Isometry& g, const BoundaryPoint& zeta);

/// Sh_r(source, target): boundary points whose geodesic ray from the source
/// passes within `radius` of the target.
class Shadow {
public:
    Shadow(ModelPoint source, ModelPoint target, double radius);

    const ModelPoint& source() const { return source_; }
    const ModelPoint& target() const { return target_; }
    double radius() const { return radius_; }
    Model model() const { return source_.model(); }

private:
    ModelPoint source_;
    ModelPoint target_;
    double radius_;
};

Shadow apply(const Isometry& g, const Shadow& s);

using Endpoint = std::variant<ModelPoint, BoundaryPoint>;

double dist(const ModelPoint& x, const ModelPoint& y);

/// Point at distance t from x on [x, y]; t must lie in [0, dist(x, y)]
/// (tree: t must be an integer).
ModelPoint geodesic_point(const ModelPoint& x, const ModelPoint& y, double t);

/// beta_zeta(x, y) = lim_{z -> zeta} d(x, z) - d(y, z).
double busemann(const BoundaryPoint& zeta, const ModelPoint& x, const ModelPoint& y);

/// rho_z(x, y) = (d(z,x) + d(z,y) - d(x,y)) / 2 with its boundary extension.
double gromov_product(const ModelPoint& z, const Endpoint& x, const Endpoint& y);

bool in_shadow(const Shadow& s, const BoundaryPoint& zeta);

/// z lies in the open horoball {z : beta_zeta(z, x) < -t}.
bool horoball_contains(const ModelPoint& x, const BoundaryPoint& zeta, double t,
                       const ModelPoint& z);

/// Point at distance t >= 0 from x on the ray [x, zeta) (tree: integer t).
ModelPoint ray_point(const ModelPoint& x, const BoundaryPoint& zeta, double t);

/// Plane chart helpers: the unit direction at x of the geodesic towards y in
/// the disk chart centred at x, and the point at distance t from x in a
/// given chart direction.
std::complex<double> chart_direction(std::complex<double> x, std::complex<double> y);
std::complex<double> chart_point(std::complex<double> x, std::complex<double> dir, double t);

/// min over the segment [x, y] of the distance to p.
double dist_to_segment(const ModelPoint& p, const ModelPoint& x, const ModelPoint& y);

/// min over the ray [x, zeta) of the distance to p.
double dist_to_ray(const ModelPoint& p, const ModelPoint& x, const BoundaryPoint& zeta);

/// Distance from vertex o to the opposite side [p, q] of a plane geodesic
/// triangle given a = d(o,p), b = d(o,q), c = d(p,q). Stable for sides in
/// the thousands, where point coordinates are no longer representable.
double plane_segment_height(double a, double b, double c);

/// Tree analogue: the Gromov product (a + b - c) / 2.
inline double tree_segment_height(double a, double b, double c) { return 0.5 * (a + b - c); }

/// d(i, g i) for a det-1 matrix.
double displacement_from_i(const Mat2& m);

/// log cosh and log sinh without overflow.
double log_cosh(double x);
double log_sinh(double x);

/// Product of many SL(2,R) matrices kept as exp(log_scale) * m with |m| ~ 1,
/// so that displacements in the thousands stay finite.
class ScaledMatrix {
public:
    ScaledMatrix() = default;
    explicit ScaledMatrix(const Mat2& m, double log_scale = 0.0) : m_(m), log_scale_(log_scale) {
        renormalize();
    }

    void right_multiply(const Mat2& g) {
        m_ = m_ * g;
        renormalize();
    }
    const Mat2& direction() const { return m_; }
    double log_scale() const { return log_scale_; }
    /// Product with another scaled matrix.
    ScaledMatrix operator*(const ScaledMatrix& o) const {
        return ScaledMatrix(m_ * o.m_, log_scale_ + o.log_scale_);
    }
    /// Chart direction at i of the geodesic towards M i; scale free.
    std::complex<double> direction_from_i() const;
    /// d(i, M i) where M = exp(log_scale) * direction has det 1.
    double displacement_from_i() const;

private:
    void renormalize();
    Mat2 m_{};
    double log_scale_ = 0.0;
};

}  // namespace hypdrift
