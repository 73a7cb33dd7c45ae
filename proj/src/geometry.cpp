#include "hypdrift/geometry.hpp"

#include <algorithm>
#include <limits>

#include "hypdrift/word.hpp"

namespace hypdrift {

namespace {

using cplx = std::complex<double>;

constexpr double kMinImag = 1e-12;

const double kInf = std::numeric_limits<double>::infinity();

void require_same(Model a, Model b) {
    if (a != b)
        throw ModelMismatch();
}

double acosh_guarded(double x) { return std::acosh(std::max(1.0, x)); }

double plane_dist(cplx z, cplx w) {
    const double num = std::norm(z - w);
    return acosh_guarded(1.0 + num / (2.0 * z.imag() * w.imag()));
}

// Disk coordinate of w after moving x to the origin: Cayley transform of
// A(w) with A(z) = (z - Re x) / Im x.
cplx disk_coord(cplx x, cplx w) {
    const cplx u = (w - x.real()) / x.imag();
    return (u - cplx(0, 1)) / (u + cplx(0, 1));
}

cplx from_disk(cplx x, cplx q) {
    const cplx u = cplx(0, 1) * (1.0 + q) / (1.0 - q);
    return u * x.imag() + x.real();
}

// Unit direction at x (disk chart centred at x) of the boundary point zeta.
cplx disk_direction(cplx x, const BoundaryPoint& zeta) {
    if (zeta.is_infinity())
        return {1.0, 0.0};
    const cplx q = disk_coord(x, cplx(zeta.real(), 0.0));
    return q / std::abs(q);
}

// Hyperboloid coordinates (X0, X1, X2) of p in the chart with x at the
// origin and the direction `dir` along the positive X1 axis.
struct Hyperboloid {
    double x0, x1, x2;
};

Hyperboloid hyperboloid(cplx x, cplx p, cplx dir) {
    const cplx q = disk_coord(x, p) * std::conj(dir);
    const double r2 = std::norm(q);
    const double den = 1.0 - r2;
    return {(1.0 + r2) / den, 2.0 * q.real() / den, 2.0 * q.imag() / den};
}

double tree_dist(const std::string& x, const std::string& y) {
    return static_cast<double>(word::distance(x, y));
}

// Enough letters of a tree boundary point so that Gromov products and
// Busemann functions against points up to `reach` letters stabilise.
std::string resolve(const BoundaryPoint& zeta, std::size_t reach) {
    if (reach > zeta.depth())
        throw ResolutionError("tree boundary point needs " + std::to_string(reach) +
                              " letters but its resolution depth is " +
                              std::to_string(zeta.depth()));
    return zeta.truncate(reach);
}

}  // namespace

std::string_view to_string(Model m) { return m == Model::plane ? "plane" : "tree"; }

// ---------------------------------------------------------------- points

ModelPoint ModelPoint::plane(std::complex<double> z) {
    if (!(z.imag() > kMinImag) || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("plane point requires Im z > 1e-12");
    return ModelPoint(z);
}

ModelPoint ModelPoint::tree(std::string_view w) {
    if (!word::is_reduced(w))
        throw std::invalid_argument("tree point requires a freely reduced word, got '" +
                                    std::string(w) + "'");
    return ModelPoint(std::string(w));
}

std::complex<double> ModelPoint::z() const {
    if (model() != Model::plane)
        throw ModelMismatch();
    return std::get<0>(data_);
}

const std::string& ModelPoint::word() const {
    if (model() != Model::tree)
        throw ModelMismatch();
    return std::get<1>(data_);
}

BoundaryPoint BoundaryPoint::plane(double x) {
    if (!std::isfinite(x))
        throw std::invalid_argument("use plane_infinity() for the point at infinity");
    BoundaryPoint b;
    b.model_ = Model::plane;
    b.x_ = x;
    return b;
}

BoundaryPoint BoundaryPoint::plane_infinity() {
    BoundaryPoint b;
    b.model_ = Model::plane;
    b.infinite_ = true;
    b.x_ = kInf;
    return b;
}

BoundaryPoint BoundaryPoint::tree(std::string_view prefix, std::string_view period,
                                  std::size_t depth) {
    if (period.empty())
        throw std::invalid_argument("tree boundary point needs a non-empty period");
    if (depth < 1)
        throw std::invalid_argument("tree boundary point needs resolution depth >= 1");
    std::string probe(prefix);
    probe += period;
    probe += period;
    if (!word::is_reduced(probe))
        throw std::invalid_argument("tree boundary word '" + std::string(prefix) + "(" +
                                    std::string(period) + ")^inf' is not reduced");
    BoundaryPoint b;
    b.model_ = Model::tree;
    b.prefix_ = prefix;
    b.period_ = period;
    b.depth_ = depth;
    return b;
}

char BoundaryPoint::letter(std::size_t i) const {
    if (model_ != Model::tree)
        throw ModelMismatch();
    if (i >= depth_)
        throw ResolutionError("letter " + std::to_string(i) + " beyond resolution depth " +
                              std::to_string(depth_));
    if (i < prefix_.size())
        return prefix_[i];
    return period_[(i - prefix_.size()) % period_.size()];
}

std::string BoundaryPoint::truncate(std::size_t n) const {
    std::string out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(letter(i));
    return out;
}

// ------------------------------------------------------------- isometries

Isometry Isometry::mobius(double a, double b, double c, double d) {
    const double det = a * d - b * c;
    if (!(det > 0.0))
        throw std::invalid_argument("Mobius matrix must have positive determinant");
    const double s = 1.0 / std::sqrt(det);
    Mat2 m{a * s, b * s, c * s, d * s};
    bool flip = false;
    const double tr = m.trace();
    if (std::abs(tr) > 1e-12) {
        flip = tr < 0.0;
    } else {
        for (double v : {m.a, m.b, m.c, m.d}) {
            if (std::abs(v) > 1e-12) {
                flip = v < 0.0;
                break;
            }
        }
    }
    if (flip)
        m = {-m.a, -m.b, -m.c, -m.d};
    return Isometry(m);
}

Isometry Isometry::tree(std::string_view w) { return Isometry(word::reduce(w)); }

Isometry Isometry::identity(Model m) {
    return m == Model::plane ? mobius(1, 0, 0, 1) : tree("");
}

const Mat2& Isometry::matrix() const {
    if (model() != Model::plane)
        throw ModelMismatch();
    return std::get<0>(data_);
}

const std::string& Isometry::word() const {
    if (model() != Model::tree)
        throw ModelMismatch();
    return std::get<1>(data_);
}

Isometry Isometry::operator*(const Isometry& h) const {
    require_same(model(), h.model());
    if (model() == Model::plane)
        return mobius(matrix() * h.matrix());
    return Isometry(word::concat(word(), h.word()));
}

Isometry Isometry::inverse() const {
    if (model() == Model::plane) {
        const Mat2& m = matrix();
        return mobius(m.d, -m.b, -m.c, m.a);
    }
    return Isometry(word::inverse(word()));
}

bool Isometry::approx_equal(const Isometry& h, double tol) const {
    if (model() != h.model())
        return false;
    if (model() == Model::tree)
        return word() == h.word();
    const Mat2& p = matrix();
    const Mat2& q = h.matrix();
    const auto close = [tol](const Mat2& x, const Mat2& y) {
        return std::abs(x.a - y.a) <= tol && std::abs(x.b - y.b) <= tol &&
               std::abs(x.c - y.c) <= tol && std::abs(x.d - y.d) <= tol;
    };
    return close(p, q) || close(p, Mat2{-q.a, -q.b, -q.c, -q.d});
}

ModelPoint apply(const Isometry& g, const ModelPoint& x) {
    require_same(g.model(), x.model());
    if (g.model() == Model::tree)
        return ModelPoint::tree(word::concat(g.word(), x.word()));
    const Mat2& m = g.matrix();
    const cplx z = x.z();
    return ModelPoint::plane((m.a * z + m.b) / (m.c * z + m.d));
}

BoundaryPoint apply(const Isometry& g, const BoundaryPoint& zeta) {
    require_same(g.model(), zeta.model());
    if (g.model() == Model::plane) {
        const Mat2& m = g.matrix();
        if (zeta.is_infinity()) {
            if (m.c == 0.0)
                return BoundaryPoint::plane_infinity();
            return BoundaryPoint::plane(m.a / m.c);
        }
        const double x = zeta.real();
        const double den = m.c * x + m.d;
        if (den == 0.0)
            return BoundaryPoint::plane_infinity();
        return BoundaryPoint::plane((m.a * x + m.b) / den);
    }
    // Unroll whole periods past the cancellation zone, reduce, and keep the
    // same periodic continuation.
    const std::string& g_word = g.word();
    std::string unrolled = zeta.prefix();
    while (unrolled.size() < g_word.size() + zeta.period().size() + 1)
        unrolled += zeta.period();
    const std::string image = word::concat(g_word, unrolled);
    const long shift = static_cast<long>(image.size()) - static_cast<long>(unrolled.size());
    const long depth = static_cast<long>(zeta.depth()) + shift;
    if (depth < 1)
        throw ResolutionError("translation exhausts the boundary point's resolution depth");
    return BoundaryPoint::tree(image, zeta.period(), static_cast<std::size_t>(depth));
}

Shadow::Shadow(ModelPoint source, ModelPoint target, double radius)
    : source_(std::move(source)), target_(std::move(target)), radius_(radius) {
    require_same(source_.model(), target_.model());
    if (!(radius_ >= 0.0))
        throw std::invalid_argument("shadow radius must be >= 0");
    if (source_ == target_)
        throw std::invalid_argument("shadow source and target must differ");
}

Shadow apply(const Isometry& g, const Shadow& s) {
    return Shadow(apply(g, s.source()), apply(g, s.target()), s.radius());
}

// ----------------------------------------------------------------- metric

double dist(const ModelPoint& x, const ModelPoint& y) {
    require_same(x.model(), y.model());
    if (x.model() == Model::plane)
        return plane_dist(x.z(), y.z());
    return tree_dist(x.word(), y.word());
}

ModelPoint geodesic_point(const ModelPoint& x, const ModelPoint& y, double t) {
    const double d = dist(x, y);
    const double slack = x.model() == Model::plane ? 1e-12 * (1.0 + d) : 0.0;
    if (!(t >= -slack && t <= d + slack))
        throw std::out_of_range("geodesic_point: t outside [0, d(x,y)]");
    t = std::clamp(t, 0.0, d);
    if (x.model() == Model::tree) {
        if (t != std::floor(t))
            throw std::invalid_argument("geodesic_point: tree parameter must be an integer");
        const std::string& a = x.word();
        const std::string& b = y.word();
        const std::size_t cp = word::common_prefix(a, b);
        const std::size_t up = a.size() - cp;
        const auto steps = static_cast<std::size_t>(t);
        if (steps <= up)
            return ModelPoint::tree(a.substr(0, a.size() - steps));
        return ModelPoint::tree(b.substr(0, cp + (steps - up)));
    }
    if (d == 0.0)
        return x;
    const cplx q = disk_coord(x.z(), y.z());
    const cplx dir = q / std::abs(q);
    const cplx qt = dir * std::tanh(0.5 * t);
    return ModelPoint::plane(from_disk(x.z(), qt));
}

double busemann(const BoundaryPoint& zeta, const ModelPoint& x, const ModelPoint& y) {
    require_same(zeta.model(), x.model());
    require_same(x.model(), y.model());
    if (x.model() == Model::plane) {
        const cplx zx = x.z();
        const cplx zy = y.z();
        if (zeta.is_infinity())
            return std::log(zy.imag()) - std::log(zx.imag());
        const double xi = zeta.real();
        return (std::log(zy.imag()) - std::log(std::norm(zy - xi))) -
               (std::log(zx.imag()) - std::log(std::norm(zx - xi)));
    }
    if (x == y)
        return 0.0;
    const std::size_t reach = std::max(x.word().size(), y.word().size()) + 1;
    const std::string far = resolve(zeta, reach);
    return tree_dist(x.word(), far) - tree_dist(y.word(), far);
}

namespace {

double plane_gromov(const ModelPoint& z, const Endpoint& x, const Endpoint& y) {
    const auto* px = std::get_if<ModelPoint>(&x);
    const auto* py = std::get_if<ModelPoint>(&y);
    if (px && py)
        return 0.5 * (dist(z, *px) + dist(z, *py) - dist(*px, *py));
    if (px || py) {
        const ModelPoint& p = px ? *px : *py;
        const BoundaryPoint& b = px ? std::get<BoundaryPoint>(y) : std::get<BoundaryPoint>(x);
        return std::max(0.0, 0.5 * (dist(z, p) + busemann(b, z, p)));
    }
    const BoundaryPoint& bx = std::get<BoundaryPoint>(x);
    const BoundaryPoint& by = std::get<BoundaryPoint>(y);
    if (bx == by)
        throw ResolutionError("Gromov product of a boundary point with itself is infinite");
    const cplx u = disk_direction(z.z(), bx);
    const cplx v = disk_direction(z.z(), by);
    // For CAT(-1) rays from z at angle theta, e^{-rho} = sin(theta / 2).
    const double half_chord = 0.5 * std::abs(u - v);
    return -std::log(std::min(1.0, half_chord));
}

double tree_gromov(const ModelPoint& z, const Endpoint& x, const Endpoint& y) {
    const std::string& zw = z.word();
    const std::string zinv = word::inverse(zw);
    const auto* px = std::get_if<ModelPoint>(&x);
    const auto* py = std::get_if<ModelPoint>(&y);
    if (px && py)
        return 0.5 * (dist(z, *px) + dist(z, *py) - dist(*px, *py));
    if (px || py) {
        const ModelPoint& p = px ? *px : *py;
        const BoundaryPoint& b = px ? std::get<BoundaryPoint>(y) : std::get<BoundaryPoint>(x);
        const std::string u = word::concat(zinv, p.word());
        const std::string far = resolve(b, zw.size() + p.word().size() + 1);
        const std::string v = word::concat(zinv, far);
        return static_cast<double>(word::common_prefix(u, v));
    }
    const BoundaryPoint& bx = std::get<BoundaryPoint>(x);
    const BoundaryPoint& by = std::get<BoundaryPoint>(y);
    const std::size_t n = std::min(bx.depth(), by.depth());
    const std::string u = word::concat(zinv, bx.truncate(n));
    const std::string v = word::concat(zinv, by.truncate(n));
    const std::size_t cp = word::common_prefix(u, v);
    if (cp >= std::min(u.size(), v.size()))
        throw ResolutionError("boundary points agree up to their resolution depth");
    return static_cast<double>(cp);
}

}  // namespace

double gromov_product(const ModelPoint& z, const Endpoint& x, const Endpoint& y) {
    const auto model_of = [](const Endpoint& e) {
        return std::visit([](const auto& p) { return p.model(); }, e);
    };
    require_same(z.model(), model_of(x));
    require_same(z.model(), model_of(y));
    return z.model() == Model::plane ? plane_gromov(z, x, y) : tree_gromov(z, x, y);
}

double dist_to_ray(const ModelPoint& p, const ModelPoint& x, const BoundaryPoint& zeta) {
    require_same(p.model(), x.model());
    require_same(p.model(), zeta.model());
    if (p.model() == Model::tree)
        return gromov_product(p, x, zeta);
    const Hyperboloid h = hyperboloid(x.z(), p.z(), disk_direction(x.z(), zeta));
    if (h.x1 <= 0.0)
        return dist(p, x);
    return std::asinh(std::abs(h.x2));
}

double dist_to_segment(const ModelPoint& p, const ModelPoint& x, const ModelPoint& y) {
    require_same(p.model(), x.model());
    require_same(p.model(), y.model());
    if (p.model() == Model::tree)
        return gromov_product(p, x, y);
    if (x == y)
        return dist(p, x);
    return plane_segment_height(dist(p, x), dist(p, y), dist(x, y));
}

ModelPoint ray_point(const ModelPoint& x, const BoundaryPoint& zeta, double t) {
    require_same(x.model(), zeta.model());
    if (!(t >= 0.0))
        throw std::out_of_range("ray_point: t must be >= 0");
    if (x.model() == Model::tree) {
        if (t != std::floor(t))
            throw std::invalid_argument("ray_point: tree parameter must be an integer");
        const auto steps = static_cast<std::size_t>(t);
        const std::string& w = x.word();
        const std::string far = resolve(zeta, w.size() + steps + 1);
        const std::size_t cp = word::common_prefix(w, far);
        const std::size_t up = w.size() - cp;
        if (steps <= up)
            return ModelPoint::tree(w.substr(0, w.size() - steps));
        return ModelPoint::tree(far.substr(0, cp + (steps - up)));
    }
    return ModelPoint::plane(chart_point(x.z(), disk_direction(x.z(), zeta), t));
}

cplx chart_direction(cplx x, cplx y) {
    const cplx q = disk_coord(x, y);
    const double r = std::abs(q);
    return r > 0.0 ? q / r : cplx(1.0, 0.0);
}

cplx chart_point(cplx x, cplx dir, double t) {
    // 1 -/+ dir * tanh(t/2) without cancellation for long rays.
    const double tau = std::tanh(0.5 * t);
    const double rest = 2.0 / (std::exp(t) + 1.0);
    const double cx = dir.real(), cy = dir.imag();
    const double one_minus = cx > 0.0 ? cy * cy / (1.0 + cx) : 1.0 - cx;
    const double one_plus = cx < 0.0 ? cy * cy / (1.0 - cx) : 1.0 + cx;
    const cplx num(rest + tau * one_plus, tau * cy);
    const cplx den(rest + tau * one_minus, -tau * cy);
    const cplx u = cplx(0, 1) * num / den;
    return u * x.imag() + x.real();
}

bool in_shadow(const Shadow& s, const BoundaryPoint& zeta) {
    require_same(s.model(), zeta.model());
    return dist_to_ray(s.target(), s.source(), zeta) <= s.radius();
}

bool horoball_contains(const ModelPoint& x, const BoundaryPoint& zeta, double t,
                       const ModelPoint& z) {
    return busemann(zeta, z, x) < -t;
}

// ------------------------------------------------------------- stability

double log_cosh(double x) {
    x = std::abs(x);
    return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
}

double log_sinh(double x) {
    if (x <= 0.0)
        return -std::numeric_limits<double>::infinity();
    if (x < 1.0)
        return std::log(std::sinh(x));
    return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0);
}

double plane_segment_height(double a, double b, double c) {
    if (c <= 0.0)
        return a;
    // Obtuse angle at p or q: the closest point is that endpoint.
    if (log_cosh(b) >= log_cosh(a) + log_cosh(c))
        return a;
    if (log_cosh(a) >= log_cosh(b) + log_cosh(c))
        return b;
    // sinh h = 2 sqrt(sinh s sinh(s-a) sinh(s-b) sinh(s-c)) / sinh c.
    const double s = 0.5 * (a + b + c);
    const double sa = s - a, sb = s - b, sc = s - c;
    if (sa <= 0.0 || sb <= 0.0 || sc <= 0.0)
        return 0.0;
    const double log_sinh_h =
        std::log(2.0) + 0.5 * (log_sinh(s) + log_sinh(sa) + log_sinh(sb) + log_sinh(sc)) -
        log_sinh(c);
    if (log_sinh_h > 30.0)
        return log_sinh_h + std::log(2.0);
    return std::asinh(std::exp(log_sinh_h));
}

double displacement_from_i(const Mat2& m) {
    return acosh_guarded(0.5 * (m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d));
}

void ScaledMatrix::renormalize() {
    const double f = std::max({std::abs(m_.a), std::abs(m_.b), std::abs(m_.c), std::abs(m_.d)});
    if (f > 0.0 && (f > 1e8 || f < 1e-8)) {
        m_ = {m_.a / f, m_.b / f, m_.c / f, m_.d / f};
        log_scale_ += std::log(f);
    }
}

std::complex<double> ScaledMatrix::direction_from_i() const {
    // (w - i) / (w + i) for w = M i, with the common factor (c i + d) removed.
    const cplx num(m_.b + m_.c, m_.a - m_.d);
    const cplx den(m_.b - m_.c, m_.a + m_.d);
    const cplx q = num / den;
    const double r = std::abs(q);
    return r > 0.0 ? q / r : cplx(1.0, 0.0);
}

double ScaledMatrix::displacement_from_i() const {
    const double norm2 = m_.a * m_.a + m_.b * m_.b + m_.c * m_.c + m_.d * m_.d;
    const double log_x = std::log(0.5 * norm2) + 2.0 * log_scale_;
    if (log_x < 30.0)
        return acosh_guarded(std::exp(log_x));
    return log_x + std::log(2.0);
}

}  // namespace hypdrift
