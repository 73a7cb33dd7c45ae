#include "hypdrift/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

namespace hypdrift {

using cplx = std::complex<double>;

namespace {

constexpr double kReach = 4.0;   // bump vanishes beyond this distance from the orbit
constexpr double kCutoff = 4.0;  // kernel exp(-d^2) - exp(-kCutoff^2), zero beyond
const double kFloor = std::exp(-kCutoff * kCutoff);
constexpr double kMaxOrbitDisplacement = 68.0;
const cplx kI(0.0, 1.0);

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double plane_distance(cplx x, cplx y) {
    return 2.0 * std::asinh(0.5 * std::abs(x - y) / std::sqrt(x.imag() * y.imag()));
}

cplx unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Unit direction at x (disk chart centred at x) of a plane boundary point.
cplx boundary_direction(cplx x, const BoundaryPoint& zeta) {
    if (zeta.is_infinity())
        return {1.0, 0.0};
    const cplx u = (zeta.real() - x.real()) / x.imag();
    const cplx q = (u - kI) / (u + kI);
    return q / std::abs(q);
}

}  // namespace

// Orbit points of i within 2 * kReach, bucketed by distance from i and sorted by
// chart angle, plus the reduction into a fundamental domain whose points are
// no closer to any other orbit point than to i.
class BumpField {
public:
    explicit BumpField(const GroupAction& action) : kind_(action.kind()) {
        const OrbitBall ball = orbit_ball(action, kReach + kCutoff + 0.01);
        shells_.resize(static_cast<std::size_t>(kReach + kCutoff) + 1);
        for (const auto& e : ball.entries()) {
            // PSL(2,Z) fixes i by S, so g and gS give the same orbit point.
            if (kind_ == ActionKind::modular && action.multiply(e.element, "s") < e.element)
                continue;
            const cplx z = action.orbit_point(e.element).z();
            const auto k = static_cast<std::size_t>(e.displacement);
            if (k >= shells_.size())
                continue;
            const cplx w = (z - kI) / (z + kI);
            shells_[k].push_back({std::abs(w) > 0.0 ? std::arg(w) : 0.0, z, 1.0 / z.imag()});
        }
        for (std::size_t k = 0; k < shells_.size(); ++k)
            for (int j = 0; j <= 4; ++j) {
                const double r = std::max(1e-9, static_cast<double>(k) + 0.25 * j);
                cosh_.push_back(std::cosh(r));
                sinh_.push_back(std::sinh(r));
            }
        for (auto& s : shells_)
            std::sort(s.begin(), s.end(),
                      [](const Site& a, const Site& b) { return a.angle < b.angle; });
    }

    double value(cplx z) const {
        const cplx zr = reduce(z);
        const double r0 = plane_distance(kI, zr);
        if (!(r0 <= kReach))
            return 0.0;
        const cplx w = (zr - kI) / (zr + kI);
        const double theta0 = std::abs(w) > 0.0 ? std::arg(w) : 0.0;
        const double ch0 = std::cosh(r0), sh0 = std::sinh(r0);
        const double inv_im = 1.0 / (2.0 * zr.imag());
        const double x_cut = std::cosh(kCutoff) - 1.0;
        double sum = 0.0;
        const auto kmin = static_cast<std::size_t>(std::max(0.0, std::floor(r0 - kCutoff)));
        const auto kmax = std::min(shells_.size() - 1,
                                   static_cast<std::size_t>(std::floor(r0 + kCutoff)));
        auto add = [&](const Site& s) {
            // cosh d = 1 + X
            const double X = std::norm(zr - s.z) * inv_im * s.inv_im;
            if (X < x_cut) {
                const double d = std::log1p(X + std::sqrt(X * (X + 2.0)));
                sum += std::exp(-d * d) - kFloor;
            }
        };
        for (std::size_t k = kmin; k <= kmax; ++k) {
            const auto& shell = shells_[k];
            bool whole = r0 < 1e-9;
            double window = 0.0;
            if (!whole) {
                double c = 1.0;
                for (int j = 0; j <= 4; ++j)
                    c = std::min(c, (cosh_[k * 5 + j] * ch0 - x_cut - 1.0) / (sinh_[k * 5 + j] * sh0));
                window = std::acos(std::clamp(c, -1.0, 1.0)) + 0.02;
                whole = window >= std::numbers::pi;
            }
            if (whole) {
                for (const auto& s : shell)
                    add(s);
                continue;
            }
            auto scan = [&](double lo, double hi) {
                auto it = std::lower_bound(shell.begin(), shell.end(), lo,
                                           [](const Site& s, double v) { return s.angle < v; });
                for (; it != shell.end() && it->angle <= hi; ++it)
                    add(*it);
            };
            const double lo = theta0 - window, hi = theta0 + window;
            const double two_pi = 2.0 * std::numbers::pi;
            if (lo < -std::numbers::pi) {
                scan(-std::numbers::pi, hi);
                scan(lo + two_pi, std::numbers::pi);
            } else if (hi > std::numbers::pi) {
                scan(lo, std::numbers::pi);
                scan(-std::numbers::pi, hi - two_pi);
            } else {
                scan(lo, hi);
            }
        }
        return sum;
    }

private:
    struct Site {
        double angle;
        cplx z;
        double inv_im;
    };

    cplx reduce(cplx z) const {
        if (kind_ == ActionKind::modular) {
            for (int it = 0; it < 10000; ++it) {
                z -= std::round(z.real());
                if (std::norm(z) < 1.0 - 1e-14)
                    z = -1.0 / z;
                else
                    break;
            }
            return z;
        }
        for (int it = 0; it < 10000; ++it) {
            const double m = std::abs(z);
            if (m > 3.0)
                z /= 9.0;
            else if (m < 1.0 / 3.0)
                z *= 9.0;
            else if (std::abs(z + 1.25) < 0.75)
                z = (5.0 * z + 4.0) / (4.0 * z + 5.0);
            else if (std::abs(z - 1.25) < 0.75)
                z = (5.0 * z - 4.0) / (5.0 - 4.0 * z);
            else
                break;
        }
        return z;
    }

    ActionKind kind_;
    std::vector<double> cosh_, sinh_;  // at r = k + j/4, index 5k + j
    std::vector<std::vector<Site>> shells_;  // shell k: k <= d(i, p) < k + 1
};

namespace {

std::shared_ptr<const BumpField> bump_field(const GroupAction& action) {
    static std::mutex mutex;
    static std::map<std::string, std::shared_ptr<const BumpField>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[action.name()];
    if (!slot)
        slot = std::make_shared<const BumpField>(action);
    return slot;
}

// Integral of the bump part along [x, y] by the composite midpoint rule; each
// sample is taken in the chart of the nearer endpoint.
double bump_integral(const Potential& F, cplx x, cplx y, double d) {
    if (!(d > 0.0))
        return 0.0;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(d / F.step())));
    const double h = d / static_cast<double>(n);
    const cplx dx = chart_direction(x, y);
    const cplx dy = chart_direction(y, x);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * h;
        sum += F.bump(t <= 0.5 * d ? chart_point(x, dx, t) : chart_point(y, dy, d - t));
    }
    return sum * h;
}

double segment(const Potential& F, cplx x, cplx y) {
    const double d = plane_distance(x, y);
    double out = F.shift() * d;
    if (F.plane_only())
        out += bump_integral(F, x, y, d) + F.tilt() * (F.bump(y) - F.bump(x));
    return out;
}

double evaluate_at(const Potential& F, cplx z, double theta) {
    double out = F.shift();
    if (F.plane_only()) {
        out += F.bump(z);
        if (F.tilt() != 0.0) {
            const double eps = 1e-4;
            const cplx dz = eps * z.imag() * unit(theta);
            out += F.tilt() * (F.bump(z + dz) - F.bump(z - dz)) / (2.0 * eps);
        }
    }
    return out;
}

void require_plane_capable(const Potential& F, Model m, const char* where) {
    if (F.plane_only() && m != Model::plane)
        throw std::invalid_argument(std::string(where) + ": " + F.name() +
                                    " is only defined on the plane");
}

}  // namespace

// ------------------------------------------------------------- potentials

Potential Potential::zero() { return Potential{}; }

Potential Potential::constant(double c) {
    if (!std::isfinite(c))
        throw std::invalid_argument("Potential::constant: value must be finite");
    Potential p;
    p.kind_ = PotentialKind::constant;
    p.shift_ = c;
    p.hc_.c1 = std::max(1.0, std::abs(c));
    return p;
}

Potential Potential::plane_bump(const GroupAction& action, double amplitude, double tilt,
                                double step) {
    if (action.model() != Model::plane)
        throw std::invalid_argument("plane_bump: action " + action.name() +
                                    " does not act on the plane");
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude) || !std::isfinite(tilt))
        throw std::invalid_argument("plane_bump: amplitude must be finite and >= 0");
    if (!(step > 0.0))
        throw std::invalid_argument("plane_bump: quadrature step must be positive");
    Potential p;
    p.kind_ = PotentialKind::plane_bump;
    p.amplitude_ = amplitude;
    p.tilt_ = tilt;
    p.step_ = step;
    p.hc_ = {4.0, 0.5, 1.5, 2.5 * amplitude * (1.0 + std::abs(tilt)) + 1e-12};
    p.field_ = bump_field(action);
    return p;
}

std::string Potential::name() const {
    switch (kind_) {
        case PotentialKind::zero:
            return "zero";
        case PotentialKind::constant:
            return "constant(" + fmt(shift_) + ")";
        case PotentialKind::plane_bump: {
            std::string s = "plane-bump(A=" + fmt(amplitude_) + ",tilt=" + fmt(tilt_);
            if (shift_ != 0.0)
                s += ",shift=" + fmt(shift_);
            return s + ")";
        }
    }
    return "?";
}

double Potential::bump(cplx z) const {
    return field_ ? amplitude_ * field_->value(z) : 0.0;
}

double Potential::evaluate(const ModelPoint& z, double theta) const {
    if (z.model() == Model::tree) {
        require_plane_capable(*this, Model::tree, "Potential::evaluate");
        return shift_;
    }
    return evaluate_at(*this, z.z(), theta);
}

Potential Potential::plus(double c) const {
    Potential p = *this;
    p.shift_ += c;
    if (p.kind_ == PotentialKind::zero)
        p.kind_ = PotentialKind::constant;
    if (p.kind_ == PotentialKind::constant)
        p.hc_.c1 = std::max(1.0, std::abs(p.shift_));
    return p;
}

Potential Potential::reflected() const {
    Potential p = *this;
    p.tilt_ = -tilt_;
    return p;
}

Potential Potential::with_step(double h) const {
    if (!(h > 0.0))
        throw std::invalid_argument("Potential::with_step: step must be positive");
    Potential p = *this;
    p.step_ = h;
    return p;
}

Potential Potential::with_hc(HcConstants hc) const {
    if (!(hc.c1 > 0.0) || !(hc.c2 > 0.0 && hc.c2 < 1.0) || !(hc.growth_a > 1.0) ||
        !(hc.growth_b > 0.0))
        throw std::invalid_argument("Potential::with_hc: need c1 > 0, c2 in (0,1), a > 1, b > 0");
    Potential p = *this;
    p.hc_ = hc;
    return p;
}

// ------------------------------------------------------------- fake distance

double fake_distance(const Potential& F, const ModelPoint& x, const ModelPoint& y) {
    if (x.model() != y.model())
        throw ModelMismatch();
    if (x.model() == Model::tree) {
        require_plane_capable(F, Model::tree, "fake_distance");
        return F.shift() * dist(x, y);
    }
    return segment(F, x.z(), y.z());
}

double fake_distance_orbit(const Potential& F, const ScaledMatrix& g) {
    const double d = g.displacement_from_i();
    if (!F.plane_only() || !(d > 0.0))
        return F.shift() * d;
    if (d > kMaxOrbitDisplacement)
        throw std::domain_error("fake_distance_orbit: displacement " + fmt(d) +
                                " is beyond the quadrature range " +
                                fmt(kMaxOrbitDisplacement));
    const Mat2& m = g.direction();
    const ScaledMatrix inv(Mat2{m.d, -m.b, -m.c, m.a}, g.log_scale());
    const cplx to_g = g.direction_from_i();
    const cplx to_ginv = inv.direction_from_i();
    // Second half: g maps [i, g^-1 i] onto [g i, i], and the bump is invariant.
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(d / F.step())));
    const double h = d / static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * h;
        sum += F.bump(t <= 0.5 * d ? chart_point(kI, to_g, t) : chart_point(kI, to_ginv, d - t));
    }
    return F.shift() * d + sum * h;
}

double fake_distance_orbit(const Potential& F, const GroupAction& action, std::string_view g) {
    if (action.model() == Model::tree) {
        require_plane_capable(F, Model::tree, "fake_distance_orbit");
        return F.shift() * action.displacement(g);
    }
    return fake_distance_orbit(F, ScaledMatrix(action.matrix(g)));
}

// ------------------------------------------------------------- HC check

HcReport hc_validate(const Potential& F0, std::size_t samples, std::uint64_t seed,
                     double max_separation) {
    const Potential F = F0.with_step(std::max(F0.step(), 0.05));
    const HcConstants& hc = F.hc();
    Rng rng(seed);
    auto random_near = [&](cplx centre, double radius) {
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        return chart_point(centre, unit(angle), radius * rng.uniform());
    };
    auto ball_max = [&](cplx centre, double radius) {
        double m = std::abs(evaluate_at(F, centre, 2.0 * std::numbers::pi * rng.uniform()));
        for (int j = 0; j < 12; ++j) {
            const cplx p = random_near(centre, radius);
            m = std::max(m, std::abs(evaluate_at(F, p, 2.0 * std::numbers::pi * rng.uniform())));
        }
        return m;
    };
    HcReport rep;
    rep.samples = samples;
    for (std::size_t s = 0; s < samples; ++s) {
        // clause (a)
        const cplx x = random_near(kI, max_separation);
        const cplx y = random_near(kI, max_separation);
        const cplx xp = random_near(x, 1.0);
        const cplx yp = random_near(y, 1.0);
        const double dx = plane_distance(x, xp), dy = plane_distance(y, yp);
        const double lhs = std::abs(segment(F, xp, yp) - segment(F, x, y));
        const double rhs = (hc.c1 + ball_max(x, dx)) * std::pow(dx, hc.c2) +
                           (hc.c1 + ball_max(y, dy)) * std::pow(dy, hc.c2);
        if (rhs > 0.0)
            rep.max_ratio_a = std::max(rep.max_ratio_a, lhs / rhs);

        // corollary
        const cplx y2 = random_near(x, 3.0);
        const cplx z = random_near(kI, max_separation);
        const double dxy = plane_distance(x, y2);
        const double bound = (hc.c1 + ball_max(x, dxy)) * (dxy + 1.0);
        const double c1 = std::abs(segment(F, x, z) - segment(F, y2, z));
        const double c2 = std::abs(segment(F, z, x) - segment(F, z, y2));
        rep.max_ratio_corollary = std::max(rep.max_ratio_corollary, std::max(c1, c2) / bound);

        // subexponential growth
        const double t1 = 2.0 * std::numbers::pi * rng.uniform();
        const double t2 = 2.0 * std::numbers::pi * rng.uniform();
        const double g = std::abs(evaluate_at(F, x, t1) - evaluate_at(F, z, t2));
        const double gb = hc.growth_b * std::pow(hc.growth_a, plane_distance(x, z));
        rep.max_ratio_growth = std::max(rep.max_ratio_growth, g / gb);
    }
    rep.pass = rep.max_ratio_a <= 1.0 && rep.max_ratio_corollary <= 1.0 &&
               rep.max_ratio_growth <= 1.0;
    return rep;
}

// ------------------------------------------------------------- Gibbs cocycle

GibbsCocycle gibbs_cocycle(const Potential& F, const BoundaryPoint& zeta, const ModelPoint& x,
                           const ModelPoint& y, double horizon) {
    if (zeta.model() != x.model() || x.model() != y.model())
        throw ModelMismatch();
    if (!(horizon >= 5.0))
        throw std::invalid_argument("gibbs_cocycle: horizon must be >= 5");
    GibbsCocycle out;
    if (!F.plane_only()) {
        out.value = make_estimate(F.shift() * busemann(zeta, x, y), 0.0, 1, 0, "exact-busemann");
        return out;
    }
    require_plane_capable(F, x.model(), "gibbs_cocycle");
    const cplx xz = x.z(), yz = y.z();
    const cplx dir = boundary_direction(xz, zeta);
    const Potential coarse = F.with_step(2.0 * F.step());
    auto at = [&](const Potential& P, double T) {
        const cplx zT = chart_point(xz, dir, T);
        return segment(P, xz, zT) - segment(P, yz, zT);
    };
    const double v = at(F, horizon);
    const double v2 = at(F, 0.5 * horizon);
    const double v4 = at(F, 0.25 * horizon);
    const double quad = std::abs(v - at(coarse, horizon)) / 3.0;
    out.value = make_estimate(v, std::abs(v - v2) + quad, 1, 0, "horizon-truncation");
    out.converging = std::abs(v - v2) <= std::abs(v2 - v4) + 1e-12;
    return out;
}

// ------------------------------------------------------------- pressure

std::vector<double> fake_distances(const OrbitBall& ball, const GroupAction& action,
                                   const Potential& F) {
    const auto entries = ball.entries();
    std::vector<double> out(entries.size());
    if (!F.plane_only()) {
        for (std::size_t i = 0; i < entries.size(); ++i)
            out[i] = F.shift() * entries[i].displacement;
        return out;
    }
    require_plane_capable(F, action.model(), "fake_distances");
    const auto mats = ball.matrices();
    parallel_for(entries.size(),
                 [&](std::size_t i) { out[i] = fake_distance_orbit(F, ScaledMatrix(mats[i])); });
    return out;
}

namespace {

PressureFit pressure_from(const OrbitBall& ball, const std::vector<double>& fds, double lo,
                          double hi) {
    if (!ball.complete())
        throw std::invalid_argument("pressure: orbit ball is incomplete");
    if (hi > ball.radius() + 1e-9)
        throw std::invalid_argument("pressure: window exceeds ball radius");
    PressureFit fit;
    std::vector<double> xs;
    std::size_t count = 0;
    for (int n = static_cast<int>(std::ceil(lo - 1e-9)); n <= hi + 1e-9; ++n) {
        const auto idx = ball.shell(n);
        if (idx.empty())
            throw std::invalid_argument("pressure: empty shell S_" + std::to_string(n));
        double mx = -std::numeric_limits<double>::infinity();
        for (auto i : idx)
            mx = std::max(mx, fds[i]);
        double acc = 0.0;
        for (auto i : idx)
            acc += std::exp(fds[i] - mx);
        fit.shells.push_back(n);
        fit.log_sums.push_back(mx + std::log(acc));
        xs.push_back(n);
        count += idx.size();
    }
    if (xs.size() < 4)
        throw std::invalid_argument("pressure: fewer than 4 shells in the window");
    const LinearFit lf = linear_fit(xs, fit.log_sums);
    fit.value = make_estimate(lf.slope, lf.slope_stderr, count, 0, "shell-sum-fit");
    return fit;
}

}  // namespace

PressureFit pressure(const OrbitBall& ball, const GroupAction& action, const Potential& F,
                     double window_lo, double window_hi) {
    return pressure_from(ball, fake_distances(ball, action, F), window_lo, window_hi);
}

// ------------------------------------------------------------- atoms

std::string GibbsAtoms::to_csv() const {
    std::string out = "element,displacement,fake_distance,weight,normalized_mass\n";
    for (const auto& a : atoms)
        out += a.element + ',' + fmt(a.displacement) + ',' + fmt(a.fake_distance) + ',' +
               fmt(a.weight) + ',' + fmt(a.normalized_mass) + '\n';
    return out;
}

GibbsAtoms patterson_atoms(const OrbitBall& ball, std::shared_ptr<const GroupAction> action,
                           const Potential& F, double s, std::optional<double> v_hat,
                           double max_tail) {
    if (!action)
        throw std::invalid_argument("patterson_atoms: no action");
    const std::vector<double> fds = fake_distances(ball, *action, F);
    const double R = ball.radius();
    const double v = v_hat ? *v_hat : pressure_from(ball, fds, std::floor(R / 2), R).value.value;
    if (s < v + 0.02 - 1e-12)
        throw std::invalid_argument("patterson_atoms: s = " + fmt(s) +
                                    " must be at least the pressure estimate " + fmt(v) +
                                    " + 0.02");
    GibbsAtoms out;
    out.s = s;
    out.pressure = v;
    out.radius = R;
    out.action = action;
    const auto entries = ball.entries();
    double last_shell = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double w = std::exp(fds[i] - s * entries[i].displacement);
        out.atoms.push_back({entries[i].element, entries[i].displacement, fds[i], w, 0.0});
        // Neumaier summation
        const double t = out.normalization + w;
        comp += std::abs(out.normalization) >= w ? (out.normalization - t) + w : (w - t) + out.normalization;
        out.normalization = t;
        if (entries[i].displacement > R - 1.0)
            last_shell += w;
    }
    out.normalization += comp;
    const double q = std::exp(v - s);
    out.tail_bound = last_shell * q / (1.0 - q) / out.normalization;
    if (out.tail_bound > max_tail)
        throw TailBoundExceeded("patterson_atoms: estimated tail " + fmt(out.tail_bound) +
                                " of Q exceeds " + fmt(max_tail) + " at s = " + fmt(s) +
                                ", R = " + fmt(R));
    for (auto& a : out.atoms)
        a.normalized_mass = a.weight / out.normalization;
    const auto mats = ball.matrices();
    out.matrices.assign(mats.begin(), mats.end());
    return out;
}

double gibbs_shadow_mass(const GibbsAtoms& atoms, const Shadow& shadow) {
    const GroupAction& action = *atoms.action;
    if (!(shadow.source() == action.basepoint()))
        throw std::invalid_argument("gibbs_shadow_mass: shadow source must be the basepoint");
    const bool plane = action.model() == Model::plane;
    double mass = 0.0;
    for (std::size_t i = 0; i < atoms.atoms.size(); ++i) {
        ModelPoint p = action.basepoint();
        if (plane) {
            const Mat2& m = atoms.matrices[i];
            p = ModelPoint::plane((m.a * kI + m.b) / (m.c * kI + m.d));
        } else {
            p = ModelPoint::tree(atoms.atoms[i].element);
        }
        if (dist_to_segment(shadow.target(), shadow.source(), p) <= shadow.radius() + 1e-12)
            mass += atoms.atoms[i].normalized_mass;
    }
    return mass;
}

// ------------------------------------------------------------- fake drift

FakeDrift fake_drift(const Potential& F, const WalkMeasure& mu, std::size_t n, std::size_t batch,
                     std::uint64_t seed) {
    if (n < 100)
        throw std::invalid_argument("fake_drift: n must be >= 100");
    if (batch < 2)
        throw std::invalid_argument("fake_drift: batch must be >= 2");
    const GroupAction& action = mu.action();
    require_plane_capable(F, action.model(), "fake_drift");
    const bool plane = action.model() == Model::plane;
    const std::size_t half = n / 2;
    const std::size_t m = n + n / 4;

    struct Row {
        double full, half, defect;
    };
    std::vector<Row> rows(batch);
    parallel_for(batch, [&](std::size_t i) {
        const SamplePath path = sample_path(mu, m, seed, i);
        auto fake = [&](const ScaledMatrix& g, const std::string& w) {
            return plane ? fake_distance_orbit(F, g) : F.shift() * static_cast<double>(w.size());
        };
        ScaledMatrix g, tail;
        std::string w, wt;
        Row r{};
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t a = path.increments[k];
            if (plane) {
                if (k < n)
                    g.right_multiply(mu.matrix(a));
                else
                    tail.right_multiply(mu.matrix(a));
            } else {
                action.append(k < n ? w : wt, mu.support()[a].element);
            }
            if (k + 1 == half)
                r.half = fake(g, w) / static_cast<double>(half);
            if (k + 1 == n)
                r.full = fake(g, w);
        }
        ScaledMatrix gm = g * tail;
        std::string wm = w;
        if (!plane)
            action.append(wm, wt);
        const double beta = fake(gm, wm) - fake(tail, wt);
        r.defect = std::abs(beta - r.full);
        r.full /= static_cast<double>(n);
        rows[i] = r;
    });

    FakeDrift out;
    RunningStats full, halves;
    for (const auto& r : rows) {
        full.add(r.full);
        halves.add(r.half);
    }
    out.value = make_estimate(full.mean(), full.stderr_of_mean(), batch, seed, "batch-mean");
    out.half = make_estimate(halves.mean(), halves.stderr_of_mean(), batch, seed, "batch-mean");
    out.tail_t = {0.5, 1.0, 2.0, 4.0, 8.0};
    for (double t : out.tail_t) {
        std::size_t c = 0;
        for (const auto& r : rows)
            c += r.defect > t;
        out.tail_p.push_back(static_cast<double>(c) / static_cast<double>(batch));
    }
    return out;
}

}  // namespace hypdrift
