#pragma once

// Special functions, quadrature, root finding and isotonic regression shared
// by every design. Everything here is a pure function of its arguments.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace doseframe {

/// Thrown when an adaptive routine exhausts its refinement budget.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by bisect() when the end points do not bracket a sign change.
class BracketError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Shape parameters of a Be(alpha, beta) distribution.
struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;

    BetaParams() = default;
    BetaParams(double a, double b);
};

/// Log of the complete beta function B(a, b).
double log_beta_fn(double a, double b);

/// Regularized incomplete beta I_x(alpha, beta).
///
/// Continued fraction (modified Lentz) on whichever side of the mean
/// converges fastest, with a power series used when the fraction stalls.
/// Throws std::domain_error for x outside [0, 1].
double reg_inc_beta(const BetaParams& p, double x);

/// Upper tail 1 - I_x(alpha, beta), computed without cancellation.
double reg_inc_beta_upper(const BetaParams& p, double x);

/// Probability mass of Be(alpha, beta) on [lo, hi]. Uses the upper tail
/// when the interval sits above the mean so tiny masses keep their
/// relative precision.
double beta_interval_mass(const BetaParams& p, double lo, double hi);

/// Density of Be(alpha, beta) at x.
double beta_pdf(const BetaParams& p, double x);

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Density of N(0, sigma^2) at x.
inline double normal_pdf(double x, double sigma)
{
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    const double z = x / sigma;
    return inv_sqrt_2pi / sigma * std::exp(-0.5 * z * z);
}

struct Quadrature {
    double abs_tol = 1e-10;
    int max_subdivisions = 1024;

    Quadrature() = default;
    Quadrature(double tol, int max_subdiv);
};

namespace detail {

struct SimpsonPanel {
    double lo, hi;
    double f_lo, f_mid, f_hi;
    double whole;
};

} // namespace detail

/// Adaptive Simpson quadrature of f over [lo, hi].
///
/// Panels are refined until the Richardson error estimate of each panel is
/// below its share of abs_tol (proportional to panel width). Throws
/// ConvergenceError when more than max_subdivisions splits are required.
template <typename F>
double integrate(F&& f, double lo, double hi, const Quadrature& q = {})
{
    if (!(lo <= hi))
        throw std::invalid_argument("integrate: lo must not exceed hi");
    if (lo == hi)
        return 0.0;

    const double width = hi - lo;
    auto simpson = [](double a, double b, double fa, double fm, double fb) {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    };

    // Seed with equal panels, leftmost on top.
    std::vector<detail::SimpsonPanel> stack;
    stack.reserve(64);
    {
        constexpr int kPanels = 16;
        double a = hi;
        double fa = f(hi);
        for (int i = kPanels - 1; i >= 0; --i) {
            const double b = a;
            const double fb = fa;
            a = i == 0 ? lo : lo + width * i / kPanels;
            fa = f(a);
            const double mid = 0.5 * (a + b);
            const double fm = f(mid);
            stack.push_back({a, b, fa, fm, fb, simpson(a, b, fa, fm, fb)});
        }
    }

    double total = 0.0;
    double compensation = 0.0;
    int splits = 0;
    while (!stack.empty()) {
        const detail::SimpsonPanel p = stack.back();
        stack.pop_back();

        const double mid = 0.5 * (p.lo + p.hi);
        const double left_mid = 0.5 * (p.lo + mid);
        const double right_mid = 0.5 * (mid + p.hi);
        const double f_lm = f(left_mid);
        const double f_rm = f(right_mid);
        const double left = simpson(p.lo, mid, p.f_lo, f_lm, p.f_mid);
        const double right = simpson(mid, p.hi, p.f_mid, f_rm, p.f_hi);
        const double delta = left + right - p.whole;
        const double budget = q.abs_tol * (p.hi - p.lo) / width;

        if (std::abs(delta) <= 15.0 * budget || p.hi - p.lo <= 1e-14 * width) {
            // Kahan-compensated accumulation.
            const double term = left + right + delta / 15.0;
            const double y = term - compensation;
            const double t = total + y;
            compensation = (t - total) - y;
            total = t;
            continue;
        }
        if (++splits > q.max_subdivisions)
            throw ConvergenceError("integrate: subdivision budget of " +
                                   std::to_string(q.max_subdivisions) + " exhausted");
        stack.push_back({mid, p.hi, p.f_mid, f_rm, p.f_hi, right});
        stack.push_back({p.lo, mid, p.f_lo, f_lm, p.f_mid, left});
    }
    return total;
}

/// Root of g on [lo, hi] by bisection.
///
/// Requires a sign change; stops once the bracket is narrower than tol or
/// can no longer be split in floating point (tol = 0 asks for the latter).
/// The returned point is the midpoint of the final bracket.
template <typename G>
double bisect(G&& g, double lo, double hi, double tol = 1e-10)
{
    if (!(lo < hi))
        throw std::invalid_argument("bisect: empty bracket");
    if (tol < 0.0)
        throw std::invalid_argument("bisect: negative tolerance");
    double g_lo = g(lo);
    const double g_hi = g(hi);
    if (g_lo == 0.0)
        return lo;
    if (g_hi == 0.0)
        return hi;
    if ((g_lo < 0.0) == (g_hi < 0.0))
        throw BracketError("bisect: g(lo) and g(hi) have the same sign");

    while (hi - lo > tol) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi)
            break;
        const double g_mid = g(mid);
        if (g_mid == 0.0)
            return mid;
        if ((g_mid < 0.0) == (g_lo < 0.0)) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    return lo + 0.5 * (hi - lo);
}

/// Weighted least-squares nondecreasing fit (pool adjacent violators).
std::vector<double> pava_isotonic(std::span<const double> values, std::span<const double> weights);

} // namespace doseframe
