#include "doseframe/numerics.hpp"

#include <algorithm>
#include <limits>
#include <utility>

namespace doseframe {

BetaParams::BetaParams(double a, double b) : alpha(a), beta(b)
{
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw std::domain_error("BetaParams: alpha and beta must be positive and finite");
}

Quadrature::Quadrature(double tol, int max_subdiv) : abs_tol(tol), max_subdivisions(max_subdiv)
{
    if (!(tol > 0.0))
        throw std::invalid_argument("Quadrature: abs_tol must be positive");
    if (max_subdiv < 8)
        throw std::invalid_argument("Quadrature: max_subdivisions must be at least 8");
}

double log_beta_fn(double a, double b)
{
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace {

constexpr int kMaxIterations = 500;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

void check_params(const BetaParams& p)
{
    if (!(p.alpha > 0.0) || !(p.beta > 0.0))
        throw std::domain_error("reg_inc_beta: alpha and beta must be positive");
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
// Returns false when it fails to converge.
bool beta_continued_fraction(double a, double b, double x, double& out)
{
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny)
        d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny)
            d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny)
            c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny)
            d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny)
            c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) {
            out = h;
            return true;
        }
    }
    return false;
}

// I_x(a,b) from the power series
//   x^a / (a B(a,b)) * [1 + a * sum_{n>=1} (1-b)_n / (n! (a+n)) x^n].
double beta_series(double a, double b, double x)
{
    double term = 1.0;
    double sum = 1.0 / a;
    for (int n = 1; n <= 100000; ++n) {
        term *= (n - b) * x / n;
        const double add = term / (a + n);
        sum += add;
        if (std::abs(add) < kEps * std::abs(sum))
            break;
    }
    return std::exp(a * std::log(x) - log_beta_fn(a, b)) * sum;
}

// Lower tail I_x(a,b) evaluated directly; valid anywhere but accurate on
// the side of the mean where the fraction converges fast.
double lower_tail_direct(double a, double b, double x)
{
    double cf = 0.0;
    if (beta_continued_fraction(a, b, x, cf)) {
        const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta_fn(a, b));
        return front * cf / a;
    }
    return beta_series(a, b, x);
}

// Both tails {I_x(a,b), 1 - I_x(a,b)}; the smaller-side tail is computed
// directly so it never suffers cancellation.
std::pair<double, double> beta_tails(const BetaParams& p, double x)
{
    check_params(p);
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("reg_inc_beta: x must lie in [0, 1]");
    if (x == 0.0)
        return {0.0, 1.0};
    if (x == 1.0)
        return {1.0, 0.0};
    const double a = p.alpha;
    const double b = p.beta;
    if (x < (a + 1.0) / (a + b + 2.0)) {
        const double lower = std::clamp(lower_tail_direct(a, b, x), 0.0, 1.0);
        return {lower, 1.0 - lower};
    }
    const double upper = std::clamp(lower_tail_direct(b, a, 1.0 - x), 0.0, 1.0);
    return {1.0 - upper, upper};
}

} // namespace

double reg_inc_beta(const BetaParams& p, double x) { return beta_tails(p, x).first; }

double reg_inc_beta_upper(const BetaParams& p, double x) { return beta_tails(p, x).second; }

double beta_interval_mass(const BetaParams& p, double lo, double hi)
{
    if (!(lo <= hi))
        throw std::domain_error("beta_interval_mass: lo must not exceed hi");
    const double mean = p.alpha / (p.alpha + p.beta);
    double mass;
    if (lo >= mean)
        mass = reg_inc_beta_upper(p, lo) - reg_inc_beta_upper(p, hi);
    else
        mass = reg_inc_beta(p, hi) - reg_inc_beta(p, lo);
    return std::max(mass, 0.0);
}

double beta_pdf(const BetaParams& p, double x)
{
    check_params(p);
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("beta_pdf: x must lie in [0, 1]");
    if ((x == 0.0 && p.alpha < 1.0) || (x == 1.0 && p.beta < 1.0))
        return std::numeric_limits<double>::infinity();
    if ((x == 0.0 && p.alpha > 1.0) || (x == 1.0 && p.beta > 1.0))
        return 0.0;
    const double log_x = x == 0.0 ? 0.0 : std::log(x);
    const double log_1mx = x == 1.0 ? 0.0 : std::log1p(-x);
    return std::exp((p.alpha - 1.0) * log_x + (p.beta - 1.0) * log_1mx - log_beta_fn(p.alpha, p.beta));
}

std::vector<double> pava_isotonic(std::span<const double> values, std::span<const double> weights)
{
    if (values.size() != weights.size())
        throw std::invalid_argument("pava_isotonic: values and weights differ in length");
    for (double w : weights)
        if (!(w > 0.0))
            throw std::invalid_argument("pava_isotonic: weights must be positive");

    struct Block {
        double mean;
        double weight;
        std::size_t count;
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        blocks.push_back({values[i], weights[i], 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
            const Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            const double w = prev.weight + top.weight;
            prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / w;
            prev.weight = w;
            prev.count += top.count;
        }
    }

    std::vector<double> fit;
    fit.reserve(values.size());
    for (const Block& b : blocks)
        fit.insert(fit.end(), b.count, b.mean);
    return fit;
}

} // namespace doseframe
