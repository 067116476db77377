#include "sqr/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sqr/errors.hpp"
#include "sqr/math_util.hpp"

namespace sqr {
namespace {

// Kronrod 15-point nodes on [-1, 1] (symmetric; only the nonnegative half
// is stored) with the embedded 7-point Gauss rule on the odd positions.
constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};

constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};

constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct PanelResult {
    double kronrod;
    double error;
    double resabs;  // Kronrod estimate of the integral of |f|
};

PanelResult gauss_kronrod(const std::function<double(double)>& f,
                          double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fk = 0.0;
    double fg = 0.0;
    double fabs_sum = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double x = h * kKronrodNodes[i];
        double v, vabs;
        if (i == 7) {
            v = f(c);
            vabs = std::fabs(v);
        } else {
            const double l = f(c - x);
            const double r = f(c + x);
            v = l + r;
            vabs = std::fabs(l) + std::fabs(r);
        }
        fk += kKronrodWeights[i] * v;
        fabs_sum += kKronrodWeights[i] * vabs;
        if (i % 2 == 1) fg += kGaussWeights[i / 2] * v;
    }
    return {fk * h, std::fabs((fk - fg) * h), fabs_sum * h};
}

struct Budget {
    long panels = 0;
};

double integrate_recursive(const std::function<double(double)>& f,
                           double a, double b, double tol, int depth,
                           Budget& budget) {
    if (++budget.panels > 2000000)
        throw NonConvergence("adaptive quadrature exhausted its evaluation budget");
    const PanelResult r = gauss_kronrod(f, a, b);
    // Do not subdivide below the rounding floor of this panel, and accept
    // best effort at the depth cap: the floor keeps a too-small requested
    // tolerance from exploding the recursion tree.
    const double floor = 50.0 * std::numeric_limits<double>::epsilon() * r.resabs;
    if (r.error <= std::max(tol, floor) || depth >= 48 ||
        (b - a) <= 1e-15 * (std::fabs(a) + std::fabs(b)))
        return r.kronrod;
    const double c = 0.5 * (a + b);
    return integrate_recursive(f, a, c, 0.5 * tol, depth + 1, budget) +
           integrate_recursive(f, c, b, 0.5 * tol, depth + 1, budget);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f,
                          double a, double b, double abs_tol) {
    if (a == b) return 0.0;
    Budget budget;
    return integrate_recursive(f, a, b, abs_tol, 0, budget);
}

double log_integral_exp(const std::function<double(double)>& g,
                        double a, double b, double log_tol) {
    if (!(b > a)) throw SqrError("log_integral_exp: empty interval");

    // Probe for the shift and a first-order magnitude estimate.
    constexpr int kProbes = 257;
    double shift = kNegInf;
    const double step = (b - a) / (kProbes - 1);
    for (int i = 0; i < kProbes; ++i) shift = std::max(shift, g(a + step * i));
    if (shift == kNegInf) return kNegInf;

    auto f = [&](double x) { return std::exp(g(x) - shift); };
    double rough = 0.0;
    for (int i = 0; i < kProbes; ++i) {
        const double w = (i == 0 || i == kProbes - 1) ? 0.5 : 1.0;
        rough += w * f(a + step * i);
    }
    rough = std::max(rough * step, 1e-300);

    const double tol = std::max(0.25 * log_tol, 1e-14);
    const double value = integrate_adaptive(f, a, b, tol * rough);
    if (!(value > 0.0)) return kNegInf;
    return shift + std::log(value);
}

}  // namespace sqr
