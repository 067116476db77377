#include "sqr/family.hpp"

#include <algorithm>
#include <cmath>

#include "sqr/errors.hpp"
#include "sqr/math_util.hpp"
#include "sqr/quadrature.hpp"

namespace sqr {

const char* family_name(FamilyTag tag) {
    switch (tag) {
        case FamilyTag::Exponential: return "exponential";
        case FamilyTag::Poisson: return "poisson";
        case FamilyTag::Gaussian: return "gaussian";
    }
    return "?";
}

std::optional<FamilyTag> family_from_name(std::string_view name) {
    if (name == "exponential") return FamilyTag::Exponential;
    if (name == "poisson") return FamilyTag::Poisson;
    if (name == "gaussian") return FamilyTag::Gaussian;
    return std::nullopt;
}

bool is_continuous(FamilyTag tag) { return tag != FamilyTag::Poisson; }

double suff_stat(FamilyTag tag, double x) {
    return tag == FamilyTag::Gaussian ? x * x : x;
}

double sqrt_suff_stat(FamilyTag tag, double x) {
    // Gaussian uses sqrt(x^2) == x, not |x|.
    return tag == FamilyTag::Gaussian ? x : std::sqrt(x);
}

double log_base_measure(FamilyTag tag, double x) {
    return tag == FamilyTag::Poisson ? -std::lgamma(x + 1.0) : 0.0;
}

bool in_domain(FamilyTag tag, double x) {
    if (!std::isfinite(x)) return false;
    switch (tag) {
        case FamilyTag::Exponential: return x >= 0.0;
        case FamilyTag::Poisson: return x >= 0.0 && std::floor(x) == x;
        case FamilyTag::Gaussian: return true;
    }
    return false;
}

bool node_conditional_valid(FamilyTag tag, NodeConditionalParams p) {
    if (!std::isfinite(p.eta1) || !std::isfinite(p.eta2))
        throw InvalidParams("node conditional parameters must be finite");
    switch (tag) {
        case FamilyTag::Exponential:
            return p.eta1 < 0.0 || (p.eta1 == 0.0 && p.eta2 < 0.0);
        case FamilyTag::Poisson:
            return true;
        case FamilyTag::Gaussian:
            return p.eta1 < 0.0;
    }
    return false;
}

namespace {

void require_valid(FamilyTag tag, NodeConditionalParams p) {
    if (!node_conditional_valid(tag, p))
        throw InvalidParams(std::string("invalid node conditional for ") + family_name(tag) +
                            ": eta1=" + std::to_string(p.eta1) +
                            ", eta2=" + std::to_string(p.eta2));
}

struct Partition {
    double log_z;
    double e_t;       // E[T(x)]
    double e_sqrt_t;  // E[sqrt(T(x))]
};

// Exponential node conditional: density ∝ exp(eta1*x + eta2*sqrt(x)) on
// [0, inf). With u = sqrt(x) the moments reduce to the half-line Gaussian
// integrals J_n = ∫ u^n exp(-a u^2 + b u) du, a = -eta1, satisfying
//   J_1 = (1 + b J_0) / (2a),   J_n = ((n-1) J_{n-2} + b J_{n-1}) / (2a),
// and Z = 2 J_1, E[sqrt(x)] = J_2/J_1, E[x] = J_3/J_1.
Partition exponential_partition(NodeConditionalParams p) {
    if (p.eta1 == 0.0) {
        // pure exp(eta2 sqrt x), eta2 < 0: Z = 2/eta2^2
        const double c = -p.eta2;
        return {std::log(2.0) - 2.0 * std::log(c), 6.0 / (c * c), 2.0 / c};
    }
    const double a = -p.eta1;
    const double b = p.eta2;
    const double sqrt_a = std::sqrt(a);
    if (b == 0.0) {
        return {-std::log(a), 1.0 / a, 0.5 * kSqrtPi / sqrt_a};
    }
    if (b > 0.0) {
        // Every ladder term is positive; run it in log space so large
        // b (w^2 in the exponent) cannot overflow.
        const double w = b / (2.0 * sqrt_a);
        const double log_b = std::log(b);
        const double log_one_plus_erf =
            w > 1.0 ? std::log(2.0) + std::log1p(-0.5 * std::erfc(w))
                    : std::log1p(std::erf(w));
        const double l_j0 = std::log(0.5 * kSqrtPi / sqrt_a) + w * w + log_one_plus_erf;
        const double l2a = std::log(2.0 * a);
        const double l_j1 = log_add_exp(0.0, log_b + l_j0) - l2a;
        const double l_j2 = log_add_exp(l_j0, log_b + l_j1) - l2a;
        const double l_j3 = log_add_exp(std::log(2.0) + l_j1, log_b + l_j2) - l2a;
        return {std::log(2.0) + l_j1, std::exp(l_j3 - l_j1), std::exp(l_j2 - l_j1)};
    }
    // b < 0: the ladder subtracts nearly equal quantities once
    // v = |b|/(2 sqrt a) is large, so switch to the expansion of
    // J_n = n! S_n / c^{n+1}, S_n = sum_k (-a/c^2)^k (n+2k)!/(n! k!).
    const double c = -b;
    const double v = c / (2.0 * sqrt_a);
    if (v < 8.0) {
        const double j0 = 0.5 * kSqrtPi / sqrt_a * erfcx_pos(v);
        const double j1 = one_minus_sqrtpi_v_erfcx(v) / (2.0 * a);
        const double j2 = (j0 - c * j1) / (2.0 * a);
        const double j3 = (2.0 * j1 - c * j2) / (2.0 * a);
        return {std::log(2.0 * j1), j3 / j1, j2 / j1};
    }
    const double t = a / (c * c);
    auto series = [&](int n) {
        double term = 1.0;
        double sum = 1.0;
        for (int k = 0; k < 60; ++k) {
            const double next = term * (-t) * (n + 2 * k + 2) * (n + 2 * k + 1) / (k + 1);
            if (std::fabs(next) >= std::fabs(term)) break;  // asymptotic turnover
            sum += next;
            term = next;
            if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
        }
        return sum;
    };
    const double s1 = series(1);
    const double s2 = series(2);
    const double s3 = series(3);
    return {std::log(2.0 * s1) - 2.0 * std::log(c),
            6.0 * s3 / (c * c * s1),
            2.0 * s2 / (c * s1)};
}

// Gaussian node conditional: density ∝ exp(eta1*x^2 + eta2*x) over the
// whole line, i.e. N(mu, sigma^2) with sigma^2 = 1/(2a), mu = eta2/(2a).
Partition gaussian_partition(NodeConditionalParams p) {
    const double a = -p.eta1;
    const double mu = p.eta2 / (2.0 * a);
    const double var = 0.5 / a;
    return {0.5 * std::log(kPi / a) + 0.25 * p.eta2 * p.eta2 / a, var + mu * mu, mu};
}

Partition partition_dispatch(FamilyTag tag, NodeConditionalParams p) {
    require_valid(tag, p);
    switch (tag) {
        case FamilyTag::Exponential: return exponential_partition(p);
        case FamilyTag::Gaussian: return gaussian_partition(p);
        case FamilyTag::Poisson: {
            const PoissonSum s = poisson_node_sum(p);
            return {s.log_partition, s.e_t, s.e_sqrt_t};
        }
    }
    throw SqrError("unreachable family tag");
}

}  // namespace

PoissonSum poisson_node_sum(NodeConditionalParams p, double rel_tail_tol, long max_terms) {
    if (!std::isfinite(p.eta1) || !std::isfinite(p.eta2))
        throw InvalidParams("node conditional parameters must be finite");
    double max_log = kNegInf;
    double z = 0.0, zt = 0.0, zs = 0.0;  // scaled by exp(-max_log)
    for (long x = 0; x < max_terms; ++x) {
        const double xd = static_cast<double>(x);
        const double sx = std::sqrt(xd);
        const double lt = p.eta1 * xd + p.eta2 * sx - std::lgamma(xd + 1.0);
        double term;
        if (lt > max_log) {
            const double rescale = max_log == kNegInf ? 0.0 : std::exp(max_log - lt);
            z *= rescale;
            zt *= rescale;
            zs *= rescale;
            max_log = lt;
            term = 1.0;
        } else {
            term = std::exp(lt - max_log);
        }
        z += term;
        zt += xd * term;
        zs += sx * term;

        // Decreasing upper bound on every later term ratio (Appendix-style
        // ratio test: exp(eta1 + eta2 * d sqrt) / (x+1) with the sqrt
        // increment bounded by its current value when eta2 > 0).
        const double d_sqrt = std::sqrt(xd + 1.0) - sx;
        const double r_hat = std::exp(p.eta1 + std::max(p.eta2, 0.0) * d_sqrt) / (xd + 1.0);
        if (r_hat < 1.0) {
            const double tail = term * r_hat / (1.0 - r_hat);
            if (tail <= rel_tail_tol * z)
                return {max_log + std::log(z), zt / z, zs / z, x + 1, tail / z};
        }
    }
    throw NonConvergence("poisson summation did not meet its tail bound within the term cap");
}

double node_log_partition(FamilyTag tag, NodeConditionalParams p) {
    return partition_dispatch(tag, p).log_z;
}

std::pair<double, double> node_log_partition_grad(FamilyTag tag, NodeConditionalParams p) {
    const Partition r = partition_dispatch(tag, p);
    return {r.e_t, r.e_sqrt_t};
}

std::pair<double, double> node_log_partition_grad_fd(FamilyTag tag, NodeConditionalParams p,
                                                     double eps) {
    const double a0 = node_log_partition(tag, p);
    const double a1 = node_log_partition(tag, {p.eta1 + eps, p.eta2});
    const double a2 = node_log_partition(tag, {p.eta1, p.eta2 + eps});
    return {(a1 - a0) / eps, (a2 - a0) / eps};
}

double node_exponent(FamilyTag tag, NodeConditionalParams p, double x) {
    if (tag == FamilyTag::Gaussian) return p.eta1 * x * x + p.eta2 * x;
    return p.eta1 * x + p.eta2 * std::sqrt(x);
}

double node_conditional_mode(FamilyTag tag, NodeConditionalParams p) {
    require_valid(tag, p);
    switch (tag) {
        case FamilyTag::Exponential: {
            if (p.eta1 < 0.0 && p.eta2 > 0.0) {
                const double s = p.eta2 / (2.0 * -p.eta1);
                return s * s;
            }
            return 0.0;  // exponent is decreasing on [0, inf)
        }
        case FamilyTag::Gaussian:
            return p.eta2 / (2.0 * -p.eta1);
        case FamilyTag::Poisson: {
            // walk up while the term ratio exceeds 1
            long x = 0;
            while (x < 1000000) {
                const double r = std::exp(p.eta1 + p.eta2 * (std::sqrt(x + 1.0) - std::sqrt((double)x))) /
                                 (x + 1.0);
                if (r <= 1.0) break;
                ++x;
            }
            return static_cast<double>(x);
        }
    }
    throw SqrError("unreachable family tag");
}

SliceInterval slice_interval(FamilyTag tag, NodeConditionalParams p, double level) {
    if (tag == FamilyTag::Poisson)
        throw InvalidParams("slice_interval is defined for continuous families only");
    if (!std::isfinite(level)) throw InvalidParams("slice level must be finite");
    if (p.eta1 == 0.0 && tag == FamilyTag::Exponential) {
        // degenerate linear case g = eta2 sqrt(x), eta2 < 0
        require_valid(tag, p);
        if (level > 0.0) throw EmptySlice("level above the exponent maximum");
        const double s_hi = level / p.eta2;
        return {0.0, s_hi * s_hi};
    }
    if (!(p.eta1 < 0.0)) throw InvalidParams("slice_interval requires eta1 < 0");

    // Roots of eta1 q^2 + eta2 q - level = 0 where q is sqrt(x)
    // (Exponential) or x itself (Gaussian).
    const double disc = p.eta2 * p.eta2 + 4.0 * p.eta1 * level;
    if (disc < 0.0) throw EmptySlice("level above the exponent maximum");
    const double sq = std::sqrt(disc);
    double r1, r2;
    if (p.eta2 == 0.0) {
        r1 = -sq / (2.0 * p.eta1);
        r2 = sq / (2.0 * p.eta1);
    } else {
        const double q = -0.5 * (p.eta2 + std::copysign(sq, p.eta2));
        r1 = q / p.eta1;
        r2 = -level / q;
    }
    double lo = std::min(r1, r2);
    double hi = std::max(r1, r2);
    if (tag == FamilyTag::Exponential) {
        if (hi < 0.0) throw EmptySlice("slice lies outside the domain");
        lo = std::max(0.0, lo);
        return {lo * lo, hi * hi};
    }
    return {lo, hi};
}

double sample_node_conditional(FamilyTag tag, NodeConditionalParams p, int slice_steps,
                               RandomStream& rng) {
    require_valid(tag, p);
    if (slice_steps < 1) throw InvalidParams("slice_steps must be >= 1");

    if (tag == FamilyTag::Poisson) {
        // Exact inverse-CDF draw on the truncated support; no Markov error.
        const PoissonSum s = poisson_node_sum(p);
        const double u = rng.uniform01();
        double cum = 0.0;
        for (long x = 0; x < s.terms; ++x) {
            const double xd = static_cast<double>(x);
            cum += std::exp(p.eta1 * xd + p.eta2 * std::sqrt(xd) - std::lgamma(xd + 1.0) -
                            s.log_partition);
            if (cum >= u) return xd;
        }
        return static_cast<double>(s.terms - 1);
    }

    double x = node_conditional_mode(tag, p);
    for (int k = 0; k < slice_steps; ++k) {
        const double level = node_exponent(tag, p, x) + std::log(rng.uniform01());
        const SliceInterval s = slice_interval(tag, p, level);
        x = rng.uniform(s.lo, s.hi);
    }
    return x;
}

double node_log_partition_quadrature(FamilyTag tag, NodeConditionalParams p, double tol) {
    if (!std::isfinite(p.eta1) || !std::isfinite(p.eta2))
        throw InvalidParams("node conditional parameters must be finite");
    if (tag == FamilyTag::Poisson)
        return poisson_node_sum(p, std::min(1e-15, 0.1 * tol)).log_partition;

    auto g = [&](double x) { return node_exponent(tag, p, x); };

    if (tag == FamilyTag::Exponential) {
        // Locate the peak, then window the integral to where the integrand
        // sits within 60 nats of it so the adaptive rule cannot miss a
        // narrow mode. Failure of the right tail to decay within the budget
        // is the divergence signal (cases eta1 > 0 and eta1 = 0, eta2 >= 0).
        double peak = 0.0;
        if (p.eta1 < 0.0 && p.eta2 > 0.0) {
            const double s = p.eta2 / (2.0 * -p.eta1);
            peak = s * s;
        }
        const double shift = g(peak);
        double hi = peak + std::max(1.0, peak);
        while (g(hi) - shift > -60.0) {
            hi = peak + 2.0 * (hi - peak);
            if (hi > 1e12)
                throw NonConvergence("exponential-family tail does not decay; partition diverges");
        }
        double lo = 0.0;
        if (g(0.0) - shift < -60.0) {
            // g rises monotonically on [0, peak]; bisect the -60 crossing
            double a = 0.0, b = peak;
            for (int it = 0; it < 80; ++it) {
                const double m = 0.5 * (a + b);
                (g(m) - shift < -60.0 ? a : b) = m;
            }
            lo = a;
        }
        return log_integral_exp(g, lo, hi, tol);
    }

    // Gaussian: window each side of the stationary point when one exists,
    // otherwise detect growth and report divergence.
    double center = 0.0;
    if (p.eta1 < 0.0) center = p.eta2 / (2.0 * -p.eta1);
    const double shift = g(center);
    double left = 1.0, right = 1.0;
    int guard = 0;
    while (g(center + right) - shift > -60.0) {
        right *= 2.0;
        if (++guard > 60)
            throw NonConvergence("gaussian-family tail does not decay; partition diverges");
    }
    guard = 0;
    while (g(center - left) - shift > -60.0) {
        left *= 2.0;
        if (++guard > 60)
            throw NonConvergence("gaussian-family tail does not decay; partition diverges");
    }
    return log_integral_exp(g, center - left, center + right, tol);
}

}  // namespace sqr
