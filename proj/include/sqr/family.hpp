#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "sqr/rng.hpp"

namespace sqr {

/// Base univariate exponential family of the joint model.
///
///   Exponential: domain [0, inf),        T(x) = x,   B(x) = 0
///   Poisson:     domain {0, 1, 2, ...},  T(x) = x,   B(x) = -log(x!)
///   Gaussian:    domain (-inf, inf),     T(x) = x^2, B(x) = 0,
///                with sqrt(T(x)) taken as x itself, not |x|.
enum class FamilyTag { Exponential, Poisson, Gaussian };

const char* family_name(FamilyTag tag);
std::optional<FamilyTag> family_from_name(std::string_view name);

bool is_continuous(FamilyTag tag);

/// Natural parameters of the two-parameter node conditional
///   p(x) ∝ exp(eta1 * T(x) + eta2 * sqrt(T(x)) + B(x)).
struct NodeConditionalParams {
    double eta1 = 0.0;
    double eta2 = 0.0;
};

/// Sufficient statistic T, its square root, and log base measure B of a
/// single value, in the conventions above.
double suff_stat(FamilyTag tag, double x);
double sqrt_suff_stat(FamilyTag tag, double x);
double log_base_measure(FamilyTag tag, double x);

/// True when x lies in the family domain.
bool in_domain(FamilyTag tag, double x);

/// Whether the node-conditional log partition is finite:
///   Exponential: eta1 < 0, or eta1 == 0 and eta2 < 0
///   Poisson:     always
///   Gaussian:    eta1 < 0
/// Throws InvalidParams on non-finite entries.
bool node_conditional_valid(FamilyTag tag, NodeConditionalParams p);

/// Node-conditional log partition A_node. Closed form for Exponential and
/// Gaussian, truncated summation for Poisson. Throws InvalidParams when the
/// validity predicate fails.
double node_log_partition(FamilyTag tag, NodeConditionalParams p);

/// Gradient (dA/deta1, dA/deta2) = (E[T], E[sqrt(T)]) under the node
/// conditional. Closed form for Exponential and Gaussian; for Poisson the
/// expectations are accumulated by the same truncated summation as A_node,
/// which is the exact derivative of the truncated value.
std::pair<double, double> node_log_partition_grad(FamilyTag tag, NodeConditionalParams p);

/// Forward finite differences of node_log_partition with step eps
/// (default 0.001). Kept as the generic fallback for families without a
/// closed form and as a cross-check of the exact gradient.
std::pair<double, double> node_log_partition_grad_fd(FamilyTag tag, NodeConditionalParams p,
                                                     double eps = 1e-3);

/// Oracle evaluation of A_node by adaptive quadrature (continuous families)
/// or direct summation (Poisson), to absolute tolerance tol on the log
/// value. Independent of the closed forms; throws NonConvergence when the
/// tail does not decay within the cutoff budget.
double node_log_partition_quadrature(FamilyTag tag, NodeConditionalParams p, double tol = 1e-10);

/// Details of the truncated Poisson summation for A_node.
struct PoissonSum {
    double log_partition;  ///< log sum of exp(eta1 x + eta2 sqrt(x) - log x!)
    double e_t;            ///< E[x]
    double e_sqrt_t;       ///< E[sqrt(x)]
    long terms;            ///< number of terms consumed (support is {0..terms-1})
    double tail_ratio;     ///< bound on (omitted tail) / (retained sum)
};

/// Sums the Poisson node-conditional series until the tail bound drops
/// below rel_tail_tol of the running sum (ratio-test bound), with a hard
/// cap on the number of terms. Throws NonConvergence at the cap.
PoissonSum poisson_node_sum(NodeConditionalParams p, double rel_tail_tol = 1e-15,
                            long max_terms = 1000000);

/// Exponent g(x) of the continuous node conditional (B is zero for both
/// continuous families): eta1*x + eta2*sqrt(x) for Exponential,
/// eta1*x^2 + eta2*x for Gaussian.
double node_exponent(FamilyTag tag, NodeConditionalParams p, double x);

/// Argmax of the node-conditional density over the domain.
double node_conditional_mode(FamilyTag tag, NodeConditionalParams p);

/// Closed-form slice {x in domain : g(x) >= level} for the continuous
/// families (a quadratic in sqrt(x) for Exponential, in x for Gaussian).
/// Throws EmptySlice when level exceeds the maximum of g.
struct SliceInterval {
    double lo;
    double hi;
};
SliceInterval slice_interval(FamilyTag tag, NodeConditionalParams p, double level);

/// Draws one value from the node conditional. Continuous families run
/// slice_steps iterations of slice sampling started at the mode; Poisson
/// uses exact inverse-CDF sampling over the truncated support (slice_steps
/// is ignored). Deterministic given the stream.
double sample_node_conditional(FamilyTag tag, NodeConditionalParams p, int slice_steps,
                               RandomStream& rng);

}  // namespace sqr
