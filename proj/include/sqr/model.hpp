#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>

#include "sqr/family.hpp"

namespace sqr {

/// Joint model over p variables:
///   p(x) ∝ exp( theta' sqrt(T(x)) + sqrt(T(x))' Phi sqrt(T(x)) + sum_s B(x_s) )
/// with Phi symmetric and its diagonal carried inside Phi (the node
/// conditional reads eta1 = phi_ss directly).
///
/// Construction enforces: finite entries, symmetry (asymmetry above 1e-8
/// draws a warning to stderr, then Phi is averaged with its transpose),
/// and phi_ss < 0 for the Exponential and Gaussian families (the vertex
/// direction u = e_s makes this necessary for normalizability).
///
/// Immutable after construction; safe to share across threads.
class SqrModel {
public:
    SqrModel(FamilyTag tag, Eigen::VectorXd theta, Eigen::MatrixXd phi);

    FamilyTag family() const { return tag_; }
    int dim() const { return static_cast<int>(theta_.size()); }
    const Eigen::VectorXd& theta() const { return theta_; }
    const Eigen::MatrixXd& phi() const { return phi_; }

private:
    FamilyTag tag_;
    Eigen::VectorXd theta_;
    Eigen::MatrixXd phi_;
};

/// Natural parameters of the radial conditional in direction u on the
/// l1 simplex: eta1_bar = sqrt(u)' Phi sqrt(u), eta2_bar = theta' sqrt(u).
struct RadialParams {
    double eta1_bar;
    double eta2_bar;
    Eigen::VectorXd u;
};

/// Exponent of the joint density (everything except -A). Throws
/// DomainViolation if any entry of x is outside the family domain.
double unnormalized_log_density(const SqrModel& model, const Eigen::VectorXd& x);

/// Node-conditional parameters of node s given the other coordinates:
///   eta1 = phi_ss, eta2 = theta_s + 2 phi_{s,-s}' sqrt(T(x_minus)).
NodeConditionalParams node_conditional_params(const SqrModel& model, int s,
                                              const Eigen::VectorXd& x_minus);

/// Same, reading the other coordinates out of a full state vector
/// (entry s itself is ignored).
NodeConditionalParams node_conditional_params_full(const SqrModel& model, int s,
                                                   const Eigen::VectorXd& x);

RadialParams radial_conditional_params(const SqrModel& model, const Eigen::VectorXd& u);

/// Verdict of the normalizability check.
enum class Normalizability { Certified, LikelyValid, Invalid };

struct NormalizabilityReport {
    Normalizability status;
    std::optional<Eigen::VectorXd> witness;  ///< direction with eta1_bar >= 0 when Invalid
    std::string detail;
};

const char* to_string(Normalizability status);

/// Checks the radial-conditional normalizability condition
/// (sqrt(u)' Phi sqrt(u) < 0 over the simplex, for the families that need
/// it):
///   Poisson   -> Certified (no constraint on Phi)
///   Gaussian  -> Certified iff -Phi has a Cholesky factorization, else
///                Invalid
///   Exponential -> Certified when Phi is negative definite; otherwise the
///                simplex is probed (vertices, the exact p=2 edge maximum,
///                and `probes` Dirichlet(1) directions for p > 2). A probe
///                with eta1_bar > 0, or eta1_bar = 0 with eta2_bar >= 0,
///                yields Invalid with the witness; all-negative probes
///                without a certificate yield LikelyValid.
NormalizabilityReport check_normalizable(const SqrModel& model, int probes = 10000,
                                         std::uint64_t probe_seed = 20160610);

/// Brute-force log partition A(theta, Phi) for p <= 2 by nested adaptive
/// quadrature (continuous families) or double truncated summation
/// (Poisson), to absolute tolerance tol on the log value.
double exact_log_partition_small(const SqrModel& model, double tol = 1e-8);

/// Gaussian reduction: Sigma = -Phi^{-1}/2, mu = Sigma theta. Throws
/// NotNegativeDefinite unless -Phi admits a Cholesky factorization.
struct GaussianEquivalent {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
};
GaussianEquivalent gaussian_equivalent(const SqrModel& model);

/// Plain-text model format, version 1:
///   sqr-model v1 <family> p=<p>
///   theta entries, whitespace separated, one line
///   p lines with the rows of Phi
/// Values are written with 17 significant digits, so a save/load round
/// trip is bit-faithful for finite doubles.
void save_model(const SqrModel& model, std::ostream& out);
void save_model_file(const SqrModel& model, const std::string& path);
SqrModel load_model(std::istream& in);
SqrModel load_model_file(const std::string& path);

}  // namespace sqr
