#include "sqr/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sqr/errors.hpp"
#include "sqr/math_util.hpp"
#include "sqr/quadrature.hpp"
#include "sqr/rng.hpp"

namespace sqr {

SqrModel::SqrModel(FamilyTag tag, Eigen::VectorXd theta, Eigen::MatrixXd phi)
    : tag_(tag), theta_(std::move(theta)), phi_(std::move(phi)) {
    const auto p = theta_.size();
    if (p < 1) throw SqrError("model dimension must be at least 1");
    if (phi_.rows() != p || phi_.cols() != p)
        throw SqrError("phi must be p x p with p matching theta");
    if (!theta_.allFinite() || !phi_.allFinite())
        throw InvalidParams("model parameters must be finite");

    const double asym = (phi_ - phi_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8)
        std::cerr << "sqr: warning: phi asymmetry " << asym
                  << " exceeds 1e-8; symmetrizing\n";
    phi_ = ((phi_ + phi_.transpose()) * 0.5).eval();

    if (tag_ != FamilyTag::Poisson) {
        for (Eigen::Index s = 0; s < p; ++s) {
            if (!(phi_(s, s) < 0.0))
                throw InvalidParams("phi diagonal must be negative for " +
                                    std::string(family_name(tag_)) + " (node " +
                                    std::to_string(s) + ")");
        }
    }
}

double unnormalized_log_density(const SqrModel& model, const Eigen::VectorXd& x) {
    const auto p = model.theta().size();
    if (x.size() != p) throw SqrError("state dimension does not match the model");
    Eigen::VectorXd r(p);
    double b_sum = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (!in_domain(model.family(), x[i]))
            throw DomainViolation("value " + std::to_string(x[i]) + " outside the " +
                                      family_name(model.family()) + " domain",
                                  0, i + 1);
        r[i] = sqrt_suff_stat(model.family(), x[i]);
        b_sum += log_base_measure(model.family(), x[i]);
    }
    return model.theta().dot(r) + r.dot(model.phi() * r) + b_sum;
}

NodeConditionalParams node_conditional_params(const SqrModel& model, int s,
                                              const Eigen::VectorXd& x_minus) {
    const auto p = model.theta().size();
    if (s < 0 || s >= p) throw SqrError("node index out of range");
    if (x_minus.size() != p - 1) throw SqrError("x_minus must have length p-1");
    double dot = 0.0;
    for (Eigen::Index t = 0, j = 0; t < p; ++t) {
        if (t == s) continue;
        if (!in_domain(model.family(), x_minus[j]))
            throw DomainViolation("conditioning value outside the family domain", 0, t + 1);
        dot += model.phi()(s, t) * sqrt_suff_stat(model.family(), x_minus[j]);
        ++j;
    }
    return {model.phi()(s, s), model.theta()[s] + 2.0 * dot};
}

NodeConditionalParams node_conditional_params_full(const SqrModel& model, int s,
                                                   const Eigen::VectorXd& x) {
    // Gibbs hot path: callers supply in-domain states.
    const auto p = model.theta().size();
    double dot = 0.0;
    for (Eigen::Index t = 0; t < p; ++t) {
        if (t == s) continue;
        dot += model.phi()(s, t) * sqrt_suff_stat(model.family(), x[t]);
    }
    return {model.phi()(s, s), model.theta()[s] + 2.0 * dot};
}

RadialParams radial_conditional_params(const SqrModel& model, const Eigen::VectorXd& u) {
    const auto p = model.theta().size();
    if (u.size() != p) throw SqrError("direction dimension does not match the model");
    if (u.minCoeff() < 0.0 || std::fabs(u.sum() - 1.0) > 1e-9)
        throw SqrError("direction must lie on the l1 simplex");
    const Eigen::VectorXd root = u.cwiseSqrt();
    return {root.dot(model.phi() * root), model.theta().dot(root), u};
}

const char* to_string(Normalizability status) {
    switch (status) {
        case Normalizability::Certified: return "Certified";
        case Normalizability::LikelyValid: return "LikelyValid";
        case Normalizability::Invalid: return "Invalid";
    }
    return "?";
}

namespace {

bool negative_definite(const Eigen::MatrixXd& phi) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-phi);
    if (ldlt.info() != Eigen::Success) return false;
    return ldlt.isPositive() && ldlt.vectorD().minCoeff() > 0.0;
}

// Invalid iff the radial exponent cannot decay in direction u: strictly
// positive linear coefficient, or zero linear coefficient with a
// nonnegative sqrt coefficient.
bool probe_fails(double eta1_bar, double eta2_bar) {
    return eta1_bar > 0.0 || (eta1_bar == 0.0 && eta2_bar >= 0.0);
}

}  // namespace

NormalizabilityReport check_normalizable(const SqrModel& model, int probes,
                                         std::uint64_t probe_seed) {
    const int p = model.dim();

    if (model.family() == FamilyTag::Poisson)
        return {Normalizability::Certified, std::nullopt,
                "normalizable for any finite Phi (poisson)"};

    const bool nd = negative_definite(model.phi());

    if (model.family() == FamilyTag::Gaussian) {
        if (nd) return {Normalizability::Certified, std::nullopt, "negative definite"};
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.phi());
        Eigen::VectorXd witness = es.eigenvectors().col(p - 1);
        return {Normalizability::Invalid, witness,
                "phi is not negative definite (max eigenvalue " +
                    std::to_string(es.eigenvalues()[p - 1]) + ")"};
    }

    // Exponential
    if (nd) return {Normalizability::Certified, std::nullopt, "negative definite"};

    // Vertex directions (necessary condition; construction already enforces
    // a negative diagonal, so this can only fire on hand-built edge cases).
    for (int s = 0; s < p; ++s) {
        if (probe_fails(model.phi()(s, s), model.theta()[s])) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
            e[s] = 1.0;
            return {Normalizability::Invalid, e,
                    "vertex direction " + std::to_string(s) + " has eta1_bar >= 0"};
        }
    }

    if (p == 2) {
        // Exact maximum of sqrt(u)' Phi sqrt(u) over the edge. For
        // phi12 <= 0 it sits at a vertex (already checked above); for
        // phi12 > 0 it is the top eigenvalue of the 2x2 block, whose
        // eigenvector is entrywise nonnegative.
        const double a = model.phi()(0, 0), b = model.phi()(1, 1), c = model.phi()(0, 1);
        if (c > 0.0) {
            const double tr = a + b;
            const double disc = std::sqrt((a - b) * (a - b) + 4.0 * c * c);
            const double lmax = 0.5 * (tr + disc);
            Eigen::Vector2d v(c, lmax - a);
            v.normalize();
            Eigen::VectorXd u(2);
            u << v[0] * v[0], v[1] * v[1];
            const double eta2_bar = model.theta().dot(v.cwiseAbs());
            if (probe_fails(lmax, eta2_bar))
                return {Normalizability::Invalid, u,
                        "edge maximum of sqrt(u)' Phi sqrt(u) is " + std::to_string(lmax)};
            return {Normalizability::LikelyValid, std::nullopt,
                    "p=2 exact edge maximum " + std::to_string(lmax) +
                        " < 0, but phi is not negative definite"};
        }
        return {Normalizability::LikelyValid, std::nullopt,
                "p=2 edge maximum at a vertex is negative, but phi is not negative definite"};
    }

    RandomStream rng(probe_seed);
    for (int k = 0; k < probes; ++k) {
        Eigen::VectorXd u(p);
        double total = 0.0;
        for (int i = 0; i < p; ++i) {
            u[i] = rng.exponential(1.0);
            total += u[i];
        }
        u /= total;
        const Eigen::VectorXd root = u.cwiseSqrt();
        const double eta1_bar = root.dot(model.phi() * root);
        if (probe_fails(eta1_bar, model.theta().dot(root)))
            return {Normalizability::Invalid, u,
                    "random direction with eta1_bar = " + std::to_string(eta1_bar)};
    }
    return {Normalizability::LikelyValid, std::nullopt,
            std::to_string(probes) + " simplex probes negative, no definiteness certificate"};
}

namespace {

// Exponent of the 2-d joint in x1 once x2 is integrated/summed out:
// the x2 section is itself a two-parameter node conditional with
// eta1 = phi22 and eta2 = theta2 + 2 phi12 sqrt(T(x1)).
double marginal_exponent(const SqrModel& m, double x1, double inner_tol) {
    const FamilyTag tag = m.family();
    const double r1 = sqrt_suff_stat(tag, x1);
    const double own = m.theta()[0] * r1 + m.phi()(0, 0) * suff_stat(tag, x1) +
                       log_base_measure(tag, x1);
    const NodeConditionalParams inner{m.phi()(1, 1),
                                      m.theta()[1] + 2.0 * m.phi()(0, 1) * r1};
    return own + node_log_partition_quadrature(tag, inner, inner_tol);
}

double exact_log_partition_poisson2(const SqrModel& m, double tol) {
    const double rel_tail = std::min(1e-15, 0.1 * tol);
    LogSumAcc acc;
    double best = kNegInf;
    long best_at = 0;
    for (long x1 = 0; x1 < 200000; ++x1) {
        const double xd = static_cast<double>(x1);
        const NodeConditionalParams inner{m.phi()(1, 1),
                                          m.theta()[1] + 2.0 * m.phi()(0, 1) * std::sqrt(xd)};
        const double lt = m.theta()[0] * std::sqrt(xd) + m.phi()(0, 0) * xd -
                          std::lgamma(xd + 1.0) +
                          poisson_node_sum(inner, rel_tail).log_partition;
        acc.add(lt);
        if (lt > best) {
            best = lt;
            best_at = x1;
        }
        if (x1 > best_at + 5 && lt < best - 50.0) return acc.value();
    }
    throw NonConvergence("2-d poisson summation did not decay within the term cap");
}

}  // namespace

double exact_log_partition_small(const SqrModel& model, double tol) {
    const int p = model.dim();
    if (p > 2) throw SqrError("exact_log_partition_small supports p <= 2 only");
    const FamilyTag tag = model.family();

    if (p == 1)
        return node_log_partition_quadrature(tag, {model.phi()(0, 0), model.theta()[0]}, tol);

    if (tag == FamilyTag::Poisson) return exact_log_partition_poisson2(model, tol);

    const double inner_tol = std::max(0.05 * tol, 1e-12);
    auto exponent = [&](double x1) { return marginal_exponent(model, x1, inner_tol); };

    if (tag == FamilyTag::Exponential) {
        // Coarse geometric scan for the peak and the right cutoff; failure
        // to decay marks a non-normalizable model.
        double shift = exponent(0.0);
        double hi = 1.0;
        int guard = 0;
        for (;;) {
            const double v = exponent(hi);
            shift = std::max(shift, v);
            if (v - shift < -55.0) break;
            hi *= 2.0;
            if (++guard > 48)
                throw NonConvergence("joint tail does not decay; partition diverges");
        }
        return log_integral_exp(exponent, 0.0, hi, 0.5 * tol);
    }

    // Gaussian: expand in both directions around 0 / the 1-d stationary point.
    double center = 0.0;
    {
        // stationary point of the quadratic part: maximize via the
        // equivalent gaussian when available, else stay at 0
        if (negative_definite(model.phi())) {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(-model.phi());
            const Eigen::VectorXd mu = 0.5 * ldlt.solve(model.theta());
            center = mu[0];
        }
    }
    double shift = exponent(center);
    double left = 1.0, right = 1.0;
    int guard = 0;
    while (exponent(center + right) - shift > -55.0) {
        right *= 2.0;
        if (++guard > 48) throw NonConvergence("joint tail does not decay; partition diverges");
    }
    guard = 0;
    while (exponent(center - left) - shift > -55.0) {
        left *= 2.0;
        if (++guard > 48) throw NonConvergence("joint tail does not decay; partition diverges");
    }
    return log_integral_exp(exponent, center - left, center + right, 0.5 * tol);
}

GaussianEquivalent gaussian_equivalent(const SqrModel& model) {
    if (model.family() != FamilyTag::Gaussian)
        throw SqrError("gaussian_equivalent requires a gaussian model");
    if (!negative_definite(model.phi()))
        throw NotNegativeDefinite("phi must be negative definite for the gaussian reduction");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-model.phi());
    const int p = model.dim();
    Eigen::MatrixXd sigma = 0.5 * ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::VectorXd mu = sigma * model.theta();
    return {std::move(mu), std::move(sigma)};
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_model(const SqrModel& model, std::ostream& out) {
    const int p = model.dim();
    out << "sqr-model v1 " << family_name(model.family()) << " p=" << p << "\n";
    for (int i = 0; i < p; ++i) out << (i ? " " : "") << format_double(model.theta()[i]);
    out << "\n";
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) out << (j ? " " : "") << format_double(model.phi()(i, j));
        out << "\n";
    }
}

void save_model_file(const SqrModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SqrError("cannot open " + path + " for writing");
    save_model(model, out);
    if (!out) throw SqrError("failed writing " + path);
}

SqrModel load_model(std::istream& in) {
    std::string magic, version, family, pspec;
    if (!(in >> magic >> version >> family >> pspec))
        throw ParseError("truncated model header", 1);
    if (magic != "sqr-model") throw ParseError("not a sqr-model file", 1);
    if (version != "v1") throw ParseError("unsupported model version '" + version + "'", 1);
    const auto tag = family_from_name(family);
    if (!tag) throw ParseError("unknown family '" + family + "'", 1);
    if (pspec.rfind("p=", 0) != 0) throw ParseError("missing p= in model header", 1);
    long p = 0;
    try {
        p = std::stol(pspec.substr(2));
    } catch (...) {
        throw ParseError("bad dimension '" + pspec + "'", 1);
    }
    if (p < 1 || p > 100000) throw ParseError("bad dimension " + std::to_string(p), 1);

    Eigen::VectorXd theta(p);
    for (long i = 0; i < p; ++i)
        if (!(in >> theta[i])) throw ParseError("truncated theta line", 2, i + 1);
    Eigen::MatrixXd phi(p, p);
    for (long i = 0; i < p; ++i)
        for (long j = 0; j < p; ++j)
            if (!(in >> phi(i, j))) throw ParseError("truncated phi row", 3 + i, j + 1);
    return SqrModel(*tag, std::move(theta), std::move(phi));
}

SqrModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SqrError("cannot open " + path);
    return load_model(in);
}

}  // namespace sqr
