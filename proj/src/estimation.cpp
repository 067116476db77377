#include "sqr/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sqr/errors.hpp"
#include "sqr/parallel.hpp"

namespace sqr {
namespace {

double soft_threshold(double v, double k) {
    if (v > k) return v - k;
    if (v < -k) return v + k;
    return 0.0;
}

bool caps_diagonal(FamilyTag tag) { return tag != FamilyTag::Poisson; }

/// Shared per-fit precomputation: sufficient statistics of every column.
struct Design {
    Eigen::MatrixXd r;          // sqrt(T(x)), n x p
    Eigen::MatrixXd t;          // T(x), n x p
    Eigen::VectorXd b_mean;     // column means of B(x)
    Eigen::VectorXd t_mean;     // column means of T(x)
    Eigen::VectorXd r_mean;     // column means of sqrt(T(x))
};

Design make_design(const DataMatrix& data, FamilyTag tag) {
    const long n = data.n(), p = data.p();
    Design d;
    d.r.resize(n, p);
    d.t.resize(n, p);
    d.b_mean = Eigen::VectorXd::Zero(p);
    for (long j = 0; j < p; ++j) {
        for (long i = 0; i < n; ++i) {
            const double x = data.values(i, j);
            if (!in_domain(tag, x))
                throw DomainViolation("value outside the " + std::string(family_name(tag)) +
                                          " domain",
                                      i + 1, j + 1);
            d.r(i, j) = sqrt_suff_stat(tag, x);
            d.t(i, j) = suff_stat(tag, x);
            d.b_mean[j] += log_base_measure(tag, x);
        }
        d.b_mean[j] /= static_cast<double>(n);
    }
    d.t_mean = d.t.colwise().mean();
    d.r_mean = d.r.colwise().mean();
    return d;
}

double initial_diagonal(const Design& d, FamilyTag tag, int s, double diag_cap) {
    switch (tag) {
        case FamilyTag::Exponential: {
            const double m = d.t_mean[s];
            if (!(m > 0.0))
                throw DegenerateColumn("column " + std::to_string(s) +
                                       " has zero mean; exponential MLE undefined");
            return std::min(-1.0 / m, diag_cap);
        }
        case FamilyTag::Poisson: {
            const double m = d.t_mean[s];
            if (!(m > 0.0))
                throw DegenerateColumn("column " + std::to_string(s) +
                                       " has zero mean; poisson MLE undefined");
            return std::log(m);
        }
        case FamilyTag::Gaussian: {
            // T = x^2, sqrt(T) = x: variance = mean(T) - mean(x)^2
            const double var = d.t_mean[s] - d.r_mean[s] * d.r_mean[s];
            if (!(var > 0.0))
                throw DegenerateColumn("column " + std::to_string(s) +
                                       " has zero variance; gaussian MLE undefined");
            return std::min(-0.5 / var, diag_cap);
        }
    }
    throw SqrError("unreachable family tag");
}

/// Average negative conditional log likelihood for node s at the given
/// parameters. Throws only if some (eta1, eta2_i) is invalid; the line
/// search treats NonConvergence/Overflow as +inf.
double smooth_objective(const Design& d, FamilyTag tag, int s, double theta, double diag,
                        const Eigen::VectorXd& w) {
    const long n = d.r.rows();
    const Eigen::VectorXd eta2 =
        (Eigen::VectorXd::Constant(n, theta) + 2.0 * (d.r * w)).eval();
    double a_sum = 0.0;
    for (long i = 0; i < n; ++i)
        a_sum += node_log_partition(tag, {diag, eta2[i]});
    const double nd = static_cast<double>(n);
    return -(diag * d.t_mean[s] + eta2.dot(d.r.col(s)) / nd + d.b_mean[s]) + a_sum / nd;
}

struct SmoothEval {
    double value;
    double g_theta;
    double g_diag;
    Eigen::VectorXd g_off;  // length p, entry s zeroed
};

SmoothEval smooth_with_gradient(const Design& d, FamilyTag tag, int s, double theta,
                                double diag, const Eigen::VectorXd& w) {
    const long n = d.r.rows();
    const double nd = static_cast<double>(n);
    const Eigen::VectorXd eta2 =
        (Eigen::VectorXd::Constant(n, theta) + 2.0 * (d.r * w)).eval();
    double a_sum = 0.0, da1_sum = 0.0;
    Eigen::VectorXd da2(n);
    for (long i = 0; i < n; ++i) {
        const NodeConditionalParams p{diag, eta2[i]};
        a_sum += node_log_partition(tag, p);
        const auto [e_t, e_rt] = node_log_partition_grad(tag, p);
        da1_sum += e_t;
        da2[i] = e_rt;
    }
    SmoothEval out;
    out.value = -(diag * d.t_mean[s] + eta2.dot(d.r.col(s)) / nd + d.b_mean[s]) + a_sum / nd;
    out.g_diag = da1_sum / nd - d.t_mean[s];
    out.g_theta = da2.mean() - d.r_mean[s];
    out.g_off = (2.0 / nd) * (d.r.transpose() * (da2 - d.r.col(s)));
    out.g_off[s] = 0.0;
    return out;
}

/// Stationarity residual of the penalized, diagonal-capped problem.
double kkt_residual(const SmoothEval& g, FamilyTag tag, int s, double diag,
                    const Eigen::VectorXd& w, double lambda, double diag_cap) {
    double r = std::fabs(g.g_theta);
    if (caps_diagonal(tag) && diag >= diag_cap - 1e-12)
        r = std::max(r, std::max(0.0, g.g_diag));
    else
        r = std::max(r, std::fabs(g.g_diag));
    for (Eigen::Index t = 0; t < w.size(); ++t) {
        if (t == s) continue;
        if (w[t] == 0.0)
            r = std::max(r, std::max(0.0, std::fabs(g.g_off[t]) - lambda));
        else
            r = std::max(r, std::fabs(g.g_off[t] + lambda * (w[t] > 0.0 ? 1.0 : -1.0)));
    }
    return r;
}

NodeFit fit_node_impl(const Design& d, FamilyTag tag, int s, const FitConfig& cfg) {
    if (cfg.lambda < 0.0) throw SqrError("lambda must be nonnegative");
    if (cfg.max_iters < 1) throw SqrError("max_iters must be at least 1");
    if (caps_diagonal(tag) && !(cfg.diag_cap < 0.0))
        throw SqrError("diag_cap must be negative");
    const long p = d.r.cols();
    if (s < 0 || s >= p) throw SqrError("node index out of range");

    double theta = 0.0;
    double diag = initial_diagonal(d, tag, s, cfg.diag_cap);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);

    NodeFit fit;
    fit.s = s;
    fit.objective_trace.reserve(64);

    SmoothEval g = smooth_with_gradient(d, tag, s, theta, diag, w);
    double f_total = g.value + cfg.lambda * w.template lpNorm<1>();
    fit.objective_trace.push_back(f_total);

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        fit.kkt_residual = kkt_residual(g, tag, s, diag, w, cfg.lambda, cfg.diag_cap);
        fit.iters = iter;
        if (fit.kkt_residual <= cfg.grad_tol) {
            fit.converged = true;
            break;
        }

        double step = cfg.step_init;
        bool accepted = false;
        double theta_c = theta, diag_c = diag, f_c = f_total;
        Eigen::VectorXd w_c;
        while (step > 1e-18) {
            theta_c = theta - step * g.g_theta;
            diag_c = diag - step * g.g_diag;
            if (caps_diagonal(tag)) diag_c = std::min(diag_c, cfg.diag_cap);
            w_c = w - step * g.g_off;
            for (Eigen::Index t = 0; t < p; ++t)
                w_c[t] = soft_threshold(w_c[t], step * cfg.lambda);
            w_c[s] = 0.0;

            double smooth_c;
            try {
                smooth_c = smooth_objective(d, tag, s, theta_c, diag_c, w_c);
            } catch (const NonConvergence&) {
                smooth_c = std::numeric_limits<double>::infinity();
            } catch (const OverflowError&) {
                smooth_c = std::numeric_limits<double>::infinity();
            }
            f_c = smooth_c + cfg.lambda * w_c.template lpNorm<1>();

            const double dx2 = (theta_c - theta) * (theta_c - theta) +
                               (diag_c - diag) * (diag_c - diag) + (w_c - w).squaredNorm();
            if (std::isfinite(f_c) &&
                f_c <= f_total - cfg.sufficient_decrease * dx2 / step) {
                accepted = true;
                break;
            }
            step *= cfg.step_shrink;
        }
        if (!accepted) break;  // no representable progress left

        theta = theta_c;
        diag = diag_c;
        w.swap(w_c);
        f_total = f_c;
        fit.objective_trace.push_back(f_total);
        g = smooth_with_gradient(d, tag, s, theta, diag, w);
    }

    if (!fit.converged) {
        // residual at the final iterate (loop may have exited on budget)
        fit.kkt_residual = kkt_residual(g, tag, s, diag, w, cfg.lambda, cfg.diag_cap);
        fit.converged = fit.kkt_residual <= cfg.grad_tol;
        fit.iters = static_cast<int>(fit.objective_trace.size()) - 1;
    }
    fit.theta_s = theta;
    fit.phi_ss = diag;
    fit.phi_off = std::move(w);
    return fit;
}

}  // namespace

NodeObjective node_objective(const DataMatrix& data, FamilyTag tag, int s,
                             const NodeFit& params, double lambda) {
    const Design d = make_design(data, tag);
    Eigen::VectorXd w = params.phi_off;
    if (w.size() != data.p()) throw SqrError("phi_off must have length p");
    w[s] = 0.0;
    const double smooth = smooth_objective(d, tag, s, params.theta_s, params.phi_ss, w);
    return {smooth, lambda * w.lpNorm<1>()};
}

NodeGradient node_objective_gradient(const DataMatrix& data, FamilyTag tag, int s,
                                     const NodeFit& params) {
    const Design d = make_design(data, tag);
    Eigen::VectorXd w = params.phi_off;
    if (w.size() != data.p()) throw SqrError("phi_off must have length p");
    w[s] = 0.0;
    SmoothEval g = smooth_with_gradient(d, tag, s, params.theta_s, params.phi_ss, w);
    return {g.g_theta, g.g_diag, std::move(g.g_off)};
}

NodeFit fit_node(const DataMatrix& data, FamilyTag tag, int s, const FitConfig& cfg) {
    if (data.n() < 2) throw SqrError("need at least two instances to fit");
    return fit_node_impl(make_design(data, tag), tag, s, cfg);
}

FitResult fit_with_details(const DataMatrix& data, FamilyTag tag, const FitConfig& cfg) {
    if (data.n() < 2) throw SqrError("need at least two instances to fit");
    const long p = data.p();
    const Design d = make_design(data, tag);

    std::vector<NodeFit> nodes(p);
    parallel_for(static_cast<std::size_t>(p), cfg.threads, [&](std::size_t s) {
        nodes[s] = fit_node_impl(d, tag, static_cast<int>(s), cfg);
    });

    Eigen::VectorXd theta(p);
    Eigen::MatrixXd phi(p, p);
    for (long s = 0; s < p; ++s) {
        theta[s] = nodes[s].theta_s;
        phi(s, s) = nodes[s].phi_ss;
    }
    for (long s = 0; s < p; ++s)
        for (long t = s + 1; t < p; ++t) {
            const double avg = 0.5 * (nodes[s].phi_off[t] + nodes[t].phi_off[s]);
            phi(s, t) = avg;
            phi(t, s) = avg;
        }
    return {SqrModel(tag, std::move(theta), std::move(phi)), std::move(nodes)};
}

SqrModel fit(const DataMatrix& data, FamilyTag tag, const FitConfig& cfg) {
    return fit_with_details(data, tag, cfg).model;
}

SqrModel fit_independent_baseline(const DataMatrix& data, FamilyTag tag) {
    if (data.n() < 1) throw SqrError("need at least one instance");
    const long p = data.p();
    validate_domain(data, tag);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(p, p);
    for (long j = 0; j < p; ++j) {
        const double mean = data.values.col(j).mean();
        switch (tag) {
            case FamilyTag::Exponential:
                if (!(mean > 0.0))
                    throw DegenerateColumn("column " + std::to_string(j) + " has zero mean");
                phi(j, j) = -1.0 / mean;
                break;
            case FamilyTag::Poisson:
                if (!(mean > 0.0))
                    throw DegenerateColumn("column " + std::to_string(j) + " has zero mean");
                phi(j, j) = std::log(mean);
                break;
            case FamilyTag::Gaussian: {
                const double var = data.values.col(j).squaredNorm() / data.n() - mean * mean;
                if (!(var > 0.0))
                    throw DegenerateColumn("column " + std::to_string(j) +
                                           " has zero variance");
                phi(j, j) = -0.5 / var;
                theta[j] = mean / var;
                break;
            }
        }
    }
    return SqrModel(tag, std::move(theta), std::move(phi));
}

}  // namespace sqr
