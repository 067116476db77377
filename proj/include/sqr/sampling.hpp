#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "sqr/data.hpp"
#include "sqr/model.hpp"
#include "sqr/rng.hpp"

namespace sqr {

enum class GibbsInit { IndependentDraw, ProvidedState };

struct GibbsConfig {
    int sweeps = 1000;       ///< full passes over all p nodes
    int slice_steps = 10;    ///< slice iterations per continuous node update
    GibbsInit init = GibbsInit::IndependentDraw;
    std::optional<Eigen::VectorXd> init_state;  ///< required for ProvidedState
};

struct AisConfig {
    int num_chains = 1000;
    int anneal_steps = 100;  ///< number of annealing transitions (beta moves)
    int gibbs_per_step = 10;
    int slice_steps = 10;
    std::vector<double> betas;  ///< when empty, linear 0..1 with anneal_steps moves
    int threads = 0;

    /// The effective schedule: betas when supplied, otherwise linear.
    std::vector<double> schedule() const;
};

struct AisResult {
    double log_partition = 0.0;        ///< A_independent + log mean weight
    double log_independent = 0.0;      ///< exact normalizer of the beta = 0 model
    std::vector<double> log_weights;   ///< one per chain
    double std_err = 0.0;              ///< delta-method SE of log_partition
    double ess = 0.0;                  ///< effective sample size of the weights
    bool degenerate_weights = false;   ///< ess < 2 (reported, not fatal)
    AisConfig config;
};

/// Interpolates between the independent model and the full model:
/// Phi_beta = beta * Phi_off + Phi_diag, theta_beta = beta * theta.
SqrModel anneal_model(const SqrModel& model, double beta);

/// Exact draw from the independent (beta = 0) model: one value per node
/// with eta1 = phi_ss, eta2 = 0.
Eigen::VectorXd sample_independent(const SqrModel& model, RandomStream& rng);

/// One systematic-scan pass s = 0..p-1 over the node conditionals.
Eigen::VectorXd gibbs_sweep(const SqrModel& model, Eigen::VectorXd state,
                            const GibbsConfig& cfg, RandomStream& rng);

/// n draws, by default from n independent chains (re-initialized from
/// sample_independent and run cfg.sweeps sweeps each, matching the
/// "iterations per sample" protocol). Chain i uses rng.derive(i), so the
/// result does not depend on scheduling.
DataMatrix gibbs_sample(const SqrModel& model, long n, const GibbsConfig& cfg,
                        const RandomStream& rng, int threads = 0);

/// Annealed importance sampling estimate of the joint log partition.
/// Per chain: x0 from the independent model, then for each transition
/// log w += f_{b_j}(x) - f_{b_{j-1}}(x) followed by gibbs_per_step sweeps
/// at b_j (evaluate-then-transition ordering).
AisResult ais_log_partition(const SqrModel& model, const AisConfig& cfg,
                            const RandomStream& rng);

/// Joint log likelihood of the data under the model, using the AIS
/// partition estimate: sum_i f(x_i) - n * log_partition.
double log_likelihood(const SqrModel& model, const DataMatrix& data, const AisResult& ais);

}  // namespace sqr
