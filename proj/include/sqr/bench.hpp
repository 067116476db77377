#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sqr/estimation.hpp"
#include "sqr/model.hpp"
#include "sqr/sampling.hpp"

namespace sqr {

/// Circular chain-like graph: node s is linked to its k nearest neighbors
/// on each side (indices mod p) with a constant positive weight, and a
/// constant negative diagonal. With |diag| > 2k * weight the matrix is
/// negative definite by Gershgorin discs.
struct ChainSpec {
    int p = 30;
    int k = 1;
    double diag = -1.0;
    double weight = 0.0;  ///< <= 0 means the default 0.9 / (2k)

    double effective_weight() const { return weight > 0.0 ? weight : 0.9 / (2.0 * k); }
};

/// Exponential model with theta = 0 and the chain-graph Phi. Throws
/// NotNegativeDefinite when the Gershgorin margin is violated.
SqrModel chain_graph(const ChainSpec& spec);

/// Fraction of true edges recovered among the top_n largest |phi_est|
/// off-diagonal pairs (s < t, ties broken lexicographically).
double edge_precision(const Eigen::MatrixXd& phi_true, const Eigen::MatrixXd& phi_est,
                      long top_n);

/// Geometric-mean per-instance likelihood ratio exp((l_model - l_baseline) / n).
double relative_likelihood(double l_model, double l_baseline, long n);

struct ChainExperimentConfig {
    int p = 30;
    double lambda = 1e-5;
    std::vector<int> ks = {1, 2, 3, 4};
    std::vector<long> ns = {100, 200, 400, 800, 1600};
    std::vector<std::uint64_t> seeds = {1};
    GibbsConfig sampler;   // paper protocol: 1000 sweeps, 10 slice steps
    FitConfig fit;         // lambda is overridden by the grid value
    int threads = 0;
};

struct ChainCell {
    int k;
    long n;
    std::uint64_t seed;
    double precision;
    double wall_seconds;
};

/// For each (k, n, seed): build the chain graph, draw n Gibbs samples,
/// fit, and score edge precision at top kp. Bit-reproducible for a fixed
/// seed list.
std::vector<ChainCell> run_chain_experiment(const ChainExperimentConfig& cfg);

/// CSV with header "k,n,seed,precision,wall_seconds".
void write_chain_cells_csv(const std::vector<ChainCell>& cells, std::ostream& out);

}  // namespace sqr
