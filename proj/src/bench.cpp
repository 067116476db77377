#include "sqr/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <set>
#include <tuple>

#include "sqr/errors.hpp"
#include "sqr/math_util.hpp"

namespace sqr {

SqrModel chain_graph(const ChainSpec& spec) {
    if (spec.k < 1) throw SqrError("k must be at least 1");
    if (spec.p <= 2 * spec.k) throw SqrError("chain graph requires p > 2k");
    const double w = spec.effective_weight();
    if (!(spec.diag < 0.0) || !(std::fabs(spec.diag) > 2.0 * spec.k * w))
        throw NotNegativeDefinite(
            "chain spec violates the Gershgorin margin |diag| > 2k*weight");

    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(spec.p, spec.p);
    phi.diagonal().setConstant(spec.diag);
    for (int s = 0; s < spec.p; ++s)
        for (int d = 1; d <= spec.k; ++d) {
            const int t = (s + d) % spec.p;
            phi(s, t) = w;
            phi(t, s) = w;
        }
    return SqrModel(FamilyTag::Exponential, Eigen::VectorXd::Zero(spec.p), std::move(phi));
}

double edge_precision(const Eigen::MatrixXd& phi_true, const Eigen::MatrixXd& phi_est,
                      long top_n) {
    const long p = phi_true.rows();
    if (phi_true.cols() != p || phi_est.rows() != p || phi_est.cols() != p)
        throw SqrError("edge_precision requires square matrices of equal size");
    if (top_n < 0) throw SqrError("top_n must be nonnegative");

    std::set<std::pair<long, long>> truth;
    for (long s = 0; s < p; ++s)
        for (long t = s + 1; t < p; ++t)
            if (phi_true(s, t) != 0.0) truth.emplace(s, t);
    if (truth.empty()) throw SqrError("true graph has no edges");

    struct Entry {
        double mag;
        long s, t;
    };
    std::vector<Entry> est;
    est.reserve(p * (p - 1) / 2);
    for (long s = 0; s < p; ++s)
        for (long t = s + 1; t < p; ++t) est.push_back({std::fabs(phi_est(s, t)), s, t});
    std::sort(est.begin(), est.end(), [](const Entry& a, const Entry& b) {
        if (a.mag != b.mag) return a.mag > b.mag;
        return std::tie(a.s, a.t) < std::tie(b.s, b.t);
    });

    long hits = 0;
    const long limit = std::min<long>(top_n, static_cast<long>(est.size()));
    for (long i = 0; i < limit; ++i)
        if (truth.count({est[i].s, est[i].t})) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double relative_likelihood(double l_model, double l_baseline, long n) {
    if (n < 1) throw SqrError("n must be at least 1");
    return std::exp((l_model - l_baseline) / static_cast<double>(n));
}

std::vector<ChainCell> run_chain_experiment(const ChainExperimentConfig& cfg) {
    std::vector<ChainCell> cells;
    for (const int k : cfg.ks) {
        const SqrModel model = chain_graph({cfg.p, k, -1.0, 0.0});
        for (const long n : cfg.ns) {
            for (const std::uint64_t seed : cfg.seeds) {
                const auto start = std::chrono::steady_clock::now();

                // One master stream per cell so cells are independent of
                // the grid iteration order.
                const std::uint64_t cell_seed =
                    splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(k) * 1000003u +
                                                 static_cast<std::uint64_t>(n)));
                const DataMatrix data =
                    gibbs_sample(model, n, cfg.sampler, RandomStream(cell_seed), cfg.threads);

                FitConfig fit_cfg = cfg.fit;
                fit_cfg.lambda = cfg.lambda;
                fit_cfg.threads = cfg.threads;
                const SqrModel fitted = fit(data, FamilyTag::Exponential, fit_cfg);

                const double precision =
                    edge_precision(model.phi(), fitted.phi(), static_cast<long>(k) * cfg.p);
                const double secs =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
                cells.push_back({k, n, seed, precision, secs});
            }
        }
    }
    return cells;
}

void write_chain_cells_csv(const std::vector<ChainCell>& cells, std::ostream& out) {
    out << "k,n,seed,precision,wall_seconds\n";
    for (const ChainCell& c : cells)
        out << c.k << ',' << c.n << ',' << c.seed << ',' << c.precision << ','
            << c.wall_seconds << '\n';
}

}  // namespace sqr
