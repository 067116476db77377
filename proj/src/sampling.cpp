#include "sqr/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "sqr/errors.hpp"
#include "sqr/math_util.hpp"
#include "sqr/parallel.hpp"

namespace sqr {

std::vector<double> AisConfig::schedule() const {
    std::vector<double> s = betas;
    if (s.empty()) {
        if (anneal_steps < 1) throw SqrError("anneal_steps must be at least 1");
        s.resize(anneal_steps + 1);
        for (int j = 0; j <= anneal_steps; ++j)
            s[j] = static_cast<double>(j) / anneal_steps;
    }
    if (s.size() < 2 || s.front() != 0.0 || s.back() != 1.0)
        throw SqrError("beta schedule must run from 0 to 1 inclusive");
    for (std::size_t j = 1; j < s.size(); ++j)
        if (!(s[j] > s[j - 1])) throw SqrError("beta schedule must be strictly increasing");
    return s;
}

SqrModel anneal_model(const SqrModel& model, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw SqrError("beta must lie in [0, 1]");
    Eigen::MatrixXd phi = beta * model.phi();
    phi.diagonal() = model.phi().diagonal();
    return SqrModel(model.family(), beta * model.theta(), std::move(phi));
}

Eigen::VectorXd sample_independent(const SqrModel& model, RandomStream& rng) {
    const int p = model.dim();
    Eigen::VectorXd x(p);
    for (int s = 0; s < p; ++s) {
        const double d = model.phi()(s, s);
        switch (model.family()) {
            case FamilyTag::Exponential:
                if (!(d < 0.0)) throw InvalidParams("phi_ss must be negative");
                x[s] = rng.exponential(-d);
                break;
            case FamilyTag::Gaussian:
                if (!(d < 0.0)) throw InvalidParams("phi_ss must be negative");
                x[s] = rng.normal(0.0, std::sqrt(-0.5 / d));
                break;
            case FamilyTag::Poisson:
                x[s] = sample_node_conditional(FamilyTag::Poisson, {d, 0.0}, 1, rng);
                break;
        }
    }
    return x;
}

Eigen::VectorXd gibbs_sweep(const SqrModel& model, Eigen::VectorXd state,
                            const GibbsConfig& cfg, RandomStream& rng) {
    const int p = model.dim();
    if (state.size() != p) throw SqrError("state dimension does not match the model");
    if (cfg.slice_steps < 1) throw SqrError("slice_steps must be at least 1");
    for (int s = 0; s < p; ++s) {
        const NodeConditionalParams pr = node_conditional_params_full(model, s, state);
        state[s] = sample_node_conditional(model.family(), pr, cfg.slice_steps, rng);
    }
    return state;
}

namespace {

Eigen::VectorXd run_chain(const SqrModel& model, const GibbsConfig& cfg, RandomStream rng) {
    if (cfg.sweeps < 1) throw SqrError("sweeps must be at least 1");
    Eigen::VectorXd x;
    if (cfg.init == GibbsInit::ProvidedState) {
        if (!cfg.init_state) throw SqrError("ProvidedState requires init_state");
        if (cfg.init_state->size() != model.dim())
            throw SqrError("init_state dimension does not match the model");
        for (int s = 0; s < model.dim(); ++s)
            if (!in_domain(model.family(), (*cfg.init_state)[s]))
                throw DomainViolation("init_state entry outside the family domain", 0, s + 1);
        x = *cfg.init_state;
    } else {
        x = sample_independent(model, rng);
    }
    for (int sweep = 0; sweep < cfg.sweeps; ++sweep)
        x = gibbs_sweep(model, std::move(x), cfg, rng);
    return x;
}

}  // namespace

DataMatrix gibbs_sample(const SqrModel& model, long n, const GibbsConfig& cfg,
                        const RandomStream& rng, int threads) {
    if (n < 0) throw SqrError("sample count must be nonnegative");
    DataMatrix out;
    out.values.resize(n, model.dim());
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        RandomStream chain_rng = rng.derive(i);
        out.values.row(static_cast<long>(i)) = run_chain(model, cfg, std::move(chain_rng));
    });
    return out;
}

AisResult ais_log_partition(const SqrModel& model, const AisConfig& cfg,
                            const RandomStream& rng) {
    if (cfg.num_chains < 1) throw SqrError("num_chains must be at least 1");
    if (cfg.gibbs_per_step < 1) throw SqrError("gibbs_per_step must be at least 1");
    const std::vector<double> betas = cfg.schedule();

    // Exact normalizer of the beta = 0 model: sum of A_node(phi_ss, 0).
    double log_ind = 0.0;
    for (int s = 0; s < model.dim(); ++s)
        log_ind += node_log_partition(model.family(), {model.phi()(s, s), 0.0});

    // Annealed models are shared read-only across chains.
    std::vector<SqrModel> ladder;
    ladder.reserve(betas.size());
    for (const double b : betas) ladder.push_back(anneal_model(model, b));

    GibbsConfig sweep_cfg;
    sweep_cfg.sweeps = 1;
    sweep_cfg.slice_steps = cfg.slice_steps;

    AisResult res;
    res.config = cfg;
    res.log_independent = log_ind;
    res.log_weights.assign(cfg.num_chains, 0.0);

    parallel_for(static_cast<std::size_t>(cfg.num_chains), cfg.threads, [&](std::size_t c) {
        RandomStream chain_rng = rng.derive(c);
        Eigen::VectorXd x = sample_independent(model, chain_rng);
        double log_w = 0.0;
        for (std::size_t j = 1; j < betas.size(); ++j) {
            log_w += unnormalized_log_density(ladder[j], x) -
                     unnormalized_log_density(ladder[j - 1], x);
            if (j + 1 < betas.size())
                for (int k = 0; k < cfg.gibbs_per_step; ++k)
                    x = gibbs_sweep(ladder[j], std::move(x), sweep_cfg, chain_rng);
        }
        res.log_weights[c] = log_w;
    });

    // log mean weight plus delta-method standard error, computed on the
    // max-shifted weights.
    const double m = *std::max_element(res.log_weights.begin(), res.log_weights.end());
    const long chains = cfg.num_chains;
    double sum = 0.0, sum_sq = 0.0;
    for (const double lw : res.log_weights) {
        const double w = std::exp(lw - m);
        sum += w;
        sum_sq += w * w;
    }
    const double mean = sum / chains;
    res.log_partition = log_ind + m + std::log(mean);
    if (chains > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / chains) / (chains - 1));
        res.std_err = std::sqrt(var / chains) / mean;
    }
    res.ess = sum * sum / std::max(sum_sq, 1e-300);
    res.degenerate_weights = chains > 1 && res.ess < 2.0;
    return res;
}

double log_likelihood(const SqrModel& model, const DataMatrix& data, const AisResult& ais) {
    double total = 0.0;
    for (long i = 0; i < data.n(); ++i)
        total += unnormalized_log_density(model, data.values.row(i).transpose());
    return total - static_cast<double>(data.n()) * ais.log_partition;
}

}  // namespace sqr
