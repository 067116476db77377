// sqr: command line front end for square-root graphical models.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 numeric/validity error.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sqr/bench.hpp"
#include "sqr/data.hpp"
#include "sqr/errors.hpp"
#include "sqr/estimation.hpp"
#include "sqr/model.hpp"
#include "sqr/sampling.hpp"

namespace {

sqr::FamilyTag parse_family(const std::string& name) {
    const auto tag = sqr::family_from_name(name);
    if (!tag) throw CLI::ValidationError("--family", "unknown family '" + name + "'");
    return *tag;
}

std::string witness_string(const Eigen::VectorXd& u) {
    std::ostringstream out;
    out << "(";
    for (Eigen::Index i = 0; i < u.size(); ++i) out << (i ? ", " : "") << u[i];
    out << ")";
    return out.str();
}

struct CommonFitOptions {
    std::string family;
    std::string input;
    std::string output;
    bool header = false;
};

void cmd_fit(const CommonFitOptions& opt, const sqr::FitConfig& cfg) {
    const sqr::FamilyTag tag = parse_family(opt.family);
    const sqr::DataMatrix data = sqr::load_csv(opt.input, tag, opt.header);
    const sqr::FitResult result = sqr::fit_with_details(data, tag, cfg);
    sqr::save_model_file(result.model, opt.output);

    for (const sqr::NodeFit& node : result.nodes) {
        long nnz = 0;
        for (Eigen::Index t = 0; t < node.phi_off.size(); ++t)
            if (node.phi_off[t] != 0.0) ++nnz;
        std::printf("node %d: iters=%d converged=%s kkt=%.3e objective=%.8f nnz=%ld\n",
                    node.s, node.iters, node.converged ? "yes" : "no", node.kkt_residual,
                    node.objective_trace.back(), nnz);
    }
    std::printf("model written to %s (n=%ld, p=%ld, lambda=%g)\n", opt.output.c_str(),
                data.n(), data.p(), cfg.lambda);
}

void cmd_baseline(const CommonFitOptions& opt) {
    const sqr::FamilyTag tag = parse_family(opt.family);
    const sqr::DataMatrix data = sqr::load_csv(opt.input, tag, opt.header);
    const sqr::SqrModel model = sqr::fit_independent_baseline(data, tag);
    sqr::save_model_file(model, opt.output);
    for (int s = 0; s < model.dim(); ++s)
        std::printf("node %d: phi_ss=%.8g theta=%.8g\n", s, model.phi()(s, s),
                    model.theta()[s]);
    std::printf("independent baseline written to %s\n", opt.output.c_str());
}

void cmd_sample(const std::string& model_path, long n, const sqr::GibbsConfig& cfg,
                std::uint64_t seed, const std::string& output, int threads) {
    const sqr::SqrModel model = sqr::load_model_file(model_path);
    const sqr::NormalizabilityReport report = sqr::check_normalizable(model);
    if (report.status == sqr::Normalizability::Invalid)
        throw sqr::InvalidParams("model is not normalizable: " + report.detail);
    const sqr::DataMatrix samples =
        sqr::gibbs_sample(model, n, cfg, sqr::RandomStream(seed), threads);
    sqr::save_csv(samples, output);
    std::printf("%ld samples (p=%d, %d sweeps, %d slice steps, seed %llu) written to %s\n",
                n, model.dim(), cfg.sweeps, cfg.slice_steps,
                static_cast<unsigned long long>(seed), output.c_str());
}

void cmd_loglik(const std::string& model_path, const std::string& input, bool header,
                const sqr::AisConfig& cfg, std::uint64_t seed,
                const std::string& baseline_path) {
    const sqr::SqrModel model = sqr::load_model_file(model_path);
    const sqr::DataMatrix data = sqr::load_csv(input, model.family(), header);
    const sqr::RandomStream master(seed);

    const sqr::AisResult ais = sqr::ais_log_partition(model, cfg, master.derive(1));
    const double ll = sqr::log_likelihood(model, data, ais);
    std::printf("log_partition: %.10g +/- %.3g\n", ais.log_partition, ais.std_err);
    std::printf("ess: %.1f%s\n", ais.ess, ais.degenerate_weights ? " (degenerate)" : "");
    std::printf("log_likelihood: %.10g\n", ll);
    std::printf("per_instance_mean: %.10g\n", ll / static_cast<double>(data.n()));

    if (!baseline_path.empty()) {
        const sqr::SqrModel base = sqr::load_model_file(baseline_path);
        if (base.family() != model.family())
            throw sqr::SqrError("baseline family differs from the model family");
        const sqr::AisResult base_ais = sqr::ais_log_partition(base, cfg, master.derive(2));
        const double base_ll = sqr::log_likelihood(base, data, base_ais);
        std::printf("baseline_log_likelihood: %.10g\n", base_ll);
        std::printf("relative_likelihood: %.10g\n",
                    sqr::relative_likelihood(ll, base_ll, data.n()));
    }
}

void cmd_check(const std::string& model_path) {
    const sqr::SqrModel model = sqr::load_model_file(model_path);
    const sqr::NormalizabilityReport report = sqr::check_normalizable(model);
    std::printf("%s: %s\n", sqr::to_string(report.status), report.detail.c_str());
    if (report.witness)
        std::printf("witness u = %s\n", witness_string(*report.witness).c_str());
    if (report.status == sqr::Normalizability::Invalid)
        throw sqr::InvalidParams("model failed the normalizability check");
}

void cmd_synth_chain(const sqr::ChainExperimentConfig& cfg, const std::string& output) {
    const std::vector<sqr::ChainCell> cells = sqr::run_chain_experiment(cfg);
    for (const sqr::ChainCell& c : cells)
        std::printf("k=%d n=%ld seed=%llu: precision=%.4f (%.1fs)\n", c.k, c.n,
                    static_cast<unsigned long long>(c.seed), c.precision, c.wall_seconds);
    if (!output.empty()) {
        std::ofstream out(output);
        if (!out) throw sqr::SqrError("cannot open " + output + " for writing");
        sqr::write_chain_cells_csv(cells, out);
        std::printf("results written to %s\n", output.c_str());
    } else {
        sqr::write_chain_cells_csv(cells, std::cout);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"square-root graphical models: fitting, sampling, likelihood"};
    app.require_subcommand(1);

    // fit
    CommonFitOptions fit_opt;
    sqr::FitConfig fit_cfg;
    auto* fit_cmd = app.add_subcommand("fit", "l1-regularized node-wise fit");
    fit_cmd->add_option("--family", fit_opt.family, "exponential | poisson | gaussian")
        ->required();
    fit_cmd->add_option("--input", fit_opt.input, "CSV of observations (rows = instances)")
        ->required();
    fit_cmd->add_option("--output", fit_opt.output, "model file to write")->required();
    fit_cmd->add_option("--lambda", fit_cfg.lambda, "l1 penalty on off-diagonal phi");
    fit_cmd->add_option("--max-iters", fit_cfg.max_iters, "proximal gradient iteration cap");
    fit_cmd->add_option("--grad-tol", fit_cfg.grad_tol, "stationarity tolerance");
    fit_cmd->add_option("--threads", fit_cfg.threads, "worker threads (0 = all)");
    fit_cmd->add_flag("--header", fit_opt.header, "input CSV has a header row");
    fit_cmd->callback([&]() { cmd_fit(fit_opt, fit_cfg); });

    // baseline
    CommonFitOptions base_opt;
    auto* base_cmd = app.add_subcommand("baseline", "independent (diagonal) MLE");
    base_cmd->add_option("--family", base_opt.family, "exponential | poisson | gaussian")
        ->required();
    base_cmd->add_option("--input", base_opt.input, "CSV of observations")->required();
    base_cmd->add_option("--output", base_opt.output, "model file to write")->required();
    base_cmd->add_flag("--header", base_opt.header, "input CSV has a header row");
    base_cmd->callback([&]() { cmd_baseline(base_opt); });

    // sample
    std::string sample_model, sample_output;
    long sample_n = 0;
    std::uint64_t sample_seed = 0;
    int sample_threads = 0;
    sqr::GibbsConfig gibbs_cfg;
    auto* sample_cmd = app.add_subcommand("sample", "Gibbs sampling from a model file");
    sample_cmd->add_option("--model", sample_model, "model file")->required();
    sample_cmd->add_option("--n", sample_n, "number of samples")->required();
    sample_cmd->add_option("--sweeps", gibbs_cfg.sweeps, "Gibbs sweeps per sample");
    sample_cmd->add_option("--slice-steps", gibbs_cfg.slice_steps,
                           "slice iterations per node update");
    sample_cmd->add_option("--seed", sample_seed, "random seed")->required();
    sample_cmd->add_option("--output", sample_output, "CSV to write")->required();
    sample_cmd->add_option("--threads", sample_threads, "worker threads (0 = all)");
    sample_cmd->callback([&]() {
        cmd_sample(sample_model, sample_n, gibbs_cfg, sample_seed, sample_output,
                   sample_threads);
    });

    // loglik
    std::string ll_model, ll_input, ll_baseline;
    bool ll_header = false;
    std::uint64_t ll_seed = 0;
    sqr::AisConfig ais_cfg;
    auto* ll_cmd = app.add_subcommand("loglik", "AIS likelihood of data under a model");
    ll_cmd->add_option("--model", ll_model, "model file")->required();
    ll_cmd->add_option("--input", ll_input, "CSV of observations")->required();
    ll_cmd->add_option("--ais-chains", ais_cfg.num_chains, "AIS chains");
    ll_cmd->add_option("--anneal-steps", ais_cfg.anneal_steps, "annealing transitions");
    ll_cmd->add_option("--gibbs-per-step", ais_cfg.gibbs_per_step,
                       "Gibbs sweeps per annealing step");
    ll_cmd->add_option("--slice-steps", ais_cfg.slice_steps,
                       "slice iterations per node update");
    ll_cmd->add_option("--seed", ll_seed, "random seed")->required();
    ll_cmd->add_option("--baseline", ll_baseline,
                       "second model file; also print the relative likelihood");
    ll_cmd->add_option("--threads", ais_cfg.threads, "worker threads (0 = all)");
    ll_cmd->add_flag("--header", ll_header, "input CSV has a header row");
    ll_cmd->callback(
        [&]() { cmd_loglik(ll_model, ll_input, ll_header, ais_cfg, ll_seed, ll_baseline); });

    // synth-chain
    sqr::ChainExperimentConfig chain_cfg;
    chain_cfg.ks = {1};
    chain_cfg.ns = {400};
    chain_cfg.seeds = {1};
    std::string chain_output;
    auto* chain_cmd = app.add_subcommand(
        "synth-chain", "chain-graph recovery experiment (one cell or a grid)");
    chain_cmd->add_option("--p", chain_cfg.p, "dimension");
    chain_cmd->add_option("--k", chain_cfg.ks, "neighbor counts");
    chain_cmd->add_option("--n", chain_cfg.ns, "sample counts");
    chain_cmd->add_option("--lambda", chain_cfg.lambda, "l1 penalty");
    chain_cmd->add_option("--seed", chain_cfg.seeds, "seeds (one run per seed)");
    chain_cmd->add_option("--sweeps", chain_cfg.sampler.sweeps, "Gibbs sweeps per sample");
    chain_cmd->add_option("--slice-steps", chain_cfg.sampler.slice_steps,
                          "slice iterations per node update");
    chain_cmd->add_option("--max-iters", chain_cfg.fit.max_iters,
                          "proximal gradient iteration cap");
    chain_cmd->add_option("--threads", chain_cfg.threads, "worker threads (0 = all)");
    chain_cmd->add_option("--output", chain_output, "CSV to write (default: stdout)");
    chain_cmd->callback([&]() { cmd_synth_chain(chain_cfg, chain_output); });

    // check
    std::string check_model;
    auto* check_cmd = app.add_subcommand("check", "normalizability certificate or witness");
    check_cmd->add_option("--model", check_model, "model file")->required();
    check_cmd->callback([&]() { cmd_check(check_model); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const sqr::ParseError& e) {
        std::fprintf(stderr, "error: ParseError: %s (row %ld, col %ld)\n", e.what(), e.row,
                     e.col);
        return 3;
    } catch (const sqr::DomainViolation& e) {
        std::fprintf(stderr, "error: DomainViolation: %s (row %ld, col %ld)\n", e.what(),
                     e.row, e.col);
        return 3;
    } catch (const sqr::DegenerateColumn& e) {
        std::fprintf(stderr, "error: DegenerateColumn: %s\n", e.what());
        return 3;
    } catch (const sqr::InvalidParams& e) {
        std::fprintf(stderr, "error: InvalidParams: %s\n", e.what());
        return 4;
    } catch (const sqr::NonConvergence& e) {
        std::fprintf(stderr, "error: NonConvergence: %s\n", e.what());
        return 4;
    } catch (const sqr::NotNegativeDefinite& e) {
        std::fprintf(stderr, "error: NotNegativeDefinite: %s\n", e.what());
        return 4;
    } catch (const sqr::SqrError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 4;
    }
    return 0;
}
