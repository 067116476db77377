#include <doctest.h>

#include <cmath>

#include "sqr/errors.hpp"
#include "sqr/estimation.hpp"
#include "sqr/rng.hpp"
#include "test_helpers.hpp"

using namespace sqr;
using doctest::Approx;

namespace {

DataMatrix exp_iid(long n, long p, std::uint64_t seed) {
    RandomStream rng(seed);
    DataMatrix d;
    d.values.resize(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) d.values(i, j) = rng.exponential(1.0);
    return d;
}

NodeFit truth_params(int s, long p) {
    NodeFit f;
    f.s = s;
    f.theta_s = 0.0;
    f.phi_ss = -1.0;
    f.phi_off = Eigen::VectorXd::Zero(p);
    return f;
}

}  // namespace

TEST_CASE("node_objective at the independent truth") {
    const DataMatrix d = exp_iid(500, 3, 11);
    // eta1 = -1, eta2 = 0: A_node = 0 and B = 0, so the average negative
    // log likelihood is just the column mean
    const auto obj = node_objective(d, FamilyTag::Exponential, 0, truth_params(0, 3), 0.0);
    CHECK(obj.smooth == Approx(d.values.col(0).mean()).epsilon(1e-12));
    CHECK(obj.penalty == 0.0);

    NodeFit withoff = truth_params(0, 3);
    withoff.phi_off[1] = -1.5;
    withoff.phi_off[2] = 0.5;
    const auto pen = node_objective(d, FamilyTag::Exponential, 0, withoff, 1.0);
    CHECK(pen.penalty == Approx(2.0).epsilon(1e-14));
}

TEST_CASE("analytic smooth gradient matches central differences") {
    const DataMatrix d = exp_iid(200, 4, 22);
    RandomStream rng(33);
    const double h = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
        NodeFit f;
        f.s = trial % 4;
        f.theta_s = rng.normal(0.0, 0.5);
        f.phi_ss = -0.3 - rng.uniform01();
        f.phi_off = Eigen::VectorXd::Zero(4);
        for (int t = 0; t < 4; ++t)
            if (t != f.s) f.phi_off[t] = rng.normal(0.0, 0.15);

        auto smooth_at = [&](const NodeFit& g) {
            return node_objective(d, FamilyTag::Exponential, f.s, g, 0.0).smooth;
        };
        const NodeGradient g = node_objective_gradient(d, FamilyTag::Exponential, f.s, f);

        NodeFit up = f, dn = f;
        up.theta_s += h;
        dn.theta_s -= h;
        CHECK(g.g_theta == Approx((smooth_at(up) - smooth_at(dn)) / (2 * h)).epsilon(1e-4));

        up = f;
        dn = f;
        up.phi_ss += h;
        dn.phi_ss -= h;
        CHECK(g.g_diag == Approx((smooth_at(up) - smooth_at(dn)) / (2 * h)).epsilon(1e-4));

        for (int t = 0; t < 4; ++t) {
            if (t == f.s) continue;
            up = f;
            dn = f;
            up.phi_off[t] += h;
            dn.phi_off[t] -= h;
            CHECK(g.g_off[t] ==
                  Approx((smooth_at(up) - smooth_at(dn)) / (2 * h)).epsilon(1e-4).scale(1e-6));
        }
    }
}

TEST_CASE("fit_node: KKT stationarity and monotone trace") {
    const DataMatrix d = exp_iid(400, 3, 44);
    FitConfig cfg;
    cfg.lambda = 0.02;
    const NodeFit fit = fit_node(d, FamilyTag::Exponential, 1, cfg);

    CHECK(fit.converged);
    CHECK(fit.kkt_residual <= cfg.grad_tol);
    CHECK(fit.phi_ss <= cfg.diag_cap);
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
        CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-10);

    // independent recomputation of the stationarity conditions
    const double h = 1e-6;
    NodeFit probe = fit;
    auto smooth_at = [&](const NodeFit& g) {
        return node_objective(d, FamilyTag::Exponential, 1, g, 0.0).smooth;
    };
    for (int t = 0; t < 3; ++t) {
        if (t == 1) continue;
        NodeFit up = probe, dn = probe;
        up.phi_off[t] += h;
        dn.phi_off[t] -= h;
        const double grad = (smooth_at(up) - smooth_at(dn)) / (2 * h);
        if (fit.phi_off[t] == 0.0)
            CHECK(std::fabs(grad) <= cfg.lambda + 1e-3);
        else
            CHECK(std::fabs(grad + cfg.lambda * (fit.phi_off[t] > 0 ? 1.0 : -1.0)) <= 1e-3);
    }
}

TEST_CASE("fit on iid exponential data recovers the independent model") {
    // n = 1600 draws of Exp(1); the fitted diagonal approaches -1 and the
    // off-diagonal stays small at lambda = 0.01 (values derived by running
    // the estimator at larger n: diag -> -1, off -> 0)
    const DataMatrix d = exp_iid(1600, 3, 123);
    FitConfig cfg;
    cfg.lambda = 0.01;
    cfg.threads = 2;
    const SqrModel m = fit(d, FamilyTag::Exponential, cfg);
    for (int s = 0; s < 3; ++s) CHECK(m.phi()(s, s) == Approx(-1.0).epsilon(0.1));
    double max_off = 0.0;
    for (int s = 0; s < 3; ++s)
        for (int t = s + 1; t < 3; ++t) max_off = std::max(max_off, std::fabs(m.phi()(s, t)));
    CHECK(max_off < 0.05);
}

TEST_CASE("huge lambda zeroes every off-diagonal exactly") {
    const DataMatrix d = exp_iid(300, 4, 55);
    FitConfig cfg;
    cfg.lambda = 1e6;
    const FitResult r = fit_with_details(d, FamilyTag::Exponential, cfg);
    for (const NodeFit& node : r.nodes)
        CHECK(node.phi_off.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit is deterministic and permutation-equivariant") {
    const DataMatrix d = exp_iid(250, 3, 66);
    FitConfig cfg;
    cfg.lambda = 0.01;

    const SqrModel a = fit(d, FamilyTag::Exponential, cfg);
    cfg.threads = 3;
    const SqrModel b = fit(d, FamilyTag::Exponential, cfg);
    CHECK((a.phi() - b.phi()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.theta() - b.theta()).cwiseAbs().maxCoeff() == 0.0);

    // permute columns (0 1 2) -> (2 0 1)
    DataMatrix perm;
    perm.values.resize(d.n(), 3);
    const int map[3] = {2, 0, 1};  // column j of perm is column map[j] of d
    for (int j = 0; j < 3; ++j) perm.values.col(j) = d.values.col(map[j]);
    const SqrModel c = fit(perm, FamilyTag::Exponential, cfg);
    for (int s = 0; s < 3; ++s) {
        CHECK(c.theta()[s] == a.theta()[map[s]]);
        for (int t = 0; t < 3; ++t) CHECK(c.phi()(s, t) == a.phi()(map[s], map[t]));
    }
}

TEST_CASE("poisson and gaussian node fits converge") {
    RandomStream rng(77);
    SUBCASE("poisson") {
        DataMatrix d;
        d.values.resize(300, 2);
        for (long i = 0; i < 300; ++i)
            for (long j = 0; j < 2; ++j)
                d.values(i, j) =
                    sample_node_conditional(FamilyTag::Poisson, {0.3, 0.0}, 1, rng);
        FitConfig cfg;
        cfg.lambda = 0.05;
        const FitResult r = fit_with_details(d, FamilyTag::Poisson, cfg);
        for (const auto& node : r.nodes) {
            CHECK(node.converged);
            CHECK(node.kkt_residual <= cfg.grad_tol);
        }
        // diagonal near the generating value log(lambda) = 0.3
        CHECK(r.model.phi()(0, 0) == Approx(0.3).epsilon(0.5));
    }
    SUBCASE("gaussian") {
        DataMatrix d;
        d.values.resize(400, 2);
        for (long i = 0; i < 400; ++i) {
            d.values(i, 0) = rng.normal(1.0, 1.0);
            d.values(i, 1) = rng.normal(-0.5, 2.0);
        }
        FitConfig cfg;
        cfg.lambda = 0.05;
        const FitResult r = fit_with_details(d, FamilyTag::Gaussian, cfg);
        for (const auto& node : r.nodes) {
            CHECK(node.converged);
            CHECK(node.kkt_residual <= cfg.grad_tol);
        }
        CHECK(r.model.phi()(0, 0) == Approx(-0.5).epsilon(0.25));
        CHECK(r.model.phi()(1, 1) == Approx(-0.125).epsilon(0.25));
    }
}

TEST_CASE("fit_independent_baseline") {
    SUBCASE("exponential: rate = 1/mean") {
        DataMatrix d;
        d.values.resize(2, 1);
        d.values << 1.0, 3.0;  // mean 2
        const SqrModel m = fit_independent_baseline(d, FamilyTag::Exponential);
        CHECK(m.phi()(0, 0) == Approx(-0.5).epsilon(1e-14));
        CHECK(m.theta()[0] == 0.0);
    }
    SUBCASE("poisson: phi = log(mean)") {
        DataMatrix d;
        d.values.resize(2, 1);
        d.values << 0.0, 2.0;  // mean 1
        const SqrModel m = fit_independent_baseline(d, FamilyTag::Poisson);
        CHECK(m.phi()(0, 0) == Approx(0.0).scale(1.0).epsilon(1e-14));
    }
    SUBCASE("degenerate columns are rejected") {
        DataMatrix d;
        d.values = Eigen::MatrixXd::Zero(3, 1);
        CHECK_THROWS_AS(fit_independent_baseline(d, FamilyTag::Exponential),
                        DegenerateColumn);
        CHECK_THROWS_AS(fit_independent_baseline(d, FamilyTag::Poisson), DegenerateColumn);
        d.values = Eigen::MatrixXd::Constant(3, 1, 2.5);
        CHECK_THROWS_AS(fit_independent_baseline(d, FamilyTag::Gaussian), DegenerateColumn);
    }
    SUBCASE("baseline log likelihood: closed form vs model evaluation") {
        const DataMatrix d = exp_iid(100, 3, 88);
        const SqrModel m = fit_independent_baseline(d, FamilyTag::Exponential);
        // closed form: sum over columns of n*(log rate) - rate * sum(x)
        double closed = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double rate = -m.phi()(j, j);
            closed += d.n() * std::log(rate) - rate * d.values.col(j).sum();
        }
        // via the model: sum of exponents minus n * A_independent
        double a_ind = 0.0;
        for (int j = 0; j < 3; ++j)
            a_ind += node_log_partition(FamilyTag::Exponential, {m.phi()(j, j), 0.0});
        double via_model = -static_cast<double>(d.n()) * a_ind;
        for (long i = 0; i < d.n(); ++i)
            via_model += unnormalized_log_density(m, d.values.row(i).transpose());
        CHECK(closed == Approx(via_model).epsilon(1e-10));
    }
}
