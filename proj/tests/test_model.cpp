#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sqr/bench.hpp"
#include "sqr/errors.hpp"
#include "sqr/model.hpp"
#include "sqr/quadrature.hpp"
#include "sqr/rng.hpp"
#include "test_helpers.hpp"

using namespace sqr;
using doctest::Approx;

namespace {

SqrModel exp2_dep() {
    Eigen::MatrixXd phi(2, 2);
    phi << -1.0, 0.3, 0.3, -1.0;
    return SqrModel(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi);
}

Eigen::MatrixXd random_negdef(int p, RandomStream& rng) {
    Eigen::MatrixXd m(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) m(i, j) = rng.normal(0.0, 1.0);
    return -(m * m.transpose() + 0.3 * Eigen::MatrixXd::Identity(p, p));
}

}  // namespace

TEST_CASE("construction enforces the invariants") {
    Eigen::MatrixXd phi(2, 2);
    phi << -1.0, 0.2, 0.2, 0.0;  // zero diagonal entry
    CHECK_THROWS_AS(SqrModel(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi),
                    InvalidParams);
    CHECK_THROWS_AS(SqrModel(FamilyTag::Gaussian, Eigen::VectorXd::Zero(2), phi),
                    InvalidParams);
    CHECK_NOTHROW(SqrModel(FamilyTag::Poisson, Eigen::VectorXd::Zero(2), phi));

    Eigen::MatrixXd asym(2, 2);
    asym << -1.0, 0.4, 0.2, -1.0;
    const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), asym);
    CHECK(m.phi()(0, 1) == Approx(0.3).epsilon(1e-15));
    CHECK(m.phi()(0, 1) == m.phi()(1, 0));
}

TEST_CASE("unnormalized_log_density: direct values and domain checks") {
    {
        Eigen::MatrixXd phi(2, 2);
        phi << -1.0, 0.0, 0.0, -1.0;
        const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi);
        Eigen::VectorXd x(2);
        x << 1.0, 2.0;
        CHECK(unnormalized_log_density(m, x) == Approx(-3.0).epsilon(1e-14));
        x << -0.5, 1.0;
        CHECK_THROWS_AS(unnormalized_log_density(m, x), DomainViolation);
    }
    {
        Eigen::MatrixXd phi(1, 1);
        phi << -0.5;
        const SqrModel m(FamilyTag::Poisson, Eigen::VectorXd::Zero(1), phi);
        Eigen::VectorXd x(1);
        x << 2.0;
        CHECK(unnormalized_log_density(m, x) == Approx(-1.0 - std::log(2.0)).epsilon(1e-14));
        x << 1.5;
        CHECK_THROWS_AS(unnormalized_log_density(m, x), DomainViolation);
    }
}

TEST_CASE("node_conditional_params: formula and density-ratio consistency") {
    {
        Eigen::MatrixXd phi(2, 2);
        phi << -1.0, 0.0, 0.0, -1.0;
        const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi);
        Eigen::VectorXd rest(1);
        rest << 7.3;
        const auto p = node_conditional_params(m, 0, rest);
        CHECK(p.eta1 == -1.0);
        CHECK(p.eta2 == 0.0);
    }
    {
        Eigen::MatrixXd phi(2, 2);
        phi << -1.0, 0.3, 0.3, -1.0;
        Eigen::VectorXd theta(2);
        theta << 0.5, 0.0;
        const SqrModel m(FamilyTag::Exponential, theta, phi);
        Eigen::VectorXd rest(1);
        rest << 4.0;
        const auto p = node_conditional_params(m, 0, rest);
        CHECK(p.eta1 == Approx(-1.0));
        CHECK(p.eta2 == Approx(0.5 + 2.0 * 0.3 * 2.0).epsilon(1e-14));
    }
    // exp(g(a) - g(b)) from node params equals the joint density ratio
    {
        RandomStream rng(77);
        const SqrModel m = exp2_dep();
        for (int trial = 0; trial < 25; ++trial) {
            Eigen::VectorXd x(2);
            x << rng.exponential(1.0), rng.exponential(1.0);
            const double a = rng.exponential(1.0);
            const double b = rng.exponential(1.0);
            for (int s = 0; s < 2; ++s) {
                const auto p = node_conditional_params_full(m, s, x);
                Eigen::VectorXd xa = x, xb = x;
                xa[s] = a;
                xb[s] = b;
                const double lhs = node_exponent(FamilyTag::Exponential, p, a) -
                                   node_exponent(FamilyTag::Exponential, p, b);
                const double rhs =
                    unnormalized_log_density(m, xa) - unnormalized_log_density(m, xb);
                CHECK(lhs == Approx(rhs).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("radial_conditional_params") {
    const SqrModel m = exp2_dep();
    Eigen::VectorXd e1(2);
    e1 << 1.0, 0.0;
    const RadialParams vertex = radial_conditional_params(m, e1);
    CHECK(vertex.eta1_bar == Approx(-1.0));
    CHECK(vertex.eta2_bar == Approx(0.0).scale(1.0));

    Eigen::MatrixXd phi(2, 2);
    phi << -1.0, 0.4, 0.4, -1.0;
    const SqrModel m2(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi);
    Eigen::VectorXd mid(2);
    mid << 0.5, 0.5;
    CHECK(radial_conditional_params(m2, mid).eta1_bar == Approx(-0.6).epsilon(1e-14));

    Eigen::VectorXd bad(2);
    bad << 0.7, 0.7;
    CHECK_THROWS_AS(radial_conditional_params(m2, bad), SqrError);
}

TEST_CASE("check_normalizable") {
    SUBCASE("negative definite is certified") {
        const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(3),
                         -Eigen::MatrixXd::Identity(3, 3));
        const auto report = check_normalizable(m);
        CHECK(report.status == Normalizability::Certified);
        CHECK(report.detail == "negative definite");
    }
    SUBCASE("p=2 with a strong positive edge is invalid with witness (1/2, 1/2)") {
        Eigen::MatrixXd phi(2, 2);
        phi << -1.0, 1.5, 1.5, -1.0;
        const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi);
        const auto report = check_normalizable(m);
        REQUIRE(report.status == Normalizability::Invalid);
        REQUIRE(report.witness.has_value());
        CHECK((*report.witness)[0] == Approx(0.5).epsilon(1e-12));
        CHECK((*report.witness)[1] == Approx(0.5).epsilon(1e-12));
        const auto rad = radial_conditional_params(m, *report.witness);
        CHECK(rad.eta1_bar == Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("chain graphs are certified (Gershgorin)") {
        const auto report = check_normalizable(chain_graph({30, 2}));
        CHECK(report.status == Normalizability::Certified);
    }
    SUBCASE("p=2 positive edge below the eigenvalue threshold is likely-valid") {
        // eigenvalues -1 +/- 0.9: negative definite fails only beyond 1.0
        Eigen::MatrixXd phi(2, 2);
        phi << -1.0, 0.9, 0.9, -1.0;
        const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi);
        CHECK(check_normalizable(m).status == Normalizability::Certified);
        phi << -1.0, 1.05, 1.05, -1.0;  // indefinite but the probe is exact
        const SqrModel m2(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi);
        CHECK(check_normalizable(m2).status == Normalizability::Invalid);
    }
    SUBCASE("p=3 exponential, indefinite but simplex-negative -> likely valid") {
        // strong negative edges break definiteness without violating the
        // simplex condition
        Eigen::MatrixXd phi(3, 3);
        phi << -1.0, -3.0, 0.0, -3.0, -1.0, 0.0, 0.0, 0.0, -1.0;
        const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(3), phi);
        const auto report = check_normalizable(m);
        CHECK(report.status == Normalizability::LikelyValid);
    }
    SUBCASE("p=3 exponential with a dominating positive edge -> invalid by probing") {
        Eigen::MatrixXd phi(3, 3);
        phi << -1.0, 2.0, 0.0, 2.0, -1.0, 0.0, 0.0, 0.0, -1.0;
        const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(3), phi);
        const auto report = check_normalizable(m);
        REQUIRE(report.status == Normalizability::Invalid);
        REQUIRE(report.witness.has_value());
        CHECK(radial_conditional_params(m, *report.witness).eta1_bar >= 0.0);
    }
    SUBCASE("gaussian: certified iff negative definite") {
        const SqrModel good(FamilyTag::Gaussian, Eigen::VectorXd::Zero(2),
                            -0.5 * Eigen::MatrixXd::Identity(2, 2));
        CHECK(check_normalizable(good).status == Normalizability::Certified);
        Eigen::MatrixXd phi(2, 2);
        phi << -0.5, 1.0, 1.0, -0.5;
        const SqrModel bad(FamilyTag::Gaussian, Eigen::VectorXd::Zero(2), phi);
        CHECK(check_normalizable(bad).status == Normalizability::Invalid);
    }
    SUBCASE("poisson: always certified") {
        Eigen::MatrixXd phi(2, 2);
        phi << 3.0, 5.0, 5.0, 2.0;
        const SqrModel m(FamilyTag::Poisson, Eigen::VectorXd::Zero(2), phi);
        CHECK(check_normalizable(m).status == Normalizability::Certified);
    }
}

TEST_CASE("exact_log_partition_small") {
    SUBCASE("independent exponential product") {
        Eigen::MatrixXd phi(2, 2);
        phi << -1.0, 0.0, 0.0, -2.0;
        const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi);
        CHECK(exact_log_partition_small(m, 1e-9) == Approx(-std::log(2.0)).epsilon(1e-8));
    }
    SUBCASE("independent poisson: e * e") {
        const SqrModel m(FamilyTag::Poisson, Eigen::VectorXd::Zero(2),
                         Eigen::MatrixXd::Zero(2, 2));
        CHECK(exact_log_partition_small(m, 1e-9) == Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("frozen positive-dependency value") {
        CHECK(exact_log_partition_small(exp2_dep(), 1e-10) ==
              Approx(0.55792770647470602).epsilon(1e-8));
    }
    SUBCASE("gaussian p=2 against the closed form") {
        Eigen::MatrixXd phi(2, 2);
        phi << -1.0, 0.2, 0.2, -0.8;
        Eigen::VectorXd theta(2);
        theta << 0.5, -0.3;
        const SqrModel m(FamilyTag::Gaussian, theta, phi);
        const Eigen::MatrixXd neg = -phi;
        const double closed = std::log(kPi) - 0.5 * std::log(neg.determinant()) +
                              0.25 * theta.dot(neg.inverse() * theta);
        CHECK(exact_log_partition_small(m, 1e-9) == Approx(closed).epsilon(1e-8));
    }
    SUBCASE("independence reduction matches the node normalizers") {
        Eigen::MatrixXd phi(2, 2);
        phi << -0.7, 0.0, 0.0, -1.3;
        const SqrModel m(FamilyTag::Exponential, Eigen::VectorXd::Zero(2), phi);
        const double a = node_log_partition(FamilyTag::Exponential, {-0.7, 0.0}) +
                         node_log_partition(FamilyTag::Exponential, {-1.3, 0.0});
        CHECK(exact_log_partition_small(m, 1e-9) == Approx(a).epsilon(1e-8));
    }
}

TEST_CASE("radial decomposition of the p=2 joint partition") {
    // Change of variables x = z u(t), u(t) = (t, 1-t): dx = z dz dt, so
    //   A = log int_0^1 int_0^inf exp(eta1_bar(t) z) z dz dt
    //     = log int_0^1 eta1_bar(t)^{-2} dt
    // for theta = 0 (the z-weighted radial normalizer in closed form).
    const SqrModel m = exp2_dep();
    auto eta1_bar = [&](double t) {
        Eigen::VectorXd u(2);
        u << t, 1.0 - t;
        return radial_conditional_params(m, u).eta1_bar;
    };
    const double inner = integrate_adaptive(
        [&](double t) {
            const double e = eta1_bar(t);
            return 1.0 / (e * e);
        },
        0.0, 1.0, 1e-12);
    CHECK(exact_log_partition_small(m, 1e-10) == Approx(std::log(inner)).epsilon(1e-4));
}

TEST_CASE("gaussian_equivalent") {
    SUBCASE("identity covariance") {
        const SqrModel m(FamilyTag::Gaussian, Eigen::VectorXd::Zero(2),
                         -0.5 * Eigen::MatrixXd::Identity(2, 2));
        const auto g = gaussian_equivalent(m);
        CHECK(g.sigma.isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-12));
        CHECK(g.mu.norm() == Approx(0.0).scale(1.0).epsilon(1e-14));
    }
    SUBCASE("mean maps through sigma") {
        Eigen::VectorXd theta(2);
        theta << 1.0, 0.0;
        const SqrModel m(FamilyTag::Gaussian, theta, -0.5 * Eigen::MatrixXd::Identity(2, 2));
        const auto g = gaussian_equivalent(m);
        CHECK(g.mu[0] == Approx(1.0).epsilon(1e-12));
        CHECK(g.mu[1] == Approx(0.0).scale(1.0).epsilon(1e-14));
    }
    SUBCASE("density difference is constant in x") {
        RandomStream rng(101);
        for (int trial = 0; trial < 5; ++trial) {
            const int p = 2 + static_cast<int>(rng.uniform01() * 3.0);
            const Eigen::MatrixXd phi = random_negdef(p, rng);
            Eigen::VectorXd theta(p);
            for (int i = 0; i < p; ++i) theta[i] = rng.normal(0.0, 1.0);
            const SqrModel m(FamilyTag::Gaussian, theta, phi);
            const auto g = gaussian_equivalent(m);
            const Eigen::MatrixXd prec = g.sigma.inverse();
            const double logdet = std::log(g.sigma.determinant());

            double first = 0.0, mean = 0.0, m2 = 0.0;
            for (int i = 0; i < 100; ++i) {
                Eigen::VectorXd x(p);
                for (int j = 0; j < p; ++j) x[j] = rng.normal(0.0, 2.0);
                const Eigen::VectorXd c = x - g.mu;
                const double normal_logpdf = -0.5 * (p * std::log(2.0 * kPi) + logdet +
                                                     c.dot(prec * c));
                const double diff = unnormalized_log_density(m, x) - normal_logpdf;
                if (i == 0) first = diff;
                const double centered = diff - first;
                mean += centered;
                m2 += centered * centered;
            }
            mean /= 100.0;
            CHECK(m2 / 100.0 - mean * mean < 1e-18);
        }
    }
    SUBCASE("requires negative definiteness") {
        Eigen::MatrixXd phi(2, 2);
        phi << -0.5, 1.0, 1.0, -0.5;
        const SqrModel m(FamilyTag::Gaussian, Eigen::VectorXd::Zero(2), phi);
        CHECK_THROWS_AS(gaussian_equivalent(m), NotNegativeDefinite);
    }
}

TEST_CASE("model serialization round-trips bitwise") {
    RandomStream rng(999);
    for (int trial = 0; trial < 10; ++trial) {
        const int p = 1 + static_cast<int>(rng.uniform01() * 6.0);
        Eigen::MatrixXd phi = random_negdef(p, rng);
        Eigen::VectorXd theta(p);
        for (int i = 0; i < p; ++i) theta[i] = rng.normal(0.0, 3.0) * std::exp(rng.normal(0, 4));
        const SqrModel m(FamilyTag::Exponential, theta, phi);

        std::stringstream buf;
        save_model(m, buf);
        const SqrModel loaded = load_model(buf);
        CHECK(loaded.family() == m.family());
        REQUIRE(loaded.dim() == m.dim());
        for (int i = 0; i < p; ++i) CHECK(loaded.theta()[i] == m.theta()[i]);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) CHECK(loaded.phi()(i, j) == m.phi()(i, j));
    }
    SUBCASE("header errors are reported") {
        std::stringstream bad("sqr-model v2 exponential p=1\n0\n-1\n");
        CHECK_THROWS_AS(load_model(bad), ParseError);
        std::stringstream bad2("sqr-model v1 weibull p=1\n0\n-1\n");
        CHECK_THROWS_AS(load_model(bad2), ParseError);
        std::stringstream bad3("sqr-model v1 exponential p=2\n0 0\n-1 0\n");
        CHECK_THROWS_AS(load_model(bad3), ParseError);
    }
}
