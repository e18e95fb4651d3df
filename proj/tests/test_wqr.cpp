#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mrq/error.hpp"
#include "mrq/wqr.hpp"
#include "oracles.hpp"

using namespace mrq;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected mrq::Error");
    return ErrorCode::InvalidArgument;
}

struct Sample {
    std::vector<double> x;
    std::vector<double> w;
};

// Values drawn from a small lattice half the time so ties are common.
Sample random_sample(std::mt19937_64& rng, int max_p) {
    Sample s;
    const int p = 1 + static_cast<int>(rng() % max_p);
    const bool lattice = rng() & 1;
    std::uniform_real_distribution<double> u(-5, 5), uw(0.1, 3);
    for (int i = 0; i < p; ++i) {
        s.x.push_back(lattice ? static_cast<double>(static_cast<int>(rng() % 7)) - 3.0 : u(rng));
        s.w.push_back(uw(rng));
    }
    return s;
}

}  // namespace

TEST_CASE("check loss") {
    CHECK(check_loss(0.0, 0.3) == 0.0);
    CHECK(check_loss(2.0, 0.5) == 1.0);
    CHECK(check_loss(-2.0, 0.5) == 1.0);
    CHECK(check_loss(-1.0, 0.2) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(code_of([] { check_loss(1.0, 0.0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { check_loss(1.0, 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("property: check loss is nonnegative and zero only at zero") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-10, 10), ut(0.001, 0.999);
    for (int i = 0; i < 10000; ++i) {
        const double x = u(rng), t = ut(rng);
        CHECK(check_loss(x, t) == doctest::Approx(oracle::rho(x, t)).epsilon(1e-15));
        CHECK(check_loss(x, t) > 0.0);
    }
}

TEST_CASE("weighted quantile examples") {
    std::vector<double> a{1, 2, 3}, eq{1, 1, 1};
    CHECK(weighted_quantile(a, eq, 0.5) == 2.0);
    std::vector<double> b{0, 10}, wb{3, 1};
    CHECK(weighted_quantile(b, wb, 0.5) == 0.0);
    std::vector<double> c{5}, wc{7};
    for (double t : {0.01, 0.3, 0.5, 0.99}) CHECK(weighted_quantile(c, wc, t) == 5.0);

    // exact cumulative tie takes the smaller value
    std::vector<double> d{1, 2}, wd{1, 1};
    CHECK(weighted_quantile(d, wd, 0.5) == 1.0);
}

TEST_CASE("weighted quantile errors") {
    std::vector<double> none;
    CHECK(code_of([&] { weighted_quantile(none, none, 0.5); }) == ErrorCode::EmptyInput);
    std::vector<double> x{1, 2}, w{1, 0};
    CHECK(code_of([&] { weighted_quantile(x, w, 0.5); }) == ErrorCode::NonPositiveWeight);
    std::vector<double> wn{1, -1};
    CHECK(code_of([&] { weighted_quantile(x, wn, 0.5); }) == ErrorCode::NonPositiveWeight);
    std::vector<double> w1{1};
    CHECK(code_of([&] { weighted_quantile(x, w1, 0.5); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("property: weighted quantile matches brute force") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> ut(0.001, 0.999);
    for (int t = 0; t < 1000; ++t) {
        auto s = random_sample(rng, 20);
        const double tau = (t % 10 == 0) ? 0.5 : ut(rng);
        CHECK(weighted_quantile(s.x, s.w, tau) == oracle::weighted_quantile(s.x, s.w, tau));
    }
}

TEST_CASE("property: invariant to rescaling the weights") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> ut(0.001, 0.999), uc(0.01, 100);
    for (int t = 0; t < 1000; ++t) {
        auto s = random_sample(rng, 20);
        const double tau = ut(rng);
        // powers of two keep the cumulative sums exact
        const double c = std::ldexp(1.0, static_cast<int>(rng() % 21) - 10);
        auto w2 = s.w;
        for (double& w : w2) w *= c;
        CHECK(weighted_quantile(s.x, w2, tau) == weighted_quantile(s.x, s.w, tau));
        const double c2 = uc(rng);
        for (std::size_t i = 0; i < w2.size(); ++i) w2[i] = s.w[i] * c2;
        CHECK(weighted_quantile(s.x, w2, tau) == oracle::weighted_quantile(s.x, w2, tau));
    }
}

TEST_CASE("property: returned value minimizes the weighted check loss") {
    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> ut(0.01, 0.99);
    for (int t = 0; t < 300; ++t) {
        auto s = random_sample(rng, 20);
        const double tau = ut(rng);
        const double q = weighted_quantile(s.x, s.w, tau);
        const double at_q = weighted_check_loss(s.x, s.w, q, tau);
        const auto [lo, hi] = std::minmax_element(s.x.begin(), s.x.end());
        const int grid = 2000;
        for (int k = 0; k <= grid; ++k) {
            const double theta = *lo + (*hi - *lo) * k / grid;
            const double v = oracle::check_objective(s.x, s.w, theta, tau);
            CHECK(at_q <= v + 1e-12 * std::max(1.0, std::abs(v)));
        }
    }
}

TEST_CASE("property: translation equivariance") {
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> ut(0.001, 0.999);
    for (int t = 0; t < 1000; ++t) {
        // dyadic lattice values and shifts keep the additions exact
        Sample s;
        const int p = 1 + static_cast<int>(rng() % 20);
        for (int i = 0; i < p; ++i) {
            s.x.push_back(static_cast<double>(static_cast<int>(rng() % 41) - 20) / 8.0);
            s.w.push_back(std::uniform_real_distribution<double>(0.1, 3)(rng));
        }
        const double c = static_cast<double>(static_cast<int>(rng() % 801) - 400) / 16.0;
        auto shifted = s.x;
        for (double& v : shifted) v += c;
        const double tau = ut(rng);
        CHECK(weighted_quantile(shifted, s.w, tau) == weighted_quantile(s.x, s.w, tau) + c);
    }
    // generic reals, to rounding
    for (int t = 0; t < 1000; ++t) {
        auto s = random_sample(rng, 20);
        const double c = std::uniform_real_distribution<double>(-100, 100)(rng);
        auto shifted = s.x;
        for (double& v : shifted) v += c;
        const double tau = ut(rng);
        CHECK(weighted_quantile(shifted, s.w, tau) ==
              doctest::Approx(weighted_quantile(s.x, s.w, tau) + c).epsilon(1e-12).scale(100));
    }
}

TEST_CASE("property: consistency window") {
    std::mt19937_64 rng(36);
    const double qs[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    for (double qm : qs) {
        for (double qp : qs) {
            if (qm + qp >= 1.0 - 1e-12) continue;
            for (int rep = 0; rep < 20; ++rep) {
                const int nm = 1 + static_cast<int>(rng() % 8), nz = 1 + static_cast<int>(rng() % 4),
                          np = 1 + static_cast<int>(rng() % 8);
                std::uniform_real_distribution<double> uw(0.5, 2), uv(0.1, 5);
                std::vector<double> x, w;
                auto add_group = [&](int n, double share, double sign) {
                    std::vector<double> raw(n);
                    double tot = 0;
                    for (double& r : raw) tot += (r = uw(rng));
                    for (double r : raw) {
                        x.push_back(sign * uv(rng));
                        w.push_back(share * r / tot);
                    }
                };
                add_group(nm, qm, -1.0);
                add_group(nz, 1.0 - qm - qp, 0.0);
                add_group(np, qp, 1.0);
                for (int k = 1; k <= 99; ++k) {
                    const double tau = k / 100.0;
                    const double q = weighted_quantile(x, w, tau);
                    if (tau >= qm + 1e-9 && tau <= 1.0 - qp - 1e-9) {
                        CHECK(q == 0.0);
                    } else if (tau < qm - 1e-9 || tau > 1.0 - qp + 1e-9) {
                        CHECK(q != 0.0);
                    }
                }
            }
        }
    }
}

TEST_CASE("ald log density") {
    CHECK(ald_logpdf(0.3, {0.3, 0.5, 1.0}, 1.0) == doctest::Approx(std::log(0.25)).epsilon(1e-15));
    CHECK(ald_logpdf(1.3, {0.3, 0.5, 1.0}, 1.0) == doctest::Approx(std::log(0.25) - 0.5).epsilon(1e-15));
    CHECK(ald_logpdf(0.0, {0.0, 0.9, 2.0}, 1.0) == doctest::Approx(std::log(2 * 0.09)).epsilon(1e-14));
    CHECK_THROWS_AS(ald_logpdf(0.0, {0.0, 1.0, 1.0}, 1.0), Error);
    CHECK_THROWS_AS(ald_logpdf(0.0, {0.0, 0.5, 0.0}, 1.0), Error);
    CHECK_THROWS_AS(ald_logpdf(0.0, {0.0, 0.5, 1.0}, 0.0), Error);
}

TEST_CASE("log likelihood") {
    std::vector<double> r0{0}, w0{1};
    CHECK(log_likelihood(r0, w0, {0.0, 0.5, 1.0}) == doctest::Approx(std::log(0.25)).epsilon(1e-15));
    std::vector<double> r{1, -1}, w{1, 1};
    CHECK(log_likelihood(r, w, {0.0, 0.5, 2.0}) == doctest::Approx(2 * std::log(0.5) - 2).epsilon(1e-15));
    std::vector<double> none;
    CHECK(code_of([&] { log_likelihood(none, none, {}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("property: log likelihood is the sum of log densities and translation invariant") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(-3, 3), uw(0.1, 5), ut(0.01, 0.99), ul(0.1, 10);
    for (int t = 0; t < 500; ++t) {
        auto s = random_sample(rng, 30);
        AldParams p{u(rng), ut(rng), ul(rng)};
        double sum = 0;
        for (std::size_t i = 0; i < s.x.size(); ++i) sum += ald_logpdf(s.x[i], p, s.w[i]);
        const double ll = log_likelihood(s.x, s.w, p);
        CHECK(ll == doctest::Approx(sum).epsilon(1e-12));
        CHECK(ll == doctest::Approx(oracle::ald_loglik(s.x, s.w, p.theta, p.tau, p.lambda)).epsilon(1e-12));

        const double c = u(rng) * 10;
        auto shifted = s.x;
        for (double& v : shifted) v += c;
        CHECK(log_likelihood(shifted, s.w, {p.theta + c, p.tau, p.lambda}) ==
              doctest::Approx(ll).epsilon(1e-9));
    }
}

TEST_CASE("lambda update") {
    std::vector<double> r{1, -1}, w{1, 1};
    CHECK(update_lambda(r, w, 0.0, 0.5) == 2.0);
    std::vector<double> same{0.7, 0.7};
    CHECK(code_of([&] { update_lambda(same, w, 0.7, 0.5); }) == ErrorCode::DegenerateFit);

    std::mt19937_64 rng(38);
    std::uniform_real_distribution<double> u(-3, 3), ut(0.01, 0.99);
    for (int t = 0; t < 200; ++t) {
        auto s = random_sample(rng, 20);
        s.x.push_back(100.0);
        s.w.push_back(1.0);
        const double theta = u(rng), tau = ut(rng);
        auto w2 = s.w;
        for (double& v : w2) v *= 2;
        const double l1 = update_lambda(s.x, s.w, theta, tau);
        CHECK(update_lambda(s.x, w2, theta, tau) == doctest::Approx(l1 / 2).epsilon(1e-14));
        CHECK(l1 == doctest::Approx(s.x.size() / oracle::check_objective(s.x, s.w, theta, tau)).epsilon(1e-12));
    }
}

TEST_CASE("tau update") {
    CHECK(tau_from_score(0.0, 10.0) == 0.5);
    CHECK(tau_from_score(-0.0, 1.0) == 0.5);
    CHECK(tau_from_score(5.0, 10.0) == doctest::Approx(oracle::tau_root(5.0, 10.0)).epsilon(1e-14));
    CHECK(tau_from_score(5.0, 10.0) == doctest::Approx(0.4384471871911697).epsilon(1e-14));
    CHECK(tau_from_score(1.0, 3.0) < 0.5);
    CHECK(tau_from_score(-1.0, 3.0) > 0.5);

    std::vector<double> sym{-1, 1}, w{1, 1};
    CHECK(update_tau(sym, w, 0.0, 3.0) == 0.5);
    std::vector<double> up{1, 2, 3}, w3{1, 1, 1};
    // a = 2 * (1 + 2 + 3 - 3) = 6 with theta = 1
    CHECK(update_tau(up, w3, 1.0, 2.0) == doctest::Approx(oracle::tau_root(6.0, 3.0)).epsilon(1e-14));

    // huge scores stay inside the clamp
    CHECK(tau_from_score(1e300, 1.0) >= kTauFloor);
    CHECK(tau_from_score(-1e300, 1.0) <= 1.0 - kTauFloor);
}

TEST_CASE("property: tau solves the quadratic and matches the textbook root") {
    std::mt19937_64 rng(39);
    std::uniform_real_distribution<double> ua(-100, 100);
    for (int t = 0; t < 10000; ++t) {
        const double a = ua(rng);
        const double p = 1 + static_cast<double>(rng() % 200);
        const double tau = tau_from_score(a, p);
        CHECK(std::abs(a * tau * tau - tau * (2 * p + a) + p) < 1e-9 * p);
        CHECK(tau == doctest::Approx(oracle::tau_root(a, p)).epsilon(1e-10));
        CHECK(tau > 0.0);
        CHECK(tau < 1.0);
    }
}

TEST_CASE("property: tau sign law") {
    std::mt19937_64 rng(40);
    std::uniform_real_distribution<double> u(-3, 3), ul(0.01, 50);
    for (int t = 0; t < 5000; ++t) {
        auto s = random_sample(rng, 30);
        const double theta = (t % 3 == 0) ? s.x[rng() % s.x.size()] : u(rng);
        long double sum = 0;
        for (std::size_t i = 0; i < s.x.size(); ++i) sum += static_cast<long double>(s.w[i]) * (s.x[i] - theta);
        const double tau = update_tau(s.x, s.w, theta, ul(rng));
        if (sum > 0) CHECK(tau < 0.5);
        else if (sum < 0) CHECK(tau > 0.5);
        else CHECK(tau == 0.5);
    }
}
