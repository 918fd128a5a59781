#include <doctest.h>

#include <cmath>
#include <vector>

#include "refl/oracle.hpp"
#include "refl/rng.hpp"
#include "refl/scores.hpp"
#include "refl/solver.hpp"
#include "refl/tilt.hpp"

using namespace refl;

TEST_CASE("simplex search, trivial radii") {
    const std::vector<double> s{0.2, 1.4, 0.9};
    const std::vector<double> w{0.5, 0.2, 0.3};
    const double base = 0.5 * 0.2 + 0.2 * 1.4 + 0.3 * 0.9;

    const auto zero = oracle::simplex_worst_case(s, w, 0.0);
    CHECK(zero.value == doctest::Approx(base).epsilon(1e-9));

    // beyond log(1/pi) everything lands on the maximal score
    const auto big = oracle::simplex_worst_case(s, w, std::log(1.0 / 0.2) + 0.1);
    CHECK(big.value == doctest::Approx(1.4).epsilon(1e-9));
}

TEST_CASE("simplex search agrees with the two-point closed form") {
    const std::vector<double> s{0.0, 1.0};
    const std::vector<double> w{0.5, 0.5};
    const auto rep = oracle::simplex_worst_case(s, w, 0.1);
    const auto ts = solve_tilt(s, w, 0.1);
    CHECK(std::fabs(rep.value - ts.value) / ts.value <= 1e-4);
}

TEST_CASE("simplex search stays within its hard bounds") {
    Rng rng(31);
    for (int inst = 0; inst < 20; ++inst) {
        const int n = 2 + static_cast<int>(rng.raw() % 7);
        std::vector<double> s(n), w(n);
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            s[i] = 5.0 * rng.uniform();
            w[i] = 0.2 + rng.uniform();
            norm += w[i];
        }
        for (double& v : w) v /= norm;
        double smax = s[0], base = 0.0;
        for (int i = 0; i < n; ++i) {
            smax = std::max(smax, s[i]);
            base += w[i] * s[i];
        }
        const double eps = 0.25 * rng.uniform();
        const auto rep = oracle::simplex_worst_case(s, w, eps);
        CHECK(rep.value >= base - 1e-9);
        CHECK(rep.value <= smax + 1e-12);
        double kl = 0.0;
        for (int i = 0; i < n; ++i)
            if (rep.argmax_weights[i] > 0.0)
                kl += rep.argmax_weights[i] *
                      std::log(rep.argmax_weights[i] / w[i]);
        CHECK(kl <= eps + 1e-6);
    }
}

TEST_CASE("simplex search certifies the tilt solver") {
    Rng rng(17);
    for (int inst = 0; inst < 10; ++inst) {
        const int n = 2 + static_cast<int>(rng.raw() % 5);
        std::vector<double> s(n), w(n);
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            s[i] = 3.0 * rng.uniform();
            w[i] = 0.8 + rng.uniform();
            norm += w[i];
        }
        for (double& v : w) v /= norm;
        for (double eps : {0.01, 0.05, 0.1, 0.3}) {
            const auto ts = solve_tilt(s, w, eps);
            const auto rep = oracle::simplex_worst_case(s, w, eps);
            CHECK(std::fabs(ts.value - rep.value) /
                      std::max(std::fabs(ts.value), 1e-12) <=
                  1e-4);
        }
    }
}

TEST_CASE("atom limit") {
    const std::vector<double> s(9, 1.0);
    const std::vector<double> w(9, 1.0 / 9);
    CHECK_THROWS_AS(oracle::simplex_worst_case(s, w, 0.1), TooManyAtoms);
}

TEST_CASE("grid search certifies the one-dimensional solver") {
    const auto f = ScoreFamily::mean_patton(2.0);

    const auto d123 = EmpiricalDistribution::uniform({1.0, 2.0, 3.0});
    std::vector<double> grid;
    for (int i = 0; i <= 4000; ++i) grid.push_back(i * 1e-3);
    const auto r0 = oracle::grid_ref(f, d123, 0.0, grid);
    CHECK(std::fabs(*r0.argmin_z - 2.0) <= 1e-3);

    const auto d015 = EmpiricalDistribution::uniform({0.0, 1.0, 5.0});
    std::vector<double> grid5;
    for (int i = 0; i <= 5000; ++i) grid5.push_back(i * 1e-3);
    const auto rmax = oracle::grid_ref(f, d015, std::log(3.0), grid5);
    CHECK(std::fabs(*rmax.argmin_z - 2.5) <= 1.5e-3);

    // the grid can never beat the continuous solver beyond discretisation
    for (double eps : {0.0, 0.1, std::log(3.0)}) {
        const auto rg = oracle::grid_ref(f, d015, eps, grid5);
        const auto rc = ref_1d(f, d015, eps);
        CHECK(rg.value >= rc.value - 1e-8);
    }

    CHECK_THROWS_AS(
        oracle::grid_ref(f, d123, 0.0, std::vector<double>(50, 1.0)),
        GridTooCoarse);
}

TEST_CASE("brute-force expectile") {
    const std::vector<double> atoms{1.0, 2.0, 3.0};
    const std::vector<double> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(oracle::brute_expectile(atoms, w, 0.5) ==
          doctest::Approx(2.0).epsilon(1e-10));
    // 0.7 E[(Y-e)_+] = 0.3 E[(e-Y)_+] solves to 30/13 on this sample
    CHECK(oracle::brute_expectile(atoms, w, 0.7) ==
          doctest::Approx(30.0 / 13.0).epsilon(1e-10));
    const std::vector<double> c{4.2, 4.2};
    const std::vector<double> cw{0.5, 0.5};
    CHECK(oracle::brute_expectile(c, cw, 0.3) == 4.2);
}
