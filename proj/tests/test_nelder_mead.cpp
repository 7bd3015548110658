#include <catch2/catch_amalgamated.hpp>

#include "octotrap/nelder_mead.hpp"

using namespace octotrap;

TEST_CASE("simplex minimises a shifted quadratic") {
    auto f = [](const std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - (1.0 + static_cast<double>(i));
            s += (i + 1) * d * d;
        }
        return s;
    };
    const auto res = nelder_mead(f, {0.0, 0.0, 0.0}, {0.5, 0.5, 0.5});
    REQUIRE(res.converged);
    CHECK(res.x[0] == Catch::Approx(1.0).margin(1e-6));
    CHECK(res.x[1] == Catch::Approx(2.0).margin(1e-6));
    CHECK(res.x[2] == Catch::Approx(3.0).margin(1e-6));
}

TEST_CASE("simplex solves rosenbrock in 2d") {
    auto f = [](const std::vector<double>& x) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    NelderMeadOptions opt;
    opt.max_iterations = 20000;
    opt.param_tol = 1e-10;
    const auto res = nelder_mead(f, {-1.2, 1.0}, {0.5, 0.5}, opt);
    CHECK(res.x[0] == Catch::Approx(1.0).margin(1e-5));
    CHECK(res.x[1] == Catch::Approx(1.0).margin(1e-5));
}
