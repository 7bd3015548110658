#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace octotrap {

struct NelderMeadOptions {
    int max_iterations = 4000;
    double param_tol = 1e-12;   // simplex diameter
    double value_tol = 0.0;     // spread of simplex values (0 = ignore)
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Downhill simplex with standard reflection/expansion/contraction/shrink
// coefficients (1, 2, 0.5, 0.5).
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const std::vector<double>& step,
                                    const NelderMeadOptions& opt = {}) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> verts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) verts[i + 1][i] += step[i];
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i <= n; ++i) vals[i] = f(verts[i]);

    std::vector<std::size_t> order(n + 1);
    auto sort_order = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    };

    NelderMeadResult res;
    int iter = 0;
    for (; iter < opt.max_iterations; ++iter) {
        sort_order();
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        double diam = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diam = std::max(diam, std::abs(verts[worst][i] - verts[best][i]));
        }
        const double spread = std::abs(vals[worst] - vals[best]);
        if (diam <= opt.param_tol || (opt.value_tol > 0.0 && spread <= opt.value_tol)) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += verts[k][i];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (centroid[i] - verts[worst][i]);
            return p;
        };

        auto reflected = blend(1.0);
        const double fr = f(reflected);
        if (fr < vals[best]) {
            auto expanded = blend(2.0);
            const double fe = f(expanded);
            if (fe < fr) {
                verts[worst] = std::move(expanded);
                vals[worst] = fe;
            } else {
                verts[worst] = std::move(reflected);
                vals[worst] = fr;
            }
        } else if (fr < vals[second]) {
            verts[worst] = std::move(reflected);
            vals[worst] = fr;
        } else {
            const bool outside = fr < vals[worst];
            auto contracted = blend(outside ? 0.5 : -0.5);
            const double fc = f(contracted);
            if (fc < (outside ? fr : vals[worst])) {
                verts[worst] = std::move(contracted);
                vals[worst] = fc;
            } else {
                for (std::size_t k = 0; k <= n; ++k) {
                    if (k == best) continue;
                    for (std::size_t i = 0; i < n; ++i) {
                        verts[k][i] = verts[best][i] + 0.5 * (verts[k][i] - verts[best][i]);
                    }
                    vals[k] = f(verts[k]);
                }
            }
        }
    }
    sort_order();
    res.x = verts[order[0]];
    res.value = vals[order[0]];
    res.iterations = iter;
    return res;
}

}  // namespace octotrap
