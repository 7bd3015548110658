#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "octotrap/bem.hpp"
#include "octotrap/minima.hpp"
#include "octotrap/trap_config.hpp"
#include "octotrap/worker_pool.hpp"

namespace octotrap {

// Square pixel-centred map, n x n with n odd so the origin pixel is centred
// on the window centre. Index (i, j) covers x = center.x + (i - m)*d_px,
// y = center.y + (j - m)*d_px, with m = (n-1)/2.
struct PotentialGrid {
    Vec2 center{};
    double d_px = 4.0e-6;
    int n = 0;
    std::vector<double> values;     // row-major over j (y), then i (x)
    std::vector<std::uint8_t> mask; // 1 = excluded (inside electrode / border)

    int half() const { return (n - 1) / 2; }
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i);
    }
    Vec2 pos(int i, int j) const {
        const int m = half();
        return {center.x + (i - m) * d_px, center.y + (j - m) * d_px};
    }
    double at(int i, int j) const { return values[idx(i, j)]; }
    bool masked(int i, int j) const { return mask[idx(i, j)] != 0; }
};

// Boundary-value problem for a trap layout: the layout provides the
// conductors and boundary data, region/d_px the sampling window. The default
// window spans the whole inter-electrode region (half-width r0); focused()
// builds a narrower window for high-resolution looks at the centre.
struct BoundaryProblem {
    ElectrodeLayout layout;
    double region = 0.0;  // window half-width (m)
    double d_px = 4.0e-6;

    BoundaryProblem(ElectrodeLayout lay, double d_px_) : layout(std::move(lay)), d_px(d_px_) {
        region = layout.r0;
        validate();
    }
    static BoundaryProblem focused(ElectrodeLayout lay, double d_px_, double half_width) {
        BoundaryProblem p(std::move(lay), d_px_);
        p.region = half_width;
        p.validate();
        return p;
    }

    void validate() const {
        if (!(d_px > 0.0) || !(region > 0.0)) throw SolverError("boundary problem: bad window");
        if (region > 64.0e-3) throw SolverError("boundary problem: window too large");
    }

    int pixels_per_side() const { return 2 * static_cast<int>(std::round(region / d_px)) + 1; }
};

// Samples the solved potential on the window. Pixels inside an electrode, or
// within a thin shell of it where the node-sum quadrature of the layer
// potential is not converged (about 1.5 node spacings), carry that
// electrode's boundary potential and are masked.
inline PotentialGrid sample_potential(const bem::TrapSolver& solver, const bem::System::Weights& w,
                                      double region, double d_px, Vec2 center = {}) {
    PotentialGrid g;
    g.center = center;
    g.d_px = d_px;
    g.n = 2 * static_cast<int>(std::round(region / d_px)) + 1;
    g.values.assign(static_cast<std::size_t>(g.n) * g.n, 0.0);
    g.mask.assign(static_cast<std::size_t>(g.n) * g.n, 0);

    const auto& lay = solver.layout();
    const auto& sys = solver.system();
    const double shell =
        lay.rd + 1.5 * (2.0 * kPi * lay.rd / sys.nodes_per_circle());
    parallel_for(g.n, [&](int j) {
        for (int i = 0; i < g.n; ++i) {
            const Vec2 p = g.pos(i, j);
            int near = -1;
            for (int k = 0; k < 8; ++k) {
                if ((p - lay.centers[k]).norm2() <= shell * shell) { near = k; break; }
            }
            const std::size_t id = g.idx(i, j);
            if (near >= 0) {
                g.values[id] = lay.boundary_potential(near);
                g.mask[id] = 1;
            } else {
                g.values[id] = sys.potential(w, p);
            }
        }
    });
    return g;
}

inline PotentialGrid solve_laplace(const bem::TrapSolver& solver, const BoundaryProblem& problem) {
    const auto w = solver.weights_for_amplitudes(problem.layout.amplitudes);
    return sample_potential(solver, w, problem.region, problem.d_px);
}

// Convenience entry point: builds the solver, solves and samples.
inline PotentialGrid solve_laplace(const BoundaryProblem& problem,
                                   int nodes_per_circle = bem::System::kDefaultNodesPerCircle) {
    bem::TrapSolver solver(problem.layout, nodes_per_circle);
    return solve_laplace(solver, problem);
}

// |E0| by central differences, then V* = q^2 |E0|^2 / (4 m Omega^2) per
// pixel. Border pixels and pixels with a masked neighbour are masked.
inline PotentialGrid pseudo_map(const PotentialGrid& grid, const TrapConfig& cfg) {
    PotentialGrid out;
    out.center = grid.center;
    out.d_px = grid.d_px;
    out.n = grid.n;
    out.values.assign(grid.values.size(), 0.0);
    out.mask.assign(grid.mask.size(), 1);

    const double inv2h = 1.0 / (2.0 * grid.d_px);
    const double pf = cfg.pseudo_factor();
    parallel_for(grid.n - 2, [&](int jj) {
        const int j = jj + 1;
        for (int i = 1; i < grid.n - 1; ++i) {
            if (grid.masked(i, j) || grid.masked(i - 1, j) || grid.masked(i + 1, j) ||
                grid.masked(i, j - 1) || grid.masked(i, j + 1)) {
                continue;
            }
            const double ex = (grid.at(i + 1, j) - grid.at(i - 1, j)) * inv2h;
            const double ey = (grid.at(i, j + 1) - grid.at(i, j - 1)) * inv2h;
            const std::size_t id = out.idx(i, j);
            out.values[id] = pf * (ex * ex + ey * ey);
            out.mask[id] = 0;
        }
    });
    return out;
}

struct GridMinimum {
    Vec2 pixel_pos;    // pixel-snapped position (m)
    Vec2 refined_pos;  // sub-pixel refined position (m)
    double value;      // map value at the refined minimum
};

// Strict local minima of the map inside the disk |p - center| <= radius,
// sub-pixel refined by a quadratic fit over the 3x3 neighbourhood.
inline std::vector<GridMinimum> grid_local_minima(const PotentialGrid& g, double radius) {
    std::vector<GridMinimum> found;
    const double r2 = radius * radius;
    for (int j = 1; j < g.n - 1; ++j) {
        for (int i = 1; i < g.n - 1; ++i) {
            if (g.masked(i, j)) continue;
            const Vec2 p = g.pos(i, j);
            if ((p - g.center).norm2() > r2) continue;
            const double v = g.at(i, j);
            bool strict = true, any_less = false;
            for (int dj = -1; dj <= 1 && strict; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    if (di == 0 && dj == 0) continue;
                    if (g.masked(i + di, j + dj)) { strict = false; break; }
                    const double nv = g.at(i + di, j + dj);
                    if (nv < v) { strict = false; break; }
                    if (nv > v) any_less = true;
                }
            }
            if (!strict || !any_less) continue;

            // Least-squares quadratic over the 3x3 stencil.
            double s = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int dj = -1; dj <= 1; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    const double f = g.at(i + di, j + dj);
                    s += f;
                    sx += di * f;
                    sy += dj * f;
                    sxx += di * di * f;
                    syy += dj * dj * f;
                    sxy += di * dj * f;
                }
            }
            const double bx = sx / 6.0, by = sy / 6.0;
            const double cxx = (sxx - 2.0 * s / 3.0) / 2.0;
            const double cyy = (syy - 2.0 * s / 3.0) / 2.0;
            const double cxy = sxy / 4.0;
            double dx = 0.0, dy = 0.0;
            const double det = 4.0 * cxx * cyy - cxy * cxy;
            if (cxx > 0.0 && det > 0.0) {
                dx = -(2.0 * cyy * bx - cxy * by) / det;
                dy = -(2.0 * cxx * by - cxy * bx) / det;
            } else {
                const double hx = sxx - 2.0 * s / 3.0;
                const double hy = syy - 2.0 * s / 3.0;
                if (hx > 0.0) dx = -bx / hx;
                if (hy > 0.0) dy = -by / hy;
            }
            dx = std::clamp(dx, -0.75, 0.75);
            dy = std::clamp(dy, -0.75, 0.75);

            GridMinimum m;
            m.pixel_pos = p;
            m.refined_pos = {p.x + dx * g.d_px, p.y + dy * g.d_px};
            const double c0 = s / 9.0 - (2.0 / 3.0) * (cxx + cyy);
            m.value = c0 + bx * dx + by * dy + cxx * dx * dx + cxy * dx * dy + cyy * dy * dy;
            found.push_back(m);
        }
    }
    return found;
}

// Full numeric minima pattern: strict minima in the central disk of radius
// 0.6*search_r0, neighbours within two pixels merged (keeping the deeper).
inline MinimaPattern find_minima_numeric(const PotentialGrid& g, double search_r0,
                                         bool use_refined = true) {
    auto mins = grid_local_minima(g, 0.6 * search_r0);
    if (mins.empty()) throw PatternError("find_minima_numeric: no local minimum in window (flat field?)");

    // Merge clusters closer than two pixels.
    std::vector<GridMinimum> merged;
    std::sort(mins.begin(), mins.end(),
              [](const GridMinimum& a, const GridMinimum& b) { return a.value < b.value; });
    for (const auto& m : mins) {
        bool close = false;
        for (const auto& kept : merged) {
            if ((m.pixel_pos - kept.pixel_pos).norm() < 2.0 * g.d_px + 1e-15) { close = true; break; }
        }
        if (!close) merged.push_back(m);
    }
    if (merged.size() > 3) {
        throw PatternError("find_minima_numeric: more than three distinct minima");
    }

    MinimaPattern pat;
    for (const auto& m : merged) {
        pat.points.push_back(use_refined ? m.refined_pos : m.pixel_pos);
        pat.depth_j.push_back(m.value);
    }
    // Keep depths aligned with the position sort.
    std::vector<std::size_t> order(pat.points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (std::abs(pat.points[a].x - pat.points[b].x) > 1e-10) {
            return pat.points[a].x < pat.points[b].x;
        }
        return pat.points[a].y < pat.points[b].y;
    });
    MinimaPattern sorted;
    for (std::size_t i : order) {
        sorted.points.push_back(pat.points[i]);
        sorted.depth_j.push_back(pat.depth_j[i]);
    }
    sorted.classification = classify_points(sorted.points, 0.25 * g.d_px);
    return sorted;
}

// Largest undivided five-point Laplacian residual over unmasked interior
// pixels, in volts; harmonicity figure of merit for solved maps.
inline double discrete_laplacian_residual(const PotentialGrid& g) {
    double worst = 0.0;
    for (int j = 1; j < g.n - 1; ++j) {
        for (int i = 1; i < g.n - 1; ++i) {
            if (g.masked(i, j) || g.masked(i - 1, j) || g.masked(i + 1, j) ||
                g.masked(i, j - 1) || g.masked(i, j + 1)) {
                continue;
            }
            const double r = g.at(i - 1, j) + g.at(i + 1, j) + g.at(i, j - 1) +
                             g.at(i, j + 1) - 4.0 * g.at(i, j);
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

}  // namespace octotrap
