#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "octotrap/pseudo.hpp"

namespace octotrap {

enum class PatternClass { Single, Line, Triangle };

inline const char* to_string(PatternClass c) {
    switch (c) {
        case PatternClass::Single: return "single";
        case PatternClass::Line: return "line";
        case PatternClass::Triangle: return "triangle";
    }
    return "?";
}

// Arrangement of the local pseudo-potential minima. Positions are in metres;
// depth_j carries the pseudo-potential value at each point when known.
struct MinimaPattern {
    std::vector<Vec2> points;
    std::vector<double> depth_j;  // J, may be empty
    PatternClass classification = PatternClass::Single;

    Vec2 barycenter() const {
        Vec2 b{};
        for (const auto& p : points) b += p;
        return points.empty() ? b : b / static_cast<double>(points.size());
    }
    // Mean distance of the points to their barycenter.
    double d_b() const {
        if (points.empty()) return 0.0;
        const Vec2 b = barycenter();
        double acc = 0.0;
        for (const auto& p : points) acc += (p - b).norm();
        return acc / static_cast<double>(points.size());
    }
};

inline PatternClass classify_points(const std::vector<Vec2>& pts, double line_tol) {
    if (pts.size() <= 1) return PatternClass::Single;
    if (pts.size() == 2) return PatternClass::Line;
    // Height of the middle point above the longest chord decides line vs
    // triangle.
    double best = 0.0;
    int ia = 0, ib = 1;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double d = (pts[i] - pts[j]).norm();
            if (d > best) { best = d; ia = i; ib = j; }
        }
    }
    const int ic = 3 - ia - ib;
    if (best <= 0.0) return PatternClass::Single;
    const double height = std::abs(cross(pts[ib] - pts[ia], pts[ic] - pts[ia])) / best;
    return height <= line_tol ? PatternClass::Line : PatternClass::Triangle;
}

// Deterministic ordering with a length tolerance so that symmetry-related
// points (equal up to solver noise) sort stably.
inline void sort_pattern(std::vector<Vec2>& pts, double tol = 1e-10) {
    std::sort(pts.begin(), pts.end(), [tol](const Vec2& a, const Vec2& b) {
        if (std::abs(a.x - b.x) > tol) return a.x < b.x;
        return a.y < b.y;
    });
}

inline MinimaPattern rotated_pattern(const MinimaPattern& pat, double angle, Vec2 shift = {}) {
    MinimaPattern out = pat;
    for (auto& p : out.points) p = rotate(p, angle) + shift;
    return out;
}

// Pattern referenced to the centre of the line or triangle it forms; the
// frame-free representation used whenever analytic and solver patterns are
// compared.
inline MinimaPattern centered_pattern(const MinimaPattern& pat) {
    MinimaPattern out = pat;
    const Vec2 b = pat.barycenter();
    for (auto& p : out.points) p -= b;
    return out;
}

// All zeros of the RF field of the analytic surface inside the disk of
// radius 0.6*r_bar0, i.e. the exact minima of the pseudo-potential (V* = 0
// there). Damped Newton iterations on the gradient polynomials from a fixed
// seed lattice plus closed-form pure-quadrupole/pure-dipole candidates;
// duplicates merged within pixel/4. The exhaustive pixel-grid scan lives in
// the test suite as the independent oracle for this routine.
inline MinimaPattern analytic_minima(const PerturbationCoeffs& c, const TrapConfig& cfg) {
    if (!c.within_validity()) {
        throw ModelViolation("analytic_minima: coefficients outside validity bounds");
    }
    const double dedup_uv = 0.25 * cfg.pixel / c.r_bar0;
    MinimaPattern pat;

    if (c.max_abs() < 1e-12) {
        pat.points = {Vec2{0.0, 0.0}};
        pat.depth_j = {0.0};
        pat.classification = PatternClass::Single;
        return pat;
    }

    std::vector<Vec2> seeds;
    seeds.reserve(140);
    for (int i = -5; i <= 5; ++i) {
        for (int j = -5; j <= 5; ++j) {
            seeds.push_back({0.1 * i, 0.1 * j});
        }
    }
    // Closed-form candidates: pure quadrupole zeros at +-sqrt(|aq|/2) along
    // the pattern axis, pure dipole zeros on the lone-vertex ray and the
    // mirrored pair.
    const double aq = c.quad_norm();
    if (aq > 0.0) {
        const double r = std::sqrt(aq / 2.0);
        const double phi = -0.5 * std::atan2(c.a2, c.a1);
        seeds.push_back(unit_dir(phi) * r);
        seeds.push_back(unit_dir(phi) * -r);
        seeds.push_back(unit_dir(phi + kPi / 2.0) * r);
        seeds.push_back(unit_dir(phi + kPi / 2.0) * -r);
    }
    const double ad = c.dipole_norm();
    if (ad > 0.0) {
        const double psi = std::atan2(c.a4, c.a3);
        const double r_lone = std::cbrt(ad / 4.0);
        const double r_pair = 2.0 * std::cbrt(ad / 32.0);
        seeds.push_back(unit_dir(psi) * r_lone);
        seeds.push_back(unit_dir(psi + 2.0 * kPi / 3.0) * r_pair);
        seeds.push_back(unit_dir(psi - 2.0 * kPi / 3.0) * r_pair);
    }

    std::vector<Vec2> roots;
    for (const Vec2& s : seeds) {
        double u = s.x, v = s.y;
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            double g1, g2, h11, h12, h22;
            surface_gradient_uv(c, u, v, g1, g2);
            surface_hessian_uv(c, u, v, h11, h12, h22);
            double det = h11 * h22 - h12 * h12;
            if (std::abs(det) < 1e-14) {
                h11 += 1e-7; h22 += 1e-7;
                det = h11 * h22 - h12 * h12;
                if (std::abs(det) < 1e-14) break;
            }
            double du = -(g1 * h22 - g2 * h12) / det;
            double dv = -(h11 * g2 - h12 * g1) / det;
            const double step = std::hypot(du, dv);
            if (step > 0.2) { du *= 0.2 / step; dv *= 0.2 / step; }
            u += du;
            v += dv;
            if (std::abs(u) > 2.0 || std::abs(v) > 2.0) break;
            if (step < 1e-13) { ok = true; break; }
        }
        if (!ok) continue;
        double g1, g2;
        surface_gradient_uv(c, u, v, g1, g2);
        if (std::hypot(g1, g2) > 1e-9) continue;
        if (std::hypot(u, v) > 0.6) continue;
        bool dup = false;
        for (const auto& r : roots) {
            if (std::hypot(r.x - u, r.y - v) < dedup_uv) { dup = true; break; }
        }
        if (!dup) roots.push_back({u, v});
    }

    if (roots.empty()) {
        // All perturbations inside the validity box keep a field zero in the
        // disk; reaching this indicates a numerical failure.
        throw ModelViolation("analytic_minima: no field zero found");
    }
    if (roots.size() > 3) {
        throw ModelViolation("analytic_minima: more than three minima");
    }

    for (const auto& r : roots) pat.points.push_back(Vec2{r.x, r.y} * c.r_bar0);
    sort_pattern(pat.points);
    pat.depth_j.assign(pat.points.size(), 0.0);
    for (std::size_t i = 0; i < pat.points.size(); ++i) {
        pat.depth_j[i] = analytic_pseudo(c, cfg, pat.points[i]);
    }
    pat.classification = classify_points(pat.points, 0.25 * cfg.pixel);
    return pat;
}

// Mean matched distance between two equal-count patterns (optimal pairing)
// and the same rescaled by the reference pattern's d_b.
struct PatternMetrics {
    double d_bar = 0.0;    // m
    double d_bar_s = 0.0;  // dimensionless, d_bar / d_b(reference)
};

inline double optimal_pairing_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    const std::size_t n = a.size();
    std::vector<int> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += (a[i] - b[idx[i]]).norm();
        best = std::min(best, acc);
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best / static_cast<double>(n);
}

inline PatternMetrics minima_metrics(const MinimaPattern& a, const MinimaPattern& b) {
    if (a.points.size() != b.points.size()) {
        throw PatternError("minima_metrics: patterns have different point counts");
    }
    if (a.points.empty()) throw PatternError("minima_metrics: empty patterns");
    PatternMetrics m;
    m.d_bar = optimal_pairing_distance(a.points, b.points);
    const double db = b.d_b();
    m.d_bar_s = (m.d_bar == 0.0) ? 0.0 : m.d_bar / db;
    return m;
}

// Symmetric nearest-point distance; tolerates unequal counts. Coincides with
// the optimal pairing once two equal-count patterns are close.
inline double chamfer_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) best = std::min(best, (p - q).norm());
        acc += best;
    }
    for (const auto& q : b) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : a) best = std::min(best, (p - q).norm());
        acc += best;
    }
    return acc / static_cast<double>(a.size() + b.size());
}

}  // namespace octotrap
