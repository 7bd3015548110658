#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "octotrap/layout.hpp"
#include "octotrap/nelder_mead.hpp"

namespace octotrap {

struct Decomposition {
    DefectSet defects;
    double removed_rotation = 0.0;  // rad, projected out before the fit
    Vec2 removed_translation{};     // m, anchor of the two set centres
    double residual_rms = 0.0;      // m, over the 16 centre coordinates
};

namespace detail {

// Closed-form chart inversion. Exact for any layout whose facing pairs are
// non-degenerate: pair angles give beta_s, beta_t, delta and the global
// rotation; pair distances give r_bar0, delta_r, l_s, l_t; line crossings
// give the set centres (splitting + translation); midpoint projections give
// the sliding offsets.
inline Decomposition decompose_closed_form(const ElectrodeLayout& lay) {
    Decomposition out;
    out.removed_rotation = global_rotation_angle(lay);
    const ElectrodeLayout l = rotated_layout(lay, -out.removed_rotation);

    std::array<double, 4> angle, dist;
    std::array<Vec2, 4> mid, dir;
    for (int p = 0; p < 4; ++p) {
        const auto& spec = kPairs[p];
        const Vec2 axis = l.centers[spec.pos] - l.centers[spec.neg];
        dist[p] = axis.norm();
        dir[p] = axis / dist[p];
        double a = std::atan2(axis.y, axis.x) - spec.nominal_angle;
        while (a > kPi) a -= 2.0 * kPi;
        while (a < -kPi) a += 2.0 * kPi;
        angle[p] = a;  // deviation from nominal
        mid[p] = (l.centers[spec.pos] + l.centers[spec.neg]) * 0.5;
    }

    DefectSet d;
    // Pair-angle deviations encode (-beta_s - delta, +beta_s - delta) for
    // the S set and (-beta_t + delta, +beta_t + delta) for the T set.
    d.beta_s = 0.5 * (angle[1] - angle[0]);
    d.beta_t = 0.5 * (angle[3] - angle[2]);
    const double a_s = 0.5 * (angle[0] + angle[1]);
    const double a_t = 0.5 * (angle[2] + angle[3]);
    d.delta = 0.5 * (a_t - a_s);
    // a_s + a_t is the residual global rotation, zero after the projection.

    const double r_s = 0.25 * (dist[0] + dist[1]) - l.rd;
    const double r_t = 0.25 * (dist[2] + dist[3]) - l.rd;
    d.r_bar0 = 0.5 * (r_s + r_t);
    d.delta_r = r_t - r_s;
    d.l_s = (dist[0] - dist[1]) / d.r_bar0;
    d.l_t = (dist[3] - dist[2]) / d.r_bar0;

    const Vec2 m_s = line_intersection(mid[0], dir[0], mid[1], dir[1]);
    const Vec2 m_t = line_intersection(mid[2], dir[2], mid[3], dir[3]);
    out.removed_translation = (m_s + m_t) * 0.5;
    const Vec2 split = (m_s - m_t) / d.r_bar0;
    d.x0 = split.x;
    d.y0 = split.y;

    std::array<double, 4> sigma;
    sigma[0] = dot(mid[0] - m_s, dir[0]) / (0.5 * dist[0]);
    sigma[1] = dot(mid[1] - m_s, dir[1]) / (0.5 * dist[1]);
    sigma[2] = dot(mid[2] - m_t, dir[2]) / (0.5 * dist[2]);
    sigma[3] = dot(mid[3] - m_t, dir[3]) / (0.5 * dist[3]);
    const Vec2 slide_s = dir[0] * sigma[0] + dir[1] * sigma[1];
    const Vec2 slide_t = dir[2] * sigma[2] + dir[3] * sigma[3];
    d.xl_s = slide_s.x;
    d.yl_s = slide_s.y;
    d.xl_t = -slide_t.x;
    d.yl_t = -slide_t.y;

    out.defects = d;
    return out;
}

inline std::vector<double> pack_params(const DefectSet& d, double r0_scale) {
    return {d.l_s, d.l_t, d.xl_s, d.yl_s, d.xl_t, d.yl_t, d.x0, d.y0,
            d.beta_s, d.beta_t, d.delta, d.r_bar0 / r0_scale - 1.0, d.delta_r / r0_scale};
}

inline DefectSet unpack_params(const std::vector<double>& p, double r0_scale) {
    DefectSet d;
    d.l_s = p[0]; d.l_t = p[1];
    d.xl_s = p[2]; d.yl_s = p[3]; d.xl_t = p[4]; d.yl_t = p[5];
    d.x0 = p[6]; d.y0 = p[7];
    d.beta_s = p[8]; d.beta_t = p[9]; d.delta = p[10];
    d.r_bar0 = (p[11] + 1.0) * r0_scale;
    d.delta_r = p[12] * r0_scale;
    return d;
}

}  // namespace detail

inline double layout_rms(const ElectrodeLayout& a, const ElectrodeLayout& b) {
    double acc = 0.0;
    for (int k = 0; k < 8; ++k) acc += (a.centers[k] - b.centers[k]).norm2();
    return std::sqrt(acc / 16.0);
}

// Rebuilds a layout from a decomposition, mapping back into the lab frame.
// Uses the unchecked builder: decompositions of strongly displaced layouts
// may carry parameters outside the model-validity box.
inline ElectrodeLayout layout_from_decomposition(const Decomposition& dec, const TrapConfig& cfg) {
    ElectrodeLayout lay = detail::build_layout(dec.defects, cfg);
    lay = rotated_layout(lay, dec.removed_rotation);
    for (auto& c : lay.centers) c += dec.removed_translation;
    return lay;
}

// Least-squares-optimal DefectSet reproducing the 16 centre coordinates.
// A closed-form chart inversion provides the initial estimate; a simplex
// refinement over the 13 fields polishes it to the parameter tolerance.
inline Decomposition decompose_layout(const ElectrodeLayout& lay, const TrapConfig& cfg) {
    lay.validate();
    const double site = cfg.r0 + cfg.rd;
    for (int k = 0; k < 8; ++k) {
        const Vec2 ideal = unit_dir(ElectrodeLayout::nominal_angle(k)) * site;
        if ((lay.centers[k] - ideal).norm() > 0.15 * site) {
            throw GeometryError("decompose: electrode further than 15% of r0+rd from its ideal site");
        }
    }

    Decomposition dec = detail::decompose_closed_form(lay);

    // The defect parameters are optimised in a uniformly scaled space; the
    // rotation and translation stay fixed at their measured values.
    const double r0_scale = cfg.r0;
    auto objective = [&](const std::vector<double>& p) {
        DefectSet d = detail::unpack_params(p, r0_scale);
        if (!(d.r_bar0 > 0.1 * r0_scale)) return 1.0;
        Decomposition trial = dec;
        trial.defects = d;
        ElectrodeLayout rebuilt;
        try {
            rebuilt = layout_from_decomposition(trial, cfg);
        } catch (const GeometryError&) {
            return 1.0;
        }
        return layout_rms(rebuilt, lay) / r0_scale;
    };

    std::vector<double> p0 = detail::pack_params(dec.defects, r0_scale);
    std::vector<double> step(p0.size(), 1e-7);
    NelderMeadOptions opt;
    opt.param_tol = 1e-12;
    opt.max_iterations = 3000;
    const auto res = nelder_mead(objective, p0, step, opt);

    const double rms0 = objective(p0);
    if (res.value < rms0) {
        dec.defects = detail::unpack_params(res.x, r0_scale);
        dec.residual_rms = res.value * r0_scale;
    } else {
        dec.residual_rms = rms0 * r0_scale;
    }

    if (dec.residual_rms > 0.05 * cfg.r0) {
        throw DecompositionError("decompose: fit did not converge", dec.residual_rms);
    }
    return dec;
}

}  // namespace octotrap
