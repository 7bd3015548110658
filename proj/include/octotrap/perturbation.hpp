#pragma once

#include <algorithm>
#include <cmath>

#include "octotrap/common.hpp"
#include "octotrap/defects.hpp"
#include "octotrap/scaling.hpp"

namespace octotrap {

// Weights of the lower-order surfaces added to the ideal octupole:
// W = a1*U2 + a2*V2 + a3*U1 + a4*V1, and the full RF surface is
// U_R = h0*(U4 - W), everything normalised by r_bar0.
struct PerturbationCoeffs {
    double a1 = 0.0;  // U2 (axis-aligned quadrupole)
    double a2 = 0.0;  // V2 (diagonal quadrupole)
    double a3 = 0.0;  // U1 (x dipole)
    double a4 = 0.0;  // V1 (y dipole)
    double h0 = 1.0;
    double r_bar0 = 4.0e-3;  // m

    static constexpr double kValidityBound = 0.15;

    double max_abs() const {
        return std::max(std::max(std::abs(a1), std::abs(a2)),
                        std::max(std::abs(a3), std::abs(a4)));
    }
    bool within_validity() const { return max_abs() <= kValidityBound; }

    double quad_norm() const { return std::hypot(a1, a2); }
    double dipole_norm() const { return std::hypot(a3, a4); }
};

// Converts a defect composition into surface coefficients. All cross
// couplings are applied:
//  - rotation rescales the contributions by (1+|delta|/pi) for shearing and
//    (1+2|delta|/pi) for the rest, and mixes the quadrupole pairs through
//    the symmetric matrix [[cos,sin],[sin,cos]] with argument -2*delta for
//    compression and +delta for shearing;
//  - an inner-radius difference between the sets rescales the shearing
//    angles by (1 -+ 3*delta_r/r);
//  - shearing of the T set reweights the sliding offsets by (1 +- 4*beta_T/pi)
//    and cross-couples them, and reweights the splitting offsets through
//    (1 +- sin(2*beta_T)cos(2*beta_S)) with a -sin(2*beta_S) cross term;
//  - splitting carries a quadrupole correction of fixed weight 0.1 on top of
//    its dipole term.
inline PerturbationCoeffs coeffs_from_defects(const DefectSet& d, const ScalingCoeffs& s) {
    const double f_shear = 1.0 + std::abs(d.delta) / kPi;
    const double f_rest = 1.0 + 2.0 * std::abs(d.delta) / kPi;
    const double c2d = std::cos(2.0 * d.delta), s2d = std::sin(2.0 * d.delta);
    const double cd = std::cos(d.delta), sd = std::sin(d.delta);
    const double k_t = 1.0 - 3.0 * d.delta_r / d.r_bar0;
    const double k_s = 1.0 + 3.0 * d.delta_r / d.r_bar0;

    PerturbationCoeffs c;
    c.h0 = s.h0;
    c.r_bar0 = d.r_bar0;

    c.a1 = s.hc * f_rest * (d.l_s * c2d - d.l_t * s2d) +
           s.hh * f_shear * (d.beta_t * k_t * cd + d.beta_s * k_s * sd);
    c.a2 = s.hc * f_rest * (d.l_t * c2d - d.l_s * s2d) +
           s.hh * f_shear * (d.beta_t * k_t * sd + d.beta_s * k_s * cd);

    const double split_norm = std::hypot(d.x0, d.y0);
    if (split_norm > 0.0) {
        c.a1 -= s.hp_prime * (d.x0 * d.x0 - d.y0 * d.y0) / split_norm;
        c.a2 += s.hp_prime * 2.0 * d.x0 * d.y0 / split_norm;
    }

    const double slide_w = 4.0 * d.beta_t / kPi;
    const double split_w = std::sin(2.0 * d.beta_t) * std::cos(2.0 * d.beta_s);
    const double split_x = std::sin(2.0 * d.beta_s);
    c.a3 = f_rest * (s.hl * ((1.0 + slide_w) * d.xl_s + d.xl_t - slide_w * d.yl_t) +
                     s.hp * ((1.0 + split_w) * d.x0 - split_x * d.y0));
    c.a4 = f_rest * (s.hl * ((1.0 - slide_w) * d.yl_s + d.yl_t - slide_w * d.xl_t) +
                     s.hp * ((1.0 - split_w) * d.y0 - split_x * d.x0));
    return c;
}

// Splitting mapped to its dipole term only, without the 0.1-weighted
// quadrupole correction. Kept for the model-comparison scans.
inline PerturbationCoeffs coeffs_from_defects_uncorrected_splitting(const DefectSet& d,
                                                                    const ScalingCoeffs& s) {
    ScalingCoeffs s2 = s;
    s2.hp_prime = 0.0;
    return coeffs_from_defects(d, s2);
}

}  // namespace octotrap
