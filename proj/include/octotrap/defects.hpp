#pragma once

#include <cmath>

#include "octotrap/common.hpp"

namespace octotrap {

// Reduced description of an eight-electrode geometry as the composition of
// five deformation classes acting on the two interleaved quadrupole sets:
// S (electrodes on the frame axes) and T (electrodes on the diagonals).
//
//   compression  l_s, l_t     facing-pair length difference / r_bar0
//   sliding      xl_*, yl_*   summed line-centre offsets, each normalised by
//                             its pair's centre-to-electrode distance
//   splitting    x0, y0       set-centre separation / r_bar0, oriented so
//                             positive values displace the S set towards +x/+y
//   shearing     beta_s/t     pair-axis tilt angles (rad)
//   rotation     delta        counter-rotation of the two sets (rad)
//
// r_bar0 is the mean inner radius and delta_r the T-minus-S inner radius
// difference; together with the above they form an exact chart of any
// near-nominal layout modulo a global rotation and translation. Sign senses
// of the angular and splitting parameters are fixed so that the published
// defect-to-coefficient equations hold verbatim against the field solver.
struct DefectSet {
    double l_s = 0.0;
    double l_t = 0.0;
    double xl_s = 0.0;
    double yl_s = 0.0;
    double xl_t = 0.0;
    double yl_t = 0.0;
    double x0 = 0.0;
    double y0 = 0.0;
    double beta_s = 0.0;   // rad
    double beta_t = 0.0;   // rad
    double delta = 0.0;    // rad
    double r_bar0 = 4.0e-3;  // m
    double delta_r = 0.0;    // m

    static constexpr double kMaxDimensionless = 0.15;
    static constexpr double kMaxAngle = kPi / 15.0;

    void validate() const {
        auto dim_ok = [](double v) { return std::abs(v) <= kMaxDimensionless; };
        if (!(dim_ok(l_s) && dim_ok(l_t) && dim_ok(xl_s) && dim_ok(yl_s) &&
              dim_ok(xl_t) && dim_ok(yl_t) && dim_ok(x0) && dim_ok(y0))) {
            throw GeometryError("defect set: dimensionless parameter outside [-0.15, 0.15]");
        }
        if (std::abs(beta_s) > kMaxAngle || std::abs(beta_t) > kMaxAngle ||
            std::abs(delta) > kMaxAngle) {
            throw GeometryError("defect set: angle outside +-pi/15");
        }
        if (!(r_bar0 > 0.0)) throw GeometryError("defect set: r_bar0 must be positive");
    }

    bool is_zero(double tol = 0.0) const {
        return std::abs(l_s) <= tol && std::abs(l_t) <= tol && std::abs(xl_s) <= tol &&
               std::abs(yl_s) <= tol && std::abs(xl_t) <= tol && std::abs(yl_t) <= tol &&
               std::abs(x0) <= tol && std::abs(y0) <= tol && std::abs(beta_s) <= tol &&
               std::abs(beta_t) <= tol && std::abs(delta) <= tol && std::abs(delta_r) <= tol;
    }
};

}  // namespace octotrap
