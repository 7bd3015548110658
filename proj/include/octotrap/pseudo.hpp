#pragma once

#include "octotrap/perturbation.hpp"
#include "octotrap/trap_config.hpp"

namespace octotrap {

// Dimensionless RF surface U_R(x, y) = h0 * (U4 - W).
inline double analytic_rf_surface(const PerturbationCoeffs& c, Vec2 p) {
    const double u = p.x / c.r_bar0;
    const double v = p.y / c.r_bar0;
    const double u2 = u * u, v2 = v * v;
    const double quartic = u2 * u2 - 6.0 * u2 * v2 + v2 * v2;
    const double w = c.a1 * (u2 - v2) + c.a2 * (2.0 * u * v) + c.a3 * u + c.a4 * v;
    return c.h0 * (quartic - w);
}

// Normalised gradient polynomials of U_R/h0 with respect to (u, v); the
// pseudo-potential and its minima are built on these.
inline void surface_gradient_uv(const PerturbationCoeffs& c, double u, double v,
                                double& g1, double& g2) {
    g1 = 4.0 * u * u * u - 12.0 * u * v * v - 2.0 * c.a1 * u - 2.0 * c.a2 * v - c.a3;
    g2 = 4.0 * v * v * v - 12.0 * u * u * v + 2.0 * c.a1 * v - 2.0 * c.a2 * u - c.a4;
}

// Jacobian of (g1, g2); symmetric.
inline void surface_hessian_uv(const PerturbationCoeffs& c, double u, double v,
                               double& h11, double& h12, double& h22) {
    h11 = 12.0 * u * u - 12.0 * v * v - 2.0 * c.a1;
    h12 = -24.0 * u * v - 2.0 * c.a2;
    h22 = 12.0 * v * v - 12.0 * u * u + 2.0 * c.a1;
}

// Pseudo-potential V* = q^2 |E0|^2 / (4 m Omega^2) with
// E0 = -grad(V_rf * U_R); result in joules.
inline double analytic_pseudo(const PerturbationCoeffs& c, const TrapConfig& cfg, Vec2 p) {
    double g1, g2;
    surface_gradient_uv(c, p.x / c.r_bar0, p.y / c.r_bar0, g1, g2);
    const double scale = cfg.v_rf * c.h0 / c.r_bar0;
    return cfg.pseudo_factor() * scale * scale * (g1 * g1 + g2 * g2);
}

// Closed-form gradient of the pseudo-potential, J/m.
inline Vec2 analytic_pseudo_gradient(const PerturbationCoeffs& c, const TrapConfig& cfg, Vec2 p) {
    const double u = p.x / c.r_bar0;
    const double v = p.y / c.r_bar0;
    double g1, g2, h11, h12, h22;
    surface_gradient_uv(c, u, v, g1, g2);
    surface_hessian_uv(c, u, v, h11, h12, h22);
    const double scale = cfg.v_rf * c.h0 / c.r_bar0;
    const double pref = cfg.pseudo_factor() * scale * scale * 2.0 / c.r_bar0;
    return {pref * (g1 * h11 + g2 * h12), pref * (g1 * h12 + g2 * h22)};
}

}  // namespace octotrap
