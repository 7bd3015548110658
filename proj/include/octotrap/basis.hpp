#pragma once

#include "octotrap/common.hpp"

namespace octotrap {

// Harmonic surface basis in the radial plane, normalised by a length r_norm.
// With u = x/r_norm, v = y/r_norm:
//   U1 = u            V1 = v
//   U2 = u^2 - v^2    V2 = 2uv
//   U4 = U2^2 - V2^2  V4 = 2 U2 V2
// U4 expands to (x^4 - 6x^2y^2 + y^4)/r_norm^4, the ideal octupole surface.
enum class Basis { U1, V1, U2, V2, U4, V4 };

inline double basis_eval(Basis kind, Vec2 p, double r_norm) {
    const double u = p.x / r_norm;
    const double v = p.y / r_norm;
    switch (kind) {
        case Basis::U1: return u;
        case Basis::V1: return v;
        case Basis::U2: return u * u - v * v;
        case Basis::V2: return 2.0 * u * v;
        case Basis::U4: {
            const double u2 = u * u - v * v;
            const double v2 = 2.0 * u * v;
            return u2 * u2 - v2 * v2;
        }
        case Basis::V4: {
            const double u2 = u * u - v * v;
            const double v2 = 2.0 * u * v;
            return 2.0 * u2 * v2;
        }
    }
    return 0.0;
}

// Gradient with respect to (x, y), in 1/m units times the dimensionless value.
inline Vec2 basis_grad(Basis kind, Vec2 p, double r_norm) {
    const double u = p.x / r_norm;
    const double v = p.y / r_norm;
    const double s = 1.0 / r_norm;
    switch (kind) {
        case Basis::U1: return {s, 0.0};
        case Basis::V1: return {0.0, s};
        case Basis::U2: return {2.0 * u * s, -2.0 * v * s};
        case Basis::V2: return {2.0 * v * s, 2.0 * u * s};
        case Basis::U4:
            return {(4.0 * u * u * u - 12.0 * u * v * v) * s,
                    (4.0 * v * v * v - 12.0 * u * u * v) * s};
        case Basis::V4:
            return {(12.0 * u * u * v - 4.0 * v * v * v) * s,
                    (4.0 * u * u * u - 12.0 * u * v * v) * s};
    }
    return {0.0, 0.0};
}

}  // namespace octotrap
