#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace octotrap {

inline constexpr const char* kVersion = "0.1.0";

// Physical constants (SI).
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg
inline constexpr double kBoltzmann = 1.380649e-23;            // J/K
inline constexpr double kPi = 3.141592653589793238462643383279502884;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2 operator-() const { return {-x, -y}; }

    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline Vec2 unit_dir(double angle) { return {std::cos(angle), std::sin(angle)}; }
inline Vec2 rotate(const Vec2& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Error taxonomy. The CLI maps these onto exit codes.
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DecompositionError : std::runtime_error {
    double residual_rms = 0.0;
    DecompositionError(const std::string& msg, double rms)
        : std::runtime_error(msg), residual_rms(rms) {}
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ModelViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PatternError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DiagnosisError : std::runtime_error {
    double best_residual = 0.0;
    DiagnosisError(const std::string& msg, double residual)
        : std::runtime_error(msg), best_residual(residual) {}
};
struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace octotrap
