#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "octotrap/common.hpp"
#include "octotrap/layout.hpp"

namespace octotrap::bem {

using cplx = std::complex<double>;

struct Circle {
    Vec2 center;
    double radius;
};

// Dirichlet boundary-value solver for a set of charged circular conductors in
// free 2D space. The potential is represented as a single-layer density over
// the circles plus an additive constant, with the zero-total-charge gauge:
//
//   phi(x) = c - (1/2pi) sum_j w_j sigma_j ln|x - y_j|,   sum_j w_j sigma_j = 0
//
// Collocation uses N uniformly spaced nodes per circle. The log-singular
// self-circle blocks are integrated with the spectrally accurate product
// quadrature for ln(4 sin^2((t-s)/2)); the cross-circle blocks are smooth and
// use the plain trapezoid rule.
//
// After factorisation the per-conductor unit-potential densities are solved
// once; any voltage assignment is then a linear combination. Far-field
// evaluation goes through per-circle Laurent (multipole) expansions, near
// fields through direct summation over that circle's nodes.
class System {
  public:
    static constexpr int kDefaultNodesPerCircle = 256;
    static constexpr int kExpansionOrder = 32;
    // Outside this multiple of the circle radius the expansion is used.
    static constexpr double kFarFieldFactor = 1.25;

    System(std::vector<Circle> circles, int nodes_per_circle = kDefaultNodesPerCircle)
        : circles_(std::move(circles)), n_per_(nodes_per_circle) {
        if (n_per_ < 8 || n_per_ % 2 != 0) {
            throw SolverError("bem: nodes per circle must be even and >= 8");
        }
        build_nodes();
        factorize();
        solve_basis();
    }

    int num_circles() const { return static_cast<int>(circles_.size()); }
    const std::vector<Circle>& circles() const { return circles_; }
    int nodes_per_circle() const { return n_per_; }

    // Residual of the boundary conditions at the collocation nodes for a
    // voltage assignment, relative to max|V|.
    double boundary_residual(const std::vector<double>& potentials) const;

    struct Weights {
        std::vector<double> density;  // w_j * sigma_j, per node
        double constant = 0.0;
        // Per circle: [0] total charge, [1..P] Laurent moments.
        std::vector<std::array<cplx, kExpansionOrder + 1>> moments;
        // moments[m]/m for m >= 1, precomputed for the potential evaluation.
        std::vector<std::array<cplx, kExpansionOrder + 1>> pot_moments;
    };

    Weights combine(const std::vector<double>& potentials) const {
        if (potentials.size() != circles_.size()) {
            throw SolverError("bem: wrong number of conductor potentials");
        }
        Weights w;
        w.density.assign(total_nodes(), 0.0);
        w.moments.assign(circles_.size(), {});
        w.pot_moments.assign(circles_.size(), {});
        for (std::size_t e = 0; e < circles_.size(); ++e) {
            const double v = potentials[e];
            if (v == 0.0) continue;
            w.constant += v * basis_constant_[e];
            for (int j = 0; j < total_nodes(); ++j) {
                w.density[j] += v * basis_density_(j, static_cast<Eigen::Index>(e));
            }
            for (std::size_t k = 0; k < circles_.size(); ++k) {
                for (int m = 0; m <= kExpansionOrder; ++m) {
                    w.moments[k][m] += v * basis_moments_[e][k][m];
                }
            }
        }
        for (std::size_t k = 0; k < circles_.size(); ++k) {
            for (int m = 1; m <= kExpansionOrder; ++m) {
                w.pot_moments[k][m] = w.moments[k][m] / static_cast<double>(m);
            }
        }
        return w;
    }

    // Potential at z. Points inside a conductor return the harmonic
    // continuation of the single-layer representation; callers mask them.
    double potential(const Weights& w, Vec2 p) const {
        const cplx z(p.x, p.y);
        double acc = w.constant;
        for (std::size_t k = 0; k < circles_.size(); ++k) {
            const cplx dz = z - cplx(circles_[k].center.x, circles_[k].center.y);
            const double r2 = std::norm(dz);
            const double far = kFarFieldFactor * circles_[k].radius;
            if (r2 > far * far) {
                // -(1/2pi) [ Q ln|dz| - Re sum_m (M_m/m) dz^-m ]
                const cplx inv = 1.0 / dz;
                cplx s = 0.0;
                for (int m = kExpansionOrder; m >= 1; --m) {
                    s = (s + w.pot_moments[k][m]) * inv;
                }
                acc += -(0.5 / kPi) * (w.moments[k][0].real() * 0.5 * std::log(r2) - s.real());
            } else {
                double direct = 0.0;
                const int j0 = static_cast<int>(k) * n_per_;
                // Points sitting numerically on a node would blow up the log;
                // clamping to a sliver of the radius keeps the value at the
                // conductor potential scale.
                const double floor2 = 1e-12 * circles_[k].radius * circles_[k].radius;
                for (int j = 0; j < n_per_; ++j) {
                    const Vec2 d = p - node_pos_[j0 + j];
                    direct += w.density[j0 + j] * 0.5 * std::log(std::max(d.norm2(), floor2));
                }
                acc += -(0.5 / kPi) * direct;
            }
        }
        return acc;
    }

    // Field E = -grad(phi), from the analytic derivative of the
    // representation (complex derivative of the potential).
    Vec2 field(const Weights& w, Vec2 p) const {
        const cplx z(p.x, p.y);
        cplx dphi = 0.0;  // dW/dz with phi = Re W
        for (std::size_t k = 0; k < circles_.size(); ++k) {
            const cplx dz = z - cplx(circles_[k].center.x, circles_[k].center.y);
            const double r2 = std::norm(dz);
            const double far = kFarFieldFactor * circles_[k].radius;
            const cplx inv = 1.0 / dz;
            if (r2 > far * far) {
                cplx s = w.moments[k][0];
                cplx q = inv;
                for (int m = 1; m <= kExpansionOrder; ++m) {
                    s += w.moments[k][m] * q;
                    q *= inv;
                }
                dphi += -(0.5 / kPi) * s * inv;
            } else {
                const int j0 = static_cast<int>(k) * n_per_;
                cplx s = 0.0;
                for (int j = 0; j < n_per_; ++j) {
                    const Vec2 d = p - node_pos_[j0 + j];
                    s += w.density[j0 + j] / cplx(d.x, d.y);
                }
                dphi += -(0.5 / kPi) * s;
            }
        }
        // phi = Re W(z): dphi/dx = Re W', dphi/dy = -Im W'.
        return {-dphi.real(), dphi.imag()};
    }

    int total_nodes() const { return n_per_ * num_circles(); }

  private:
    void build_nodes() {
        node_pos_.resize(total_nodes());
        for (int k = 0; k < num_circles(); ++k) {
            for (int j = 0; j < n_per_; ++j) {
                const double t = 2.0 * kPi * j / n_per_;
                node_pos_[k * n_per_ + j] =
                    circles_[k].center + unit_dir(t) * circles_[k].radius;
            }
        }
    }

    void factorize() {
        const int n = total_nodes();
        Eigen::MatrixXd a(n + 1, n + 1);

        // Product-quadrature weights for ln(4 sin^2(d/2)) on the periodic
        // grid; circulant in the node index difference.
        std::vector<double> kress(n_per_);
        for (int dji = 0; dji < n_per_; ++dji) {
            const double t = 2.0 * kPi * dji / n_per_;
            double s = 0.0;
            for (int m = 1; m < n_per_ / 2; ++m) s += std::cos(m * t) / m;
            kress[dji] = -(4.0 * kPi / n_per_) * (s + std::cos(0.5 * n_per_ * t) / n_per_);
        }

        const double dt = 2.0 * kPi / n_per_;
        for (int ki = 0; ki < num_circles(); ++ki) {
            for (int i = 0; i < n_per_; ++i) {
                const int row = ki * n_per_ + i;
                for (int kj = 0; kj < num_circles(); ++kj) {
                    const double rad = circles_[kj].radius;
                    for (int j = 0; j < n_per_; ++j) {
                        const int col = kj * n_per_ + j;
                        double v;
                        if (ki == kj) {
                            // ln|x-y| = ln(rad) + (1/2) ln(4 sin^2((ti-tj)/2))
                            const int dji = (i - j + n_per_) % n_per_;
                            v = rad * (std::log(rad) * dt + 0.5 * kress[dji]);
                        } else {
                            const Vec2 d = node_pos_[row] - node_pos_[col];
                            v = rad * dt * 0.5 * std::log(d.norm2());
                        }
                        a(row, col) = -(0.5 / kPi) * v;
                    }
                }
                a(row, n) = 1.0;  // additive constant
            }
        }
        for (int kj = 0; kj < num_circles(); ++kj) {
            for (int j = 0; j < n_per_; ++j) {
                a(n, kj * n_per_ + j) = circles_[kj].radius * dt;  // total charge
            }
        }
        a(n, n) = 0.0;
        lu_.compute(a);
        if (lu_.rcond() < 1e-14) {
            throw SolverError("bem: boundary system is numerically singular");
        }
    }

    void solve_basis() {
        const int n = total_nodes();
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 1, num_circles());
        for (int e = 0; e < num_circles(); ++e) {
            for (int j = 0; j < n_per_; ++j) rhs(e * n_per_ + j, e) = 1.0;
        }
        Eigen::MatrixXd sol = lu_.solve(rhs);

        const double dt = 2.0 * kPi / n_per_;
        basis_density_.resize(n, num_circles());
        basis_constant_.resize(num_circles());
        basis_moments_.assign(num_circles(), {});
        for (int e = 0; e < num_circles(); ++e) {
            basis_constant_[e] = sol(n, e);
            basis_moments_[e].assign(num_circles(), {});
            for (int k = 0; k < num_circles(); ++k) {
                const cplx ck(circles_[k].center.x, circles_[k].center.y);
                for (int j = 0; j < n_per_; ++j) {
                    const int idx = k * n_per_ + j;
                    const double wj = sol(idx, e) * circles_[k].radius * dt;
                    basis_density_(idx, e) = wj;
                    cplx pw = 1.0;
                    const cplx dy = cplx(node_pos_[idx].x, node_pos_[idx].y) - ck;
                    for (int m = 0; m <= kExpansionOrder; ++m) {
                        basis_moments_[e][k][m] += wj * pw;
                        pw *= dy;
                    }
                }
            }
        }
    }

    std::vector<Circle> circles_;
    int n_per_;
    std::vector<Vec2> node_pos_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    Eigen::MatrixXd basis_density_;            // node x conductor
    std::vector<double> basis_constant_;       // per conductor
    std::vector<std::vector<std::array<cplx, kExpansionOrder + 1>>> basis_moments_;
};

inline double System::boundary_residual(const std::vector<double>& potentials) const {
    const Weights w = combine(potentials);
    double vmax = 0.0;
    for (double v : potentials) vmax = std::max(vmax, std::abs(v));
    if (vmax == 0.0) vmax = 1.0;

    // On-surface evaluation needs the product quadrature for the own-circle
    // log kernel; plain node summation would report quadrature error, not the
    // solution error. Checked between collocation nodes, where it peaks.
    const double dt = 2.0 * kPi / n_per_;
    double worst = 0.0;
    for (std::size_t k = 0; k < circles_.size(); ++k) {
        const double rad = circles_[k].radius;
        for (int half = 0; half < n_per_; ++half) {
            const double t = dt * (half + 0.5);
            const Vec2 p = circles_[k].center + unit_dir(t) * rad;

            double acc = w.constant;
            // own circle, spectral quadrature at the off-node angle
            double own = 0.0;
            const int j0 = static_cast<int>(k) * n_per_;
            for (int j = 0; j < n_per_; ++j) {
                const double dtj = t - dt * j;
                double r = 0.0;
                for (int m = 1; m < n_per_ / 2; ++m) r += std::cos(m * dtj) / m;
                r = -(4.0 * kPi / n_per_) * (r + std::cos(0.5 * n_per_ * dtj) / n_per_);
                own += w.density[j0 + j] * (std::log(rad) + 0.5 * r / dt);
            }
            acc += -(0.5 / kPi) * own;
            // other circles, smooth kernels
            for (std::size_t kk = 0; kk < circles_.size(); ++kk) {
                if (kk == k) continue;
                const int jj0 = static_cast<int>(kk) * n_per_;
                double other = 0.0;
                for (int j = 0; j < n_per_; ++j) {
                    const Vec2 d = p - node_pos_[jj0 + j];
                    other += w.density[jj0 + j] * 0.5 * std::log(d.norm2());
                }
                acc += -(0.5 / kPi) * other;
            }
            worst = std::max(worst, std::abs(acc - potentials[k]));
        }
    }
    return worst / vmax;
}

// Solver for an as-built trap: conductors from the layout, boundary data
// from amplitudes and phase signs.
class TrapSolver {
  public:
    explicit TrapSolver(const ElectrodeLayout& layout,
                        int nodes_per_circle = System::kDefaultNodesPerCircle)
        : layout_(layout), system_(circles_from_layout(layout), nodes_per_circle) {}

    const System& system() const { return system_; }
    const ElectrodeLayout& layout() const { return layout_; }

    System::Weights weights_for_amplitudes(const std::array<double, 8>& amplitudes) const {
        std::vector<double> pots(8);
        for (int k = 0; k < 8; ++k) pots[k] = layout_.phase_sign[k] * amplitudes[k];
        return system_.combine(pots);
    }

    System::Weights weights() const { return weights_for_amplitudes(layout_.amplitudes); }

    static std::vector<Circle> circles_from_layout(const ElectrodeLayout& lay) {
        std::vector<Circle> cs(8);
        for (int k = 0; k < 8; ++k) cs[k] = {lay.centers[k], lay.rd};
        return cs;
    }

  private:
    ElectrodeLayout layout_;
    System system_;
};

}  // namespace octotrap::bem
