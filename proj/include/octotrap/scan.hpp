#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "octotrap/io.hpp"
#include "octotrap/svg.hpp"
#include "octotrap/worker_pool.hpp"

namespace octotrap {

namespace fs = std::filesystem;

// ---- parameter access by name ----------------------------------------------

inline double* defect_field(DefectSet& d, const std::string& name) {
    if (name == "l_s") return &d.l_s;
    if (name == "l_t") return &d.l_t;
    if (name == "xl_s") return &d.xl_s;
    if (name == "yl_s") return &d.yl_s;
    if (name == "xl_t") return &d.xl_t;
    if (name == "yl_t") return &d.yl_t;
    if (name == "x0") return &d.x0;
    if (name == "y0") return &d.y0;
    if (name == "beta_s") return &d.beta_s;
    if (name == "beta_t") return &d.beta_t;
    if (name == "delta") return &d.delta;
    if (name == "delta_r") return &d.delta_r;
    return nullptr;
}

inline double* coeff_field(PerturbationCoeffs& c, const std::string& name) {
    if (name == "a1") return &c.a1;
    if (name == "a2") return &c.a2;
    if (name == "a3") return &c.a3;
    if (name == "a4") return &c.a4;
    return nullptr;
}

// ---- scan specification ------------------------------------------------------

// One figure-style scan: a defect parameter (numeric route = boundary-value
// solve of the generated layout) or a coefficient (numeric route = the
// voltage pattern applied to a perfect trap), swept over equally spaced
// values with everything else held fixed.
struct ScanSpec {
    enum class Kind { Defect, Coeff };
    Kind kind = Kind::Defect;
    std::string param = "l_s";  // defect/coeff name; "fig6_j" sweeps the
                                // mixed calibration family
    double start = 0.0;
    double stop = 0.1;
    int steps = 11;
    std::map<std::string, double> fixed;
    double d_px = 4.0e-6;
    std::uint64_t seed = 1;
    std::string name = "scan";
    bool splitting_comparison = false;  // add the uncorrected splitting route

    void validate() const {
        if (steps < 1 || steps > 10000) throw ConfigError("scan: steps must be in [1, 10000]");
        if (!(d_px > 0.0)) throw ConfigError("scan: pixel must be positive");
        DefectSet d;
        PerturbationCoeffs c;
        if (kind == Kind::Defect) {
            if (!defect_field(d, param)) throw ConfigError("scan: unknown defect parameter " + param);
            for (const auto& [k, v] : fixed) {
                (void)v;
                if (!defect_field(d, k)) throw ConfigError("scan: unknown fixed parameter " + k);
            }
        } else {
            if (param != "fig6_j" && !coeff_field(c, param)) {
                throw ConfigError("scan: unknown coefficient " + param);
            }
            for (const auto& [k, v] : fixed) {
                (void)v;
                if (!coeff_field(c, k)) throw ConfigError("scan: unknown fixed coefficient " + k);
            }
        }
    }

    double value_at(int i) const {
        if (steps == 1) return start;
        return start + (stop - start) * i / (steps - 1);
    }
};

struct ScanRow {
    double value = 0.0;
    MinimaPattern analytic;
    MinimaPattern numeric;
    std::optional<MinimaPattern> analytic_uncorrected;
    double d_bar = 0.0;        // centred comparison (m)
    double d_bar_abs = 0.0;    // absolute comparison (m)
    double d_bar_s = 0.0;
    double d_bar_uncorrected = -1.0;
    std::string status = "ok";
};

struct ScanResult {
    ScanSpec spec;
    std::vector<ScanRow> rows;
};

namespace detail {

inline void compare_patterns(ScanRow& row) {
    if (row.analytic.points.size() != row.numeric.points.size()) {
        row.status = "count-mismatch";
        row.d_bar = row.d_bar_abs = row.d_bar_s = -1.0;
        return;
    }
    const auto c = minima_metrics(centered_pattern(row.analytic), centered_pattern(row.numeric));
    row.d_bar = c.d_bar;
    row.d_bar_s = c.d_bar_s;
    row.d_bar_abs = minima_metrics(row.analytic, row.numeric).d_bar;
    if (row.analytic_uncorrected) {
        if (row.analytic_uncorrected->points.size() == row.numeric.points.size()) {
            row.d_bar_uncorrected =
                minima_metrics(centered_pattern(*row.analytic_uncorrected),
                               centered_pattern(row.numeric)).d_bar;
        }
    }
}

inline std::vector<std::string> pattern_cells(const MinimaPattern& p) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(p.points.size()));
    for (int i = 0; i < 3; ++i) {
        if (i < static_cast<int>(p.points.size())) {
            cells.push_back(format_g12(p.points[i].x * 1e6));
            cells.push_back(format_g12(p.points[i].y * 1e6));
        } else {
            cells.push_back("");
            cells.push_back("");
        }
    }
    cells.push_back(to_string(p.classification));
    return cells;
}

}  // namespace detail

inline PerturbationCoeffs fig6_family(double j, double r_bar0) {
    PerturbationCoeffs c;
    c.a1 = 0.4 * (0.1 - j);
    c.a2 = 0.2 * j;
    c.a3 = -0.1 * (0.1 - j);
    c.a4 = 0.2 * j;
    c.h0 = 1.0;
    c.r_bar0 = r_bar0;
    return c;
}

inline ScanResult run_scan(const ScanSpec& spec, const TrapConfig& cfg,
                           const CalibrationConstants& cal = {}) {
    spec.validate();
    cfg.validate();
    ScanResult res;
    res.spec = spec;
    res.rows.resize(spec.steps);

    const ScalingCoeffs scal = scaling_coeffs_calibrated(cfg.ratio());
    TrapConfig run_cfg = cfg;
    run_cfg.pixel = spec.d_px;

    if (spec.kind == ScanSpec::Kind::Defect) {
        parallel_for(spec.steps, [&](int i) {
            ScanRow& row = res.rows[i];
            row.value = spec.value_at(i);
            try {
                DefectSet d;
                d.r_bar0 = cfg.r0;
                for (const auto& [k, v] : spec.fixed) *defect_field(d, k) = v;
                *defect_field(d, spec.param) = row.value;

                const auto coeffs = coeffs_from_defects(d, scal);
                row.analytic = analytic_minima(coeffs, run_cfg);
                if (spec.splitting_comparison) {
                    row.analytic_uncorrected =
                        analytic_minima(coeffs_from_defects_uncorrected_splitting(d, scal), run_cfg);
                }

                const auto lay = layout_from_defects(d, cfg);
                bem::TrapSolver solver(lay);
                const auto grid = sample_potential(solver, solver.weights(), cfg.r0, spec.d_px);
                row.numeric = find_minima_numeric(pseudo_map(grid, run_cfg), cfg.r0);
                detail::compare_patterns(row);
            } catch (const std::exception& e) {
                row.status = std::string("error: ") + e.what();
            }
        });
    } else {
        // Coefficient sweep: analytic minima against the voltage-generated
        // pattern on a perfect trap, at the calibration constants.
        bem::TrapSolver solver(perfect_layout(cfg));
        parallel_for(spec.steps, [&](int i) {
            ScanRow& row = res.rows[i];
            row.value = spec.value_at(i);
            try {
                PerturbationCoeffs c;
                c.h0 = 1.0;
                c.r_bar0 = cfg.r0;
                if (spec.param == "fig6_j") {
                    c = fig6_family(row.value, cfg.r0);
                } else {
                    for (const auto& [k, v] : spec.fixed) *coeff_field(c, k) = v;
                    *coeff_field(c, spec.param) = row.value;
                }
                row.analytic = analytic_minima(c, run_cfg);

                const auto bias = voltages_from_coeffs(c, cfg, cal);
                const auto amps = biased_amplitudes(solver.layout(), cfg.v_rf, bias);
                const auto w = solver.weights_for_amplitudes(amps);
                // Refine around the analytic positions in focused windows.
                MinimaPattern num;
                for (const Vec2& target : row.analytic.points) {
                    const double box = 160e-6;
                    const auto pot = sample_potential(solver, w, box, spec.d_px, target);
                    const auto vmap = pseudo_map(pot, run_cfg);
                    const auto mins = grid_local_minima(vmap, box - 2.0 * spec.d_px);
                    double best = 1e300;
                    GridMinimum chosen{};
                    bool found = false;
                    for (const auto& m : mins) {
                        const double dd = (m.refined_pos - target).norm();
                        if (dd < best) { best = dd; chosen = m; found = true; }
                    }
                    if (!found) throw PatternError("no voltage-generated minimum near target");
                    num.points.push_back(chosen.refined_pos);
                    num.depth_j.push_back(chosen.value);
                }
                sort_pattern(num.points);
                num.classification = classify_points(num.points, 0.25 * spec.d_px);
                row.numeric = num;
                detail::compare_patterns(row);
            } catch (const std::exception& e) {
                row.status = std::string("error: ") + e.what();
            }
        });
    }
    return res;
}

inline void save_scan(const ScanResult& res, const fs::path& dir) {
    fs::create_directories(dir);
    std::string header =
        "value,n_analytic,ax1_um,ay1_um,ax2_um,ay2_um,ax3_um,ay3_um,class_analytic,"
        "n_numeric,nx1_um,ny1_um,nx2_um,ny2_um,nx3_um,ny3_um,class_numeric,"
        "d_bar_um,d_bar_abs_um,d_bar_s,d_bar_uncorrected_um,status";
    CsvWriter csv(dir / (res.spec.name + ".csv"), header);
    for (const auto& row : res.rows) {
        std::vector<std::string> cells{format_g12(row.value)};
        auto a = detail::pattern_cells(row.analytic);
        auto n = detail::pattern_cells(row.numeric);
        cells.insert(cells.end(), a.begin(), a.end());
        cells.insert(cells.end(), n.begin(), n.end());
        cells.push_back(format_g12(row.d_bar * 1e6));
        cells.push_back(format_g12(row.d_bar_abs * 1e6));
        cells.push_back(format_g12(row.d_bar_s));
        cells.push_back(row.d_bar_uncorrected >= 0.0 ? format_g12(row.d_bar_uncorrected * 1e6)
                                                     : std::string(""));
        cells.push_back(row.status);
        csv.row(cells);
    }

    // Scatter of minima positions, analytic vs numeric.
    SvgPlot plot(res.spec.name + ": minima positions", "x (um)", "y (um)");
    plot.equal_axes(true);
    auto& sa = plot.add_series("analytic", "#c62828", SvgPlot::Marker::Circle);
    auto& sn = plot.add_series("numeric", "#222222", SvgPlot::Marker::Cross);
    for (const auto& row : res.rows) {
        for (const auto& p : row.analytic.points) sa.points.push_back(p * 1e6);
        for (const auto& p : row.numeric.points) sn.points.push_back(p * 1e6);
    }
    plot.write(dir / (res.spec.name + "_positions.svg"));

    SvgPlot mplot(res.spec.name + ": pattern mismatch", res.spec.param, "d-bar (um)");
    auto& sm = mplot.add_series("centred d-bar", "#1565c0", SvgPlot::Marker::Circle, true);
    for (const auto& row : res.rows) {
        if (row.status == "ok") sm.points.push_back({row.value, row.d_bar * 1e6});
    }
    mplot.write(dir / (res.spec.name + "_mismatch.svg"));
}

// ---- completeness statistics -------------------------------------------------

struct CompletenessCase {
    std::uint64_t seed = 0;
    double d_b = 0.0;
    double d_bar = 0.0;
    double d_bar_s = 0.0;
    std::string status = "ok";
};

struct CompletenessResult {
    double fraction = 0.0;
    std::vector<CompletenessCase> cases;
    int below_2pct = 0;
    int below_4pct = 0;
};

// Random layouts decomposed onto the defect basis; the analytic minima of the
// decomposition are compared with the solver's, both patterns referenced to
// their own centres.
inline CompletenessResult run_completeness(int n_seeds, double fraction, const TrapConfig& cfg,
                                           std::uint64_t seed0 = 1) {
    cfg.validate();
    CompletenessResult res;
    res.fraction = fraction;
    res.cases.resize(n_seeds);
    const ScalingCoeffs scal = scaling_coeffs_calibrated(cfg.ratio());

    parallel_for(n_seeds, [&](int i) {
        CompletenessCase& cse = res.cases[i];
        cse.seed = seed0 + static_cast<std::uint64_t>(i);
        try {
            const auto lay = random_layout(cse.seed, fraction, cfg);
            bem::TrapSolver solver(lay);
            const auto grid = sample_potential(solver, solver.weights(), cfg.r0, cfg.pixel);
            const auto numeric = find_minima_numeric(pseudo_map(grid, cfg), cfg.r0);
            cse.d_b = numeric.d_b();

            const auto dec = decompose_layout(lay, cfg);
            const auto coeffs = coeffs_from_defects(dec.defects, scal);
            auto analytic = analytic_minima(coeffs, cfg);
            // Back into the lab frame: undo the rotation projected out by the
            // decomposition (the translation drops in the centred metric).
            analytic = rotated_pattern(analytic, dec.removed_rotation);

            if (analytic.points.size() != numeric.points.size()) {
                cse.status = "count-mismatch";
                cse.d_bar = cse.d_bar_s = -1.0;
                return;
            }
            const auto m = minima_metrics(centered_pattern(analytic), centered_pattern(numeric));
            cse.d_bar = m.d_bar;
            cse.d_bar_s = m.d_bar_s;
        } catch (const std::exception& e) {
            cse.status = std::string("error: ") + e.what();
            cse.d_bar = cse.d_bar_s = -1.0;
        }
    });
    for (const auto& cse : res.cases) {
        if (cse.status == "ok" && cse.d_bar_s >= 0.0) {
            if (cse.d_bar_s < 0.02) ++res.below_2pct;
            if (cse.d_bar_s < 0.04) ++res.below_4pct;
        }
    }
    return res;
}

inline void save_completeness(const CompletenessResult& res, const fs::path& dir) {
    fs::create_directories(dir);
    CsvWriter csv(dir / "completeness.csv", "seed,d_b_um,d_bar_um,d_bar_s,status");
    for (const auto& c : res.cases) {
        csv.row({std::to_string(c.seed), format_g12(c.d_b * 1e6), format_g12(c.d_bar * 1e6),
                 format_g12(c.d_bar_s), c.status});
    }
    KeyValues kv;
    kv.set("fraction", res.fraction);
    kv.set("cases", static_cast<double>(res.cases.size()));
    kv.set("below_2pct", static_cast<double>(res.below_2pct));
    kv.set("below_4pct", static_cast<double>(res.below_4pct));
    kv.save(dir / "completeness_summary.txt");
}

// ---- diagnosis success tables -------------------------------------------------

struct TableCase {
    double a_true[4] = {0, 0, 0, 0};
    double a_fit[4] = {0, 0, 0, 0};
    double d_bar = 0.0;
    bool ok = false;
    std::string status = "ok";
};

struct TableResult {
    double d_px = 0.0;
    std::vector<TableCase> cases;
    double rate_1px = 0.0;
    double rate_2px = 0.0;
    double sigma[4] = {0, 0, 0, 0};
};

// Randomised coefficient sets; the observation is the analytic pattern with
// positions quantised to the pixel grid, and the search protocol must get the
// coefficients back.
inline TableResult run_success_table(int cases, double d_px, const TrapConfig& cfg,
                                     std::uint64_t seed0 = 1) {
    TableResult res;
    res.d_px = d_px;
    res.cases.resize(cases);
    TrapConfig run_cfg = cfg;
    run_cfg.pixel = d_px;

    parallel_for(cases, [&](int i) {
        TableCase& c = res.cases[i];
        Rng rng(seed0, static_cast<std::uint64_t>(i) + 1000 * static_cast<std::uint64_t>(d_px * 1e6));
        PerturbationCoeffs truth;
        truth.h0 = 1.0;
        truth.r_bar0 = cfg.r0;
        truth.a1 = rng.uniform(-0.1, 0.1);
        truth.a2 = rng.uniform(-0.1, 0.1);
        truth.a3 = rng.uniform(-0.1, 0.1);
        truth.a4 = rng.uniform(-0.1, 0.1);
        for (int k = 0; k < 4; ++k) c.a_true[k] = (&truth.a1)[k];
        try {
            auto obs = analytic_minima(truth, run_cfg);
            for (auto& p : obs.points) {
                p.x = std::round(p.x / d_px) * d_px;
                p.y = std::round(p.y / d_px) * d_px;
            }
            // The search protocol works on the relative minima positions.
            const auto fit = fit_coefficients(centered_pattern(obs), run_cfg);
            c.a_fit[0] = fit.coeffs.a1;
            c.a_fit[1] = fit.coeffs.a2;
            c.a_fit[2] = fit.coeffs.a3;
            c.a_fit[3] = fit.coeffs.a4;
            c.d_bar = fit.residual;
            c.ok = true;
        } catch (const std::exception& e) {
            c.status = std::string("error: ") + e.what();
            c.d_bar = 1.0;
        }
    });

    int n1 = 0, n2 = 0, nok = 0;
    double mean[4] = {0, 0, 0, 0};
    std::vector<const TableCase*> successes;
    for (const auto& c : res.cases) {
        if (c.d_bar < d_px) ++n1;
        if (c.d_bar < 2.0 * d_px) ++n2;
        if (c.d_bar < d_px) successes.push_back(&c);
    }
    nok = static_cast<int>(successes.size());
    res.rate_1px = static_cast<double>(n1) / cases;
    res.rate_2px = static_cast<double>(n2) / cases;
    if (nok > 1) {
        for (const auto* c : successes) {
            for (int k = 0; k < 4; ++k) mean[k] += c->a_fit[k] - c->a_true[k];
        }
        for (double& m : mean) m /= nok;
        for (const auto* c : successes) {
            for (int k = 0; k < 4; ++k) {
                const double d = c->a_fit[k] - c->a_true[k] - mean[k];
                res.sigma[k] += d * d;
            }
        }
        for (double& s : res.sigma) s = std::sqrt(s / (nok - 1));
    }
    return res;
}

inline void save_tables(const std::vector<TableResult>& tables, const fs::path& dir) {
    fs::create_directories(dir);
    {
        CsvWriter csv(dir / "table_cases.csv",
                      "d_px_um,case,a1_true,a2_true,a3_true,a4_true,a1_fit,a2_fit,a3_fit,a4_fit,"
                      "d_bar_um,status");
        for (const auto& t : tables) {
            for (std::size_t i = 0; i < t.cases.size(); ++i) {
                const auto& c = t.cases[i];
                csv.row({format_g12(t.d_px * 1e6), std::to_string(i), format_g12(c.a_true[0]),
                         format_g12(c.a_true[1]), format_g12(c.a_true[2]), format_g12(c.a_true[3]),
                         format_g12(c.a_fit[0]), format_g12(c.a_fit[1]), format_g12(c.a_fit[2]),
                         format_g12(c.a_fit[3]), format_g12(c.d_bar * 1e6), c.status});
            }
        }
    }
    {
        CsvWriter csv(dir / "table_summary.csv",
                      "d_px_um,success_rate_1px,success_rate_2px,sigma1,sigma2,sigma3,sigma4");
        for (const auto& t : tables) {
            csv.row({format_g12(t.d_px * 1e6), format_g12(t.rate_1px), format_g12(t.rate_2px),
                     format_g12(t.sigma[0]), format_g12(t.sigma[1]), format_g12(t.sigma[2]),
                     format_g12(t.sigma[3])});
        }
    }
}

// ---- compensation demo --------------------------------------------------------

struct CompensationDemo {
    std::uint64_t seed = 0;
    CorrectionHistory history;
};

inline CompensationDemo run_compensation_demo(std::uint64_t seed, double fraction, int steps,
                                              const TrapConfig& cfg,
                                              const CalibrationConstants& cal) {
    CompensationDemo demo;
    demo.seed = seed;
    ElectrodeLayout lay =
        fraction == 0.0 ? perfect_layout(cfg)
                        : remove_global_rotation(random_layout(seed, fraction, cfg));
    demo.history = iterate_correction(lay, cfg, cal, steps);
    return demo;
}

inline void save_compensation(const CompensationDemo& demo, const fs::path& dir) {
    fs::create_directories(dir);
    save_history_csv(demo.history, dir / "history.csv");
    if (!demo.history.steps.empty()) {
        save_minima_csv(demo.history.steps.back().observed, dir / "final_minima.csv");
    }

    SvgPlot pos("minima per correction step", "x (um)", "y (um)");
    pos.equal_axes(true);
    static const char* colors[] = {"#b71c1c", "#e65100", "#f9a825", "#2e7d32",
                                   "#00838f", "#1565c0", "#4527a0", "#6a1b9a",
                                   "#444444", "#000000"};
    for (std::size_t s = 0; s < demo.history.steps.size(); ++s) {
        auto& ser = pos.add_series("step " + std::to_string(s), colors[s % 10],
                                   SvgPlot::Marker::Circle);
        for (const auto& p : demo.history.steps[s].observed.points) ser.points.push_back(p * 1e6);
    }
    pos.write(dir / "minima_steps.svg");

    SvgPlot conv("barycentre distance per step", "step", "d_b (um)");
    auto& ser = conv.add_series("d_b", "#1565c0", SvgPlot::Marker::Circle, true);
    for (std::size_t s = 0; s < demo.history.steps.size(); ++s) {
        ser.points.push_back({static_cast<double>(s), demo.history.steps[s].d_b * 1e6});
    }
    conv.write(dir / "convergence.svg");
}

// ---- scale-factor calibration ---------------------------------------------------

struct HCalPoint {
    double ratio = 0.0;
    double amplitude = 0.0;
    double h = 0.0;
    double h_err = 0.0;
    std::string status = "ok";
};

struct HCalResult {
    std::string defect;  // compression | sliding | splitting | shearing
    std::vector<HCalPoint> points;
    std::vector<double> poly;  // fitted coefficients, ascending, over ratio
};

// Measures the scale factor of one defect class against the field solver:
// build the single-defect layout, read the minima, fit the coefficients and
// divide by the defect amplitude. Error bars propagate one pixel of position
// uncertainty through the pattern-size laws.
inline HCalResult run_h_calibration(const std::string& defect, const std::vector<double>& amplitudes,
                                    const std::vector<double>& ratios, const TrapConfig& base_cfg) {
    HCalResult res;
    res.defect = defect;
    const int n = static_cast<int>(amplitudes.size() * ratios.size());
    res.points.resize(n);

    parallel_for(n, [&](int idx) {
        HCalPoint& pt = res.points[idx];
        const double ratio = ratios[idx / amplitudes.size()];
        const double amp = amplitudes[idx % amplitudes.size()];
        pt.ratio = ratio;
        pt.amplitude = amp;
        try {
            TrapConfig cfg = base_cfg;
            cfg.rd = ratio * cfg.r0;
            DefectSet d;
            d.r_bar0 = cfg.r0;
            bool quad = false;
            if (defect == "compression") { d.l_s = amp; quad = true; }
            else if (defect == "sliding") { d.yl_s = amp; }
            else if (defect == "splitting") { d.y0 = amp; }
            else if (defect == "shearing") { d.beta_t = amp; quad = true; }
            else throw ConfigError("unknown defect kind: " + defect);

            const auto lay = layout_from_defects(d, cfg);
            bem::TrapSolver solver(lay);
            const auto grid = sample_potential(solver, solver.weights(), cfg.r0, cfg.pixel);
            const auto pattern = find_minima_numeric(pseudo_map(grid, cfg), cfg.r0);
            const auto fit = fit_coefficients(centered_pattern(pattern), cfg);

            const double a = quad ? fit.coeffs.a1 : fit.coeffs.a4;
            pt.h = a / amp;
            // One pixel on the pattern size through d ~ a^(1/2) (quad) or
            // a^(1/3) (dipole).
            const double size = std::max(pattern.d_b(), cfg.pixel);
            const double power = quad ? 2.0 : 3.0;
            pt.h_err = std::abs(pt.h) * power * cfg.pixel / size;
        } catch (const std::exception& e) {
            pt.status = std::string("error: ") + e.what();
        }
    });

    // Least-squares polynomial over ratio (degree 4 like the published fits).
    std::vector<std::pair<double, double>> samples;
    for (const auto& pt : res.points) {
        if (pt.status == "ok") samples.push_back({pt.ratio, pt.h});
    }
    const int deg = samples.size() >= 6 ? 4 : (samples.size() >= 3 ? 2 : 0);
    if (!samples.empty()) {
        Eigen::MatrixXd a(samples.size(), deg + 1);
        Eigen::VectorXd b(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            double p = 1.0;
            for (int k = 0; k <= deg; ++k) {
                a(static_cast<Eigen::Index>(i), k) = p;
                p *= samples[i].first;
            }
            b(static_cast<Eigen::Index>(i)) = samples[i].second;
        }
        Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
        res.poly.assign(sol.data(), sol.data() + sol.size());
    }
    return res;
}

inline void save_h_calibration(const HCalResult& res, const fs::path& dir) {
    fs::create_directories(dir);
    CsvWriter csv(dir / ("h_" + res.defect + ".csv"), "ratio,amplitude,h,h_err,status");
    for (const auto& pt : res.points) {
        csv.row({format_g12(pt.ratio), format_g12(pt.amplitude), format_g12(pt.h),
                 format_g12(pt.h_err), pt.status});
    }
    KeyValues kv;
    kv.set("defect", res.defect);
    for (std::size_t i = 0; i < res.poly.size(); ++i) {
        kv.set("poly_c" + std::to_string(i), res.poly[i]);
    }
    kv.save(dir / ("h_" + res.defect + "_fit.txt"));

    SvgPlot plot("scale factor vs radius ratio: " + res.defect, "rd/r0", "h");
    auto& s1 = plot.add_series("measured", "#1565c0", SvgPlot::Marker::Circle);
    for (const auto& pt : res.points) {
        if (pt.status != "ok") continue;
        s1.points.push_back({pt.ratio, pt.h});
        s1.yerr.push_back(pt.h_err);
    }
    plot.write(dir / ("h_" + res.defect + ".svg"));
}

// ---- manifests -----------------------------------------------------------------

inline void write_manifest(const fs::path& dir, const std::string& command, const TrapConfig& cfg,
                           const std::vector<std::pair<std::string, std::string>>& extra) {
    fs::create_directories(dir);
    KeyValues kv;
    kv.set("version", std::string(kVersion));
    kv.set("command", command);
    kv.set("r0_mm", cfg.r0 * 1e3);
    kv.set("rd_mm", cfg.rd * 1e3);
    kv.set("v_rf_V", cfg.v_rf);
    kv.set("omega_rf_rad_s", cfg.omega_rf);
    kv.set("charge_C", cfg.charge);
    kv.set("mass_kg", cfg.mass);
    kv.set("pixel_um", cfg.pixel * 1e6);
    kv.set("solver_nodes_per_circle", static_cast<double>(bem::System::kDefaultNodesPerCircle));
    kv.set("solver_expansion_order", static_cast<double>(bem::System::kExpansionOrder));
    kv.set("scaling_hh_mode", std::string("empirical"));
    for (const auto& [k, v] : extra) kv.set(k, v);
    kv.save(dir / "manifest.txt");
}

}  // namespace octotrap
