#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "octotrap/compensation.hpp"
#include "octotrap/decompose.hpp"
#include "octotrap/grid.hpp"

namespace octotrap {

// Decimal with 12 significant digits; stable under write -> read -> write.
inline std::string format_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}
inline std::string format_g(double v, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

// Flat `key = value` text files, '#' starts a comment.
class KeyValues {
  public:
    void set(const std::string& key, double value) { set(key, format_g12(value)); }
    void set(const std::string& key, const std::string& value) {
        if (index_.count(key)) {
            entries_[index_[key]].second = value;
        } else {
            index_[key] = entries_.size();
            entries_.emplace_back(key, value);
        }
    }

    bool has(const std::string& key) const { return index_.count(key) != 0; }
    const std::string& get(const std::string& key) const {
        auto it = index_.find(key);
        if (it == index_.end()) throw ConfigError("missing key: " + key);
        return entries_[it->second].second;
    }
    double get_double(const std::string& key) const {
        const std::string& s = get(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
            if (used != s.size()) throw ConfigError("trailing characters");
            return v;
        } catch (const ConfigError&) {
            throw ConfigError("key '" + key + "': not a number: " + s);
        } catch (...) {
            throw ConfigError("key '" + key + "': not a number: " + s);
        }
    }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? get(key) : fallback;
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string to_string() const {
        std::ostringstream os;
        for (const auto& [k, v] : entries_) os << k << " = " << v << "\n";
        return os.str();
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream f(path);
        if (!f) throw ConfigError("cannot write " + path.string());
        f << to_string();
    }

    static KeyValues parse(const std::string& text) {
        KeyValues kv;
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
            }
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
            kv.set(key, val);
        }
        return kv;
    }

    static KeyValues load(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot read " + path.string());
        std::ostringstream os;
        os << f.rdbuf();
        return parse(os.str());
    }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
};

// ---- layout files ----------------------------------------------------------

inline KeyValues layout_to_keyvalues(const ElectrodeLayout& lay) {
    KeyValues kv;
    kv.set("r0_mm", lay.r0 * 1e3);
    kv.set("rd_mm", lay.rd * 1e3);
    for (int k = 0; k < 8; ++k) {
        kv.set("electrode" + std::to_string(k) + "_x_mm", lay.centers[k].x * 1e3);
        kv.set("electrode" + std::to_string(k) + "_y_mm", lay.centers[k].y * 1e3);
    }
    for (int k = 0; k < 8; ++k) {
        kv.set("amplitude" + std::to_string(k) + "_V", lay.amplitudes[k]);
    }
    return kv;
}

inline ElectrodeLayout layout_from_keyvalues(const KeyValues& kv, double default_amplitude = 200.0) {
    ElectrodeLayout lay;
    lay.r0 = kv.get_double("r0_mm") * 1e-3;
    lay.rd = kv.get_double("rd_mm") * 1e-3;
    for (int k = 0; k < 8; ++k) {
        lay.centers[k].x = kv.get_double("electrode" + std::to_string(k) + "_x_mm") * 1e-3;
        lay.centers[k].y = kv.get_double("electrode" + std::to_string(k) + "_y_mm") * 1e-3;
        lay.amplitudes[k] =
            kv.get_double("amplitude" + std::to_string(k) + "_V", default_amplitude);
    }
    lay.validate();
    return lay;
}

inline void save_layout(const ElectrodeLayout& lay, const std::filesystem::path& path) {
    layout_to_keyvalues(lay).save(path);
}
inline ElectrodeLayout load_layout(const std::filesystem::path& path) {
    return layout_from_keyvalues(KeyValues::load(path));
}

// ---- defect files ----------------------------------------------------------

inline KeyValues defects_to_keyvalues(const DefectSet& d) {
    KeyValues kv;
    kv.set("l_s", d.l_s);
    kv.set("l_t", d.l_t);
    kv.set("xl_s", d.xl_s);
    kv.set("yl_s", d.yl_s);
    kv.set("xl_t", d.xl_t);
    kv.set("yl_t", d.yl_t);
    kv.set("x0", d.x0);
    kv.set("y0", d.y0);
    kv.set("beta_s_mrad", d.beta_s * 1e3);
    kv.set("beta_t_mrad", d.beta_t * 1e3);
    kv.set("delta_mrad", d.delta * 1e3);
    kv.set("r_bar0_mm", d.r_bar0 * 1e3);
    kv.set("delta_r_mm", d.delta_r * 1e3);
    return kv;
}

inline DefectSet defects_from_keyvalues(const KeyValues& kv) {
    DefectSet d;
    d.l_s = kv.get_double("l_s", 0.0);
    d.l_t = kv.get_double("l_t", 0.0);
    d.xl_s = kv.get_double("xl_s", 0.0);
    d.yl_s = kv.get_double("yl_s", 0.0);
    d.xl_t = kv.get_double("xl_t", 0.0);
    d.yl_t = kv.get_double("yl_t", 0.0);
    d.x0 = kv.get_double("x0", 0.0);
    d.y0 = kv.get_double("y0", 0.0);
    d.beta_s = kv.get_double("beta_s_mrad", 0.0) * 1e-3;
    d.beta_t = kv.get_double("beta_t_mrad", 0.0) * 1e-3;
    d.delta = kv.get_double("delta_mrad", 0.0) * 1e-3;
    d.r_bar0 = kv.get_double("r_bar0_mm", 4.0) * 1e-3;
    d.delta_r = kv.get_double("delta_r_mm", 0.0) * 1e-3;
    return d;
}

inline void save_defects(const DefectSet& d, const std::filesystem::path& path) {
    defects_to_keyvalues(d).save(path);
}
inline DefectSet load_defects(const std::filesystem::path& path) {
    return defects_from_keyvalues(KeyValues::load(path));
}

// ---- coefficient / calibration files ---------------------------------------

inline KeyValues coeffs_to_keyvalues(const PerturbationCoeffs& c) {
    KeyValues kv;
    kv.set("a1", c.a1);
    kv.set("a2", c.a2);
    kv.set("a3", c.a3);
    kv.set("a4", c.a4);
    kv.set("h0", c.h0);
    kv.set("r_bar0_mm", c.r_bar0 * 1e3);
    return kv;
}
inline PerturbationCoeffs coeffs_from_keyvalues(const KeyValues& kv) {
    PerturbationCoeffs c;
    c.a1 = kv.get_double("a1", 0.0);
    c.a2 = kv.get_double("a2", 0.0);
    c.a3 = kv.get_double("a3", 0.0);
    c.a4 = kv.get_double("a4", 0.0);
    c.h0 = kv.get_double("h0", 1.0);
    c.r_bar0 = kv.get_double("r_bar0_mm", 4.0) * 1e-3;
    return c;
}

inline void save_calibration(const CalibrationConstants& cal, double ratio,
                             const std::filesystem::path& path) {
    KeyValues kv;
    kv.set("d_cal", cal.d_cal);
    kv.set("q_cal", cal.q_cal);
    kv.set("d_px_um", cal.d_px_used * 1e6);
    kv.set("ratio", ratio);
    kv.save(path);
}
inline CalibrationConstants load_calibration(const std::filesystem::path& path) {
    const KeyValues kv = KeyValues::load(path);
    CalibrationConstants cal;
    cal.d_cal = kv.get_double("d_cal");
    cal.q_cal = kv.get_double("q_cal");
    cal.d_px_used = kv.get_double("d_px_um", 1.0) * 1e-6;
    cal.validate();
    return cal;
}

// ---- CSV -------------------------------------------------------------------

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::string& header) : f_(path) {
        if (!f_) throw ConfigError("cannot write " + path.string());
        f_ << header << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) f_ << ",";
            f_ << cells[i];
        }
        f_ << "\n";
    }

  private:
    std::ofstream f_;
};

inline void save_minima_csv(const MinimaPattern& pat, const std::filesystem::path& path) {
    CsvWriter csv(path, "x_um,y_um,depth_uK");
    for (std::size_t i = 0; i < pat.points.size(); ++i) {
        const double depth_uk =
            (i < pat.depth_j.size() ? pat.depth_j[i] : 0.0) / kBoltzmann * 1e6;
        csv.row({format_g12(pat.points[i].x * 1e6), format_g12(pat.points[i].y * 1e6),
                 format_g12(depth_uk)});
    }
}

inline void save_history_csv(const CorrectionHistory& hist, const std::filesystem::path& path) {
    std::string header = "step,d_b_um,d_res_um,a1,a2,a3,a4";
    for (int k = 0; k < 8; ++k) header += ",dv" + std::to_string(k) + "_V";
    CsvWriter csv(path, header);
    for (std::size_t s = 0; s < hist.steps.size(); ++s) {
        const auto& st = hist.steps[s];
        std::vector<std::string> cells{std::to_string(s), format_g12(st.d_b * 1e6),
                                       format_g12(st.d_res * 1e6), format_g12(st.fitted.a1),
                                       format_g12(st.fitted.a2), format_g12(st.fitted.a3),
                                       format_g12(st.fitted.a4)};
        for (int k = 0; k < 8; ++k) cells.push_back(format_g12(st.bias_cumulative.dv[k]));
        csv.row(cells);
    }
}

inline void save_grid_csv(const PotentialGrid& g, const std::filesystem::path& path,
                          int stride = 1) {
    CsvWriter csv(path, "x_um,y_um,value");
    for (int j = 0; j < g.n; j += stride) {
        for (int i = 0; i < g.n; i += stride) {
            if (g.masked(i, j)) continue;
            const Vec2 p = g.pos(i, j);
            csv.row({format_g12(p.x * 1e6), format_g12(p.y * 1e6), format_g12(g.at(i, j))});
        }
    }
}

}  // namespace octotrap
