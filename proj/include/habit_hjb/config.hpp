#ifndef HABIT_HJB_CONFIG_HPP
#define HABIT_HJB_CONFIG_HPP

// Run configuration. The file format is one `section.key = value` per line,
// `#` starts a comment, lists are comma separated. The same key table is used
// to parse files and to write the resolved configuration into CSV headers,
// so a header can be fed back as a config.

#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "annuity.hpp"
#include "convergence.hpp"
#include "hjb_scaled.hpp"
#include "model.hpp"
#include "montecarlo.hpp"

namespace habit_hjb {

inline constexpr const char* kVersion = "1.0.0";

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key))
    {
    }
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct ScaledGridSpec {
    double xs_min = 0.01;
    double xs_max = 400.0;
    std::size_t n = 512;
    std::size_t n_time = 40000;
    ThetaMode theta_mode = ThetaMode::fixed;
};

struct WdtSpec {
    std::vector<double> w0 = {1, 5, 10, 20, 35, 50, 75};
};

struct AnnuitySpec {
    DeltaWSpec rule;
    double cbar = 10.0;
    double w_max = 100.0;
    std::size_t n_probes = 100;
    std::size_t pension_levels = 6;
    double aew_w = 10.0;
};

struct ConvergeSpec {
    RefineAxis axis = RefineAxis::wealth;
    std::vector<std::size_t> nodes = {65, 129, 257, 513, 1025};
    std::vector<std::size_t> n_time; // empty: grid.n_time for every resolution
    double t0 = 0.0;
};

struct SweepSpec {
    std::vector<double> eta = {0.01, 0.1, 1.0};
    std::vector<double> theta = {0.6};
    std::vector<double> sigma = {0.16};
    std::vector<double> cbar = {1, 5, 20};
    std::vector<double> w = {1, 30, 60};
};

struct RunConfig {
    ModelParams model;
    GridSpec grid;
    ScaledGridSpec scaled;
    SimConfig sim;
    WdtSpec wdt;
    AnnuitySpec annuity;
    ConvergeSpec converge;
    SweepSpec sweep;
    std::string out_dir = "out";

    void validate() const;
};

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << x;
    return os.str();
}

inline double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (trim(v.substr(used)).empty()) {
            return x;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError(key, "expected a number, got '" + v + "'");
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v)
{
    if (!v.empty() && v.find_first_not_of("0123456789") == std::string::npos) {
        try {
            return std::stoull(v);
        } catch (const std::exception&) {
        }
    }
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F f)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out += (i ? ", " : "") + f(xs[i]);
    }
    return out;
}

struct KeyHandler {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class Member>
KeyHandler number_key(std::string key, Member member)
{
    return {key,
            [key, member](RunConfig& c, const std::string& v) { member(c) = parse_double(key, v); },
            [member](const RunConfig& c) { return fmt(member(const_cast<RunConfig&>(c))); }};
}

template <class Member>
KeyHandler count_key(std::string key, Member member)
{
    return {key,
            [key, member](RunConfig& c, const std::string& v) {
                member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(parse_uint(key, v));
            },
            [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <class Member>
KeyHandler number_list_key(std::string key, Member member)
{
    return {key,
            [key, member](RunConfig& c, const std::string& v) {
                std::vector<double> xs;
                for (const auto& item : split_list(v)) {
                    xs.push_back(parse_double(key, item));
                }
                member(c) = xs;
            },
            [member](const RunConfig& c) { return join(member(const_cast<RunConfig&>(c)), fmt); }};
}

template <class Member>
KeyHandler count_list_key(std::string key, Member member)
{
    return {key,
            [key, member](RunConfig& c, const std::string& v) {
                std::vector<std::size_t> xs;
                for (const auto& item : split_list(v)) {
                    xs.push_back(static_cast<std::size_t>(parse_uint(key, item)));
                }
                member(c) = xs;
            },
            [member](const RunConfig& c) {
                return join(member(const_cast<RunConfig&>(c)), [](std::size_t x) { return std::to_string(x); });
            }};
}

inline const std::vector<KeyHandler>& key_table()
{
#define HH_M(expr) [](RunConfig& c) -> auto& { return expr; }
    static const std::vector<KeyHandler> table = {
        number_key("model.r", HH_M(c.model.r)),
        number_key("model.mu", HH_M(c.model.mu)),
        number_key("model.sigma", HH_M(c.model.sigma)),
        number_key("model.theta", HH_M(c.model.theta)),
        number_key("model.gamma", HH_M(c.model.gamma)),
        number_key("model.rho", HH_M(c.model.rho)),
        number_key("model.eta", HH_M(c.model.eta)),
        number_key("model.pi", HH_M(c.model.pi)),
        number_key("model.retire_age", HH_M(c.model.retire_age)),
        number_key("model.gompertz_m", HH_M(c.model.gompertz_m)),
        number_key("model.gompertz_b", HH_M(c.model.gompertz_b)),
        number_key("model.horizon", HH_M(c.model.horizon)),

        number_key("grid.w_max", HH_M(c.grid.w_max)),
        count_key("grid.n_w", HH_M(c.grid.n_w)),
        number_key("grid.c_min", HH_M(c.grid.c_min)),
        number_key("grid.c_max", HH_M(c.grid.c_max)),
        count_key("grid.n_c", HH_M(c.grid.n_c)),
        count_key("grid.n_time", HH_M(c.grid.n_time)),

        number_key("scaled.xs_min", HH_M(c.scaled.xs_min)),
        number_key("scaled.xs_max", HH_M(c.scaled.xs_max)),
        count_key("scaled.n", HH_M(c.scaled.n)),
        count_key("scaled.n_time", HH_M(c.scaled.n_time)),
        {"scaled.theta_mode",
         [](RunConfig& c, const std::string& v) {
             if (v == "fixed") {
                 c.scaled.theta_mode = ThetaMode::fixed;
             } else if (v == "control") {
                 c.scaled.theta_mode = ThetaMode::control;
             } else {
                 throw ConfigError("scaled.theta_mode", "expected fixed or control, got '" + v + "'");
             }
         },
         [](const RunConfig& c) { return std::string(c.scaled.theta_mode == ThetaMode::fixed ? "fixed" : "control"); }},

        count_key("sim.n_paths", HH_M(c.sim.n_paths)),
        number_key("sim.dt", HH_M(c.sim.dt_sim)),
        count_key("sim.seed", HH_M(c.sim.seed)),
        number_key("sim.w0", HH_M(c.sim.w0)),
        number_key("sim.cbar0", HH_M(c.sim.cbar0)),
        number_key("sim.depletion_eps", HH_M(c.sim.depletion_eps)),
        number_key("sim.policy_scale", HH_M(c.sim.policy_scale)),
        {"sim.stop_at_depletion",
         [](RunConfig& c, const std::string& v) { c.sim.stop_at_depletion = parse_bool("sim.stop_at_depletion", v); },
         [](const RunConfig& c) { return std::string(c.sim.stop_at_depletion ? "true" : "false"); }},
        count_key("sim.record_paths", HH_M(c.sim.record_paths)),
        count_key("sim.record_every", HH_M(c.sim.record_every)),

        number_list_key("wdt.w0", HH_M(c.wdt.w0)),

        {"annuity.rule",
         [](RunConfig& c, const std::string& v) {
             if (v == "proportional") {
                 c.annuity.rule.rule = DeltaWRule::proportional;
             } else if (v == "full") {
                 c.annuity.rule.rule = DeltaWRule::full;
             } else if (v == "fixed") {
                 c.annuity.rule.rule = DeltaWRule::fixed;
             } else {
                 throw ConfigError("annuity.rule", "expected proportional, full or fixed, got '" + v + "'");
             }
         },
         [](const RunConfig& c) { return std::string(rule_name(c.annuity.rule.rule)); }},
        number_key("annuity.fraction", HH_M(c.annuity.rule.fraction)),
        number_key("annuity.amount", HH_M(c.annuity.rule.amount)),
        number_key("annuity.cbar", HH_M(c.annuity.cbar)),
        number_key("annuity.w_max", HH_M(c.annuity.w_max)),
        count_key("annuity.n_probes", HH_M(c.annuity.n_probes)),
        count_key("annuity.pension_levels", HH_M(c.annuity.pension_levels)),
        number_key("annuity.aew_w", HH_M(c.annuity.aew_w)),

        {"converge.axis",
         [](RunConfig& c, const std::string& v) {
             if (v == "w") {
                 c.converge.axis = RefineAxis::wealth;
             } else if (v == "cbar") {
                 c.converge.axis = RefineAxis::habit;
             } else {
                 throw ConfigError("converge.axis", "expected w or cbar, got '" + v + "'");
             }
         },
         [](const RunConfig& c) { return std::string(axis_name(c.converge.axis)); }},
        count_list_key("converge.nodes", HH_M(c.converge.nodes)),
        count_list_key("converge.n_time", HH_M(c.converge.n_time)),
        number_key("converge.t0", HH_M(c.converge.t0)),

        number_list_key("sweep.eta", HH_M(c.sweep.eta)),
        number_list_key("sweep.theta", HH_M(c.sweep.theta)),
        number_list_key("sweep.sigma", HH_M(c.sweep.sigma)),
        number_list_key("sweep.cbar", HH_M(c.sweep.cbar)),
        number_list_key("sweep.w", HH_M(c.sweep.w)),

        {"output.dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
         [](const RunConfig& c) { return c.out_dir; }},
    };
#undef HH_M
    return table;
}

} // namespace detail

/// Sets one key from its text value.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value)
{
    for (const auto& h : detail::key_table()) {
        if (h.key == key) {
            h.set(c, value);
            return;
        }
    }
    throw ConfigError(key, "unknown key");
}

/// Applies `key = value` lines. In CSV mode only the leading `# key = value`
/// comment block is read (the header written by write_csv_header).
inline void apply_config_text(RunConfig& c, std::istream& in, bool csv_header = false)
{
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = detail::trim(raw);
        if (csv_header) {
            if (line.rfind('#', 0) != 0) {
                break;
            }
            line = detail::trim(std::string_view(line).substr(1));
            if (line.find('=') == std::string::npos) {
                continue;
            }
        } else {
            if (const auto hash = line.find('#'); hash != std::string::npos) {
                line = detail::trim(std::string_view(line).substr(0, hash));
            }
        }
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (csv_header && (key == "version" || key == "command" || key == "table")) {
            continue;
        }
        set_config_value(c, key, value);
    }
}

/// Loads a config file on top of the defaults. Files ending in .csv are read
/// through their comment header.
inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot open config file '" + path + "'");
    }
    RunConfig c;
    const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    apply_config_text(c, in, csv);
    return c;
}

/// All keys with their resolved values, in table order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& h : detail::key_table()) {
        out.emplace_back(h.key, h.get(c));
    }
    return out;
}

inline void RunConfig::validate() const
{
    try {
        model.validate();
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        throw ConfigError(what.substr(0, what.find(':')), what.substr(what.find(':') + 2));
    }
    auto require = [](bool ok, const char* key, const char* what) {
        if (!ok) {
            throw ConfigError(key, what);
        }
    };
    require(grid.w_max > 0.0, "grid.w_max", "must be > 0");
    require(grid.n_w >= 3, "grid.n_w", "must be >= 3");
    require(grid.c_min > 0.0, "grid.c_min", "must be > 0");
    require(grid.c_max > grid.c_min, "grid.c_max", "must exceed grid.c_min");
    require(grid.n_c >= 2, "grid.n_c", "must be >= 2");
    require(scaled.xs_min > 0.0, "scaled.xs_min", "must be > 0");
    require(scaled.xs_max > scaled.xs_min, "scaled.xs_max", "must exceed scaled.xs_min");
    require(scaled.n >= 3, "scaled.n", "must be >= 3");
    require(scaled.n_time >= 1, "scaled.n_time", "must be >= 1");
    try {
        sim.validate();
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        throw ConfigError(what.substr(0, what.find(':')), what.substr(what.find(':') + 2));
    }
    for (double w : wdt.w0) {
        require(w >= 0.0, "wdt.w0", "entries must be >= 0");
    }
    require(annuity.rule.fraction > 0.0 && annuity.rule.fraction <= 1.0, "annuity.fraction", "must lie in (0, 1]");
    require(annuity.rule.amount > 0.0, "annuity.amount", "must be > 0");
    require(annuity.cbar > 0.0, "annuity.cbar", "must be > 0");
    require(annuity.w_max > 0.0 && annuity.w_max <= grid.w_max, "annuity.w_max", "must lie in (0, grid.w_max]");
    require(annuity.n_probes >= 2, "annuity.n_probes", "must be >= 2");
    require(annuity.pension_levels >= 2, "annuity.pension_levels", "must be >= 2");
    require(annuity.aew_w >= 0.0, "annuity.aew_w", "must be >= 0");
    require(converge.nodes.size() >= 3, "converge.nodes", "needs at least 3 resolutions");
    for (std::size_t i = 1; i < converge.nodes.size(); ++i) {
        const std::size_t a = converge.nodes[i - 1];
        const std::size_t b = converge.nodes[i];
        require(a >= 2 && b > a && (b - 1) % (a - 1) == 0, "converge.nodes", "resolutions must be nested");
    }
    require(converge.n_time.empty() || converge.n_time.size() == converge.nodes.size(), "converge.n_time",
            "must be empty or match converge.nodes in length");
    require(converge.t0 >= 0.0 && converge.t0 < model.horizon, "converge.t0", "must lie in [0, model.horizon)");
    for (double s : sweep.sigma) {
        require(s > 0.0, "sweep.sigma", "entries must be > 0");
    }
    for (double t : sweep.theta) {
        require(t >= 0.0 && t <= 1.0, "sweep.theta", "entries must lie in [0, 1]");
    }
    for (double e : sweep.eta) {
        require(e >= 0.0, "sweep.eta", "entries must be >= 0");
    }
    require(!out_dir.empty(), "output.dir", "must not be empty");
}

} // namespace habit_hjb

#endif // HABIT_HJB_CONFIG_HPP
