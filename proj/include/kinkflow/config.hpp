#ifndef KINKFLOW_CONFIG_HPP
#define KINKFLOW_CONFIG_HPP

// Flat key-value config with [section] headers; keys are addressed as
// "section.key". Unknown keys are an error so typos cannot silently fall
// back to defaults. The full schema is listed in the README.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "kinkflow/evolution.hpp"

namespace kinkflow {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

inline ConfigMap parse_config_text(std::istream& in) {
    ConfigMap map;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": empty key or value");
        if (!section.empty()) key = section + "." + key;
        map[key] = val;
    }
    return map;
}

inline ConfigMap load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config_text(in);
}

// apply a --set style "section.key=value" override
inline void apply_override(ConfigMap& map, const std::string& kv) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size())
        throw ConfigError("override must be key=value: " + kv);
    map[detail::trim(kv.substr(0, eq))] = detail::trim(kv.substr(eq + 1));
}

inline RunConfig make_run_config(const ConfigMap& map) {
    RunConfig cfg;
    auto as_int = [](const std::string& k, const std::string& v) {
        try {
            std::size_t pos;
            int x = std::stoi(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            throw ConfigError("bad integer for " + k + ": " + v);
        }
    };
    auto as_double = [](const std::string& k, const std::string& v) {
        try {
            std::size_t pos;
            double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            throw ConfigError("bad number for " + k + ": " + v);
        }
    };
    auto as_bool = [](const std::string& k, const std::string& v) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ConfigError("bad boolean for " + k + ": " + v);
    };
    for (const auto& [k, v] : map) {
        if (k == "grid.d") cfg.grid.d = as_int(k, v);
        else if (k == "grid.n_transverse") cfg.grid.n_transverse = as_int(k, v);
        else if (k == "grid.n_z") cfg.grid.n_z = as_int(k, v);
        else if (k == "grid.L_z") cfg.grid.L_z = as_double(k, v);
        else if (k == "grid.dealias") cfg.grid.dealias = as_bool(k, v);
        else if (k == "run.t_end") cfg.t_end = as_double(k, v);
        else if (k == "run.dt") cfg.dt = as_double(k, v);
        else if (k == "run.s_stab") cfg.s_stab = as_double(k, v);
        else if (k == "run.record_stride") cfg.record_stride = as_int(k, v);
        else if (k == "run.checkpoint_stride") cfg.checkpoint_stride = as_int(k, v);
        else if (k == "run.abort_sup") cfg.abort_sup = as_double(k, v);
        else if (k == "init.c0") cfg.init.c0 = as_double(k, v);
        else if (k == "init.eps") cfg.init.eps = as_double(k, v);
        else if (k == "init.shape") cfg.init.shape = v;
        else if (k == "init.seed") cfg.init.seed = std::stoull(v);
        else throw ConfigError("unknown config key: " + k);
    }
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline ConfigMap config_map_of(const RunConfig& cfg) {
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    ConfigMap map;
    map["grid.d"] = std::to_string(cfg.grid.d);
    map["grid.n_transverse"] = std::to_string(cfg.grid.n_transverse);
    map["grid.n_z"] = std::to_string(cfg.grid.n_z);
    map["grid.L_z"] = num(cfg.grid.L_z);
    map["grid.dealias"] = cfg.grid.dealias ? "true" : "false";
    map["run.t_end"] = num(cfg.t_end);
    map["run.dt"] = num(cfg.dt);
    map["run.s_stab"] = num(cfg.s_stab);
    map["run.record_stride"] = std::to_string(cfg.record_stride);
    map["run.checkpoint_stride"] = std::to_string(cfg.checkpoint_stride);
    map["run.abort_sup"] = num(cfg.abort_sup);
    map["init.c0"] = num(cfg.init.c0);
    map["init.eps"] = num(cfg.init.eps);
    map["init.shape"] = cfg.init.shape;
    map["init.seed"] = std::to_string(cfg.init.seed);
    return map;
}

}  // namespace kinkflow

#endif
