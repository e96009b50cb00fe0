#include "tacos/config.hpp"

#include <fstream>
#include <sstream>

#include "tacos/envs.hpp"
#include "tacos/errors.hpp"

namespace tacos {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

} // namespace

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str());
}

KvConfig KvConfig::parse_string(const std::string& text) {
    KvConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no), "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(line_no), "empty section name");
            cfg.data_[section]; // section may stay empty
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
        if (section.empty())
            throw ConfigError("line " + std::to_string(line_no), "key outside any section");
        if (cfg.data_[section].count(key))
            throw ConfigError(section + "." + key, "duplicate key");
        cfg.data_[section][key] = value;
    }
    return cfg;
}

bool KvConfig::has_section(const std::string& s) const { return data_.count(s) > 0; }

bool KvConfig::has(const std::string& s, const std::string& k) const {
    auto it = data_.find(s);
    return it != data_.end() && it->second.count(k) > 0;
}

std::string KvConfig::get_string(const std::string& s, const std::string& k) const {
    auto it = data_.find(s);
    if (it == data_.end() || !it->second.count(k))
        throw ConfigError(s + "." + k, "missing required key");
    return it->second.at(k);
}

double KvConfig::get_double(const std::string& s, const std::string& k) const {
    const std::string v = get_string(s, k);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw ConfigError(s + "." + k, "expected a number, got '" + v + "'");
    }
}

long KvConfig::get_long(const std::string& s, const std::string& k) const {
    const std::string v = get_string(s, k);
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw ConfigError(s + "." + k, "expected an integer, got '" + v + "'");
    }
}

std::vector<double> KvConfig::get_double_list(const std::string& s, const std::string& k) const {
    std::vector<double> out;
    for (const std::string& tok : split_list(get_string(s, k))) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(s + "." + k, "expected numbers, got '" + tok + "'");
        }
    }
    return out;
}

std::vector<long> KvConfig::get_long_list(const std::string& s, const std::string& k) const {
    std::vector<long> out;
    for (const std::string& tok : split_list(get_string(s, k))) {
        try {
            out.push_back(std::stol(tok));
        } catch (const std::exception&) {
            throw ConfigError(s + "." + k, "expected integers, got '" + tok + "'");
        }
    }
    return out;
}

std::string KvConfig::get_string_or(const std::string& s, const std::string& k,
                                    const std::string& fallback) const {
    return has(s, k) ? get_string(s, k) : fallback;
}
double KvConfig::get_double_or(const std::string& s, const std::string& k, double fallback) const {
    return has(s, k) ? get_double(s, k) : fallback;
}
long KvConfig::get_long_or(const std::string& s, const std::string& k, long fallback) const {
    return has(s, k) ? get_long(s, k) : fallback;
}

void KvConfig::set(const std::string& s, const std::string& k, const std::string& v) {
    data_[s][k] = v;
}

std::map<std::string, std::string> KvConfig::section(const std::string& name) const {
    auto it = data_.find(name);
    return it == data_.end() ? std::map<std::string, std::string>{} : it->second;
}

std::string KvConfig::to_string() const {
    std::stringstream ss;
    for (const auto& [sec, kv] : data_) {
        ss << '[' << sec << "]\n";
        for (const auto& [k, v] : kv) ss << k << " = " << v << '\n';
        ss << '\n';
    }
    return ss.str();
}

namespace {
const std::vector<std::string> kAlgorithms = {"sac-tacos",  "sac-equidistant", "sac-mc",
                                              "otacos",     "mean-tacos",      "pets-tacos"};
const std::vector<std::string> kExperimentKeys = {"id",     "algorithm", "env",    "mode",
                                                  "seeds",  "budget",    "dt_sim", "output",
                                                  "sweep_param", "sweep_values"};
} // namespace

ExperimentConfig ExperimentConfig::from_config(const KvConfig& cfg) {
    for (const auto& [sec, kv] : cfg.sections()) {
        if (sec != "experiment" && sec != "env_overrides" && sec != "sac" && sec != "model_based")
            throw ConfigError(sec, "unknown section");
        if (sec == "experiment")
            for (const auto& [k, v] : kv) {
                (void)v;
                bool known = false;
                for (const auto& kk : kExperimentKeys) known |= (kk == k);
                if (!known) throw ConfigError("experiment." + k, "unknown key");
            }
    }

    ExperimentConfig e;
    e.id = cfg.get_string("experiment", "id");
    e.algorithm = cfg.get_string("experiment", "algorithm");
    e.env = cfg.get_string("experiment", "env");
    e.mode = cfg.get_string_or("experiment", "mode", "cost");
    e.seeds = cfg.has("experiment", "seeds") ? cfg.get_long_list("experiment", "seeds")
                                             : std::vector<long>{};
    e.budget = cfg.get_long("experiment", "budget");
    e.dt_sim = cfg.get_double_or("experiment", "dt_sim", 1e-3);
    e.output = cfg.get_string_or("experiment", "output", e.id);
    if (cfg.has("experiment", "sweep_param")) {
        e.sweep_param = cfg.get_string("experiment", "sweep_param");
        e.sweep_values = cfg.get_double_list("experiment", "sweep_values");
    }
    for (const auto& [k, v] : cfg.section("env_overrides")) {
        try {
            e.env_overrides[k] = std::stod(v);
        } catch (const std::exception&) {
            throw ConfigError("env_overrides." + k, "expected a number, got '" + v + "'");
        }
    }
    e.sac = cfg.section("sac");
    e.model_based = cfg.section("model_based");
    e.validate();
    return e;
}

KvConfig ExperimentConfig::to_config() const {
    KvConfig cfg;
    cfg.set("experiment", "id", id);
    cfg.set("experiment", "algorithm", algorithm);
    cfg.set("experiment", "env", env);
    cfg.set("experiment", "mode", mode);
    {
        std::stringstream ss;
        for (std::size_t i = 0; i < seeds.size(); ++i) ss << (i ? "," : "") << seeds[i];
        cfg.set("experiment", "seeds", ss.str());
    }
    cfg.set("experiment", "budget", std::to_string(budget));
    {
        std::stringstream ss;
        ss.precision(17);
        ss << dt_sim;
        cfg.set("experiment", "dt_sim", ss.str());
    }
    cfg.set("experiment", "output", output);
    if (!sweep_param.empty()) {
        cfg.set("experiment", "sweep_param", sweep_param);
        std::stringstream ss;
        ss.precision(17);
        for (std::size_t i = 0; i < sweep_values.size(); ++i)
            ss << (i ? "," : "") << sweep_values[i];
        cfg.set("experiment", "sweep_values", ss.str());
    }
    for (const auto& [k, v] : env_overrides) {
        std::stringstream ss;
        ss.precision(17);
        ss << v;
        cfg.set("env_overrides", k, ss.str());
    }
    for (const auto& [k, v] : sac) cfg.set("sac", k, v);
    for (const auto& [k, v] : model_based) cfg.set("model_based", k, v);
    return cfg;
}

void ExperimentConfig::validate() const {
    if (id.empty()) throw ConfigError("experiment.id", "must not be empty");
    bool ok = false;
    for (const auto& a : kAlgorithms) ok |= (a == algorithm);
    if (!ok) throw ConfigError("experiment.algorithm", "unknown algorithm '" + algorithm + "'");
    if (!is_known_env(env)) throw ConfigError("experiment.env", "unknown environment '" + env + "'");
    if (mode != "cost" && mode != "bounded")
        throw ConfigError("experiment.mode", "must be 'cost' or 'bounded'");
    if (seeds.empty()) throw ConfigError("experiment.seeds", "seed list must not be empty");
    if (budget <= 0) throw ConfigError("experiment.budget", "must be positive");
    if (!(dt_sim > 0)) throw ConfigError("experiment.dt_sim", "must be positive");
    if (!sweep_param.empty() && sweep_values.empty())
        throw ConfigError("experiment.sweep_values", "sweep_param given without values");
    if (mode == "bounded" && algorithm != "otacos" && algorithm != "mean-tacos" &&
        algorithm != "pets-tacos") {
        const bool k_from_sweep = sweep_param == "K";
        if (!k_from_sweep && !sac.count("K"))
            throw ConfigError("sac.K", "bounded mode needs an interaction bound K");
    }
}

} // namespace tacos
