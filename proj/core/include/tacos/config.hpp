#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tacos {

/// Flat typed key-value configuration with [section] headers, one "key =
/// value" pair per line, and '#' comments. Keys are unique per section;
/// lists are comma-separated. The schema is validated by the consumer;
/// unknown keys are reported with field-level messages.
class KvConfig {
public:
    static KvConfig parse_file(const std::string& path);
    static KvConfig parse_string(const std::string& text);

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key) const;
    long get_long(const std::string& section, const std::string& key) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
    std::vector<long> get_long_list(const std::string& section, const std::string& key) const;

    std::string get_string_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const;
    double get_double_or(const std::string& section, const std::string& key,
                         double fallback) const;
    long get_long_or(const std::string& section, const std::string& key, long fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return data_;
    }
    /// All keys of one section (empty map when the section is absent).
    std::map<std::string, std::string> section(const std::string& name) const;

    /// Serializes back to the canonical text form (sorted sections/keys).
    std::string to_string() const;

private:
    std::map<std::string, std::map<std::string, std::string>> data_;
};

/// One experiment: an environment, an algorithm, an optional single sweep
/// axis and a seed list. Mirrors the on-disk config schema.
struct ExperimentConfig {
    std::string id;
    std::string algorithm; // sac-tacos | sac-equidistant | sac-mc | otacos | mean-tacos | pets-tacos
    std::string env;
    std::string mode = "cost"; // cost | bounded
    std::vector<long> seeds;
    long budget = 0;      // interactions (sac family) or episodes (model-based family)
    double dt_sim = 1e-3;
    std::string output;   // artifact subdirectory
    std::map<std::string, double> env_overrides;

    // optional sweep: one axis, one value per cell
    std::string sweep_param; // env override name, or "K", or "fixed_tau"
    std::vector<double> sweep_values;

    // algorithm sections kept as raw key-value for the runners
    std::map<std::string, std::string> sac;
    std::map<std::string, std::string> model_based;

    static ExperimentConfig from_config(const KvConfig& cfg);
    KvConfig to_config() const;
    void validate() const;
};

} // namespace tacos
