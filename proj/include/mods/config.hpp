#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mods/mods.hpp"

namespace mods {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` text. `#` starts a comment; sets are comma lists.
/// Stage entries use a `stageN.` prefix (N from 1).
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in);
    static ConfigFile load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    const std::map<std::string, std::string>& values() const { return values_; }

    /// The synthesis configuration described by the unprefixed keys
    /// `preset`, `detector`, `scales`, `tilts`, `delta_phi_base` and
    /// `sigma_base`, starting from `base`.
    NamedConfig synthesis(const NamedConfig& base) const;

    /// Stages from `stageN.*` keys; empty when there are none. Each stage
    /// starts from `stageN.preset` if given, else from the plain detector.
    std::vector<ModsStage> stages() const;

    /// theta_m, s_max, model, ransac_threshold, ransac_confidence,
    /// ransac_max_iterations, seed, match, ratio_mser, ratio_hessaff,
    /// ratio_dog, inconsistency_radius, duplicate_radius.
    void apply(ModsOptions& options) const;

    /// Throws ConfigError naming the first key not understood by any of the above.
    void check_keys() const;

private:
    std::map<std::string, std::string> values_;
    NamedConfig section(const std::string& prefix, NamedConfig base) const;
};

std::vector<double> parse_number_list(const std::string& text);

/// Multi-line human-readable dump of everything a run resolves to.
std::string describe_run(const std::vector<ModsStage>& stages, const ModsOptions& options);
std::string describe_config(const NamedConfig& config);

std::optional<GeometryModel> parse_model(const std::string& name);
std::optional<MatchKind> parse_match_kind(const std::string& name);

}  // namespace mods
