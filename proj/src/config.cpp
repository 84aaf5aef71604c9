#include "mods/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mods {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || *end != '\0' || !std::isfinite(v))
        throw ConfigError("'" + key + "': not a number: '" + text + "'");
    return v;
}

int to_int(const std::string& key, const std::string& text)
{
    const double v = to_number(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ConfigError("'" + key + "': not an integer: '" + text + "'");
    return static_cast<int>(v);
}

const std::set<std::string> kSectionKeys{"preset", "detector", "scales", "tilts", "delta_phi_base", "sigma_base"};
const std::set<std::string> kOptionKeys{"theta_m", "s_max", "model", "ransac_threshold", "ransac_confidence",
    "ransac_max_iterations", "seed", "match", "ratio_mser", "ratio_hessaff", "ratio_dog", "inconsistency_radius",
    "duplicate_radius"};

// "stage12.tilts" -> 12, "tilts"; nullopt for unprefixed keys.
std::optional<std::pair<int, std::string>> split_stage(const std::string& key)
{
    if (key.rfind("stage", 0) != 0)
        return std::nullopt;
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 5)
        return std::nullopt;
    const std::string num = key.substr(5, dot - 5);
    if (!std::all_of(num.begin(), num.end(), [](unsigned char c) { return std::isdigit(c); }) || num.size() > 3)
        return std::nullopt;
    return std::make_pair(std::stoi(num), key.substr(dot + 1));
}

std::string list(const std::vector<double>& v)
{
    std::string s;
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.4g", i ? "," : "", v[i]);
        s += buf;
    }
    return s;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text)
{
    std::vector<double> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(to_number("list", item));
    if (out.empty())
        throw ConfigError("empty list");
    return out;
}

std::optional<GeometryModel> parse_model(const std::string& name)
{
    if (name == "homography" || name == "H")
        return GeometryModel::HOMOGRAPHY;
    if (name == "fundamental" || name == "F")
        return GeometryModel::FUNDAMENTAL;
    return std::nullopt;
}

std::optional<MatchKind> parse_match_kind(const std::string& name)
{
    if (name == "fginn" || name == "first-inconsistent")
        return MatchKind::FIRST_GEOM_INCONSISTENT;
    if (name == "snn" || name == "second-nearest")
        return MatchKind::SECOND_NEAREST;
    return std::nullopt;
}

ConfigFile ConfigFile::parse(std::istream& in)
{
    ConfigFile cf;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (!cf.values_.emplace(key, value).second)
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return cf;
}

ConfigFile ConfigFile::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    return parse(in);
}

std::optional<std::string> ConfigFile::get(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
        return std::nullopt;
    return it->second;
}

NamedConfig ConfigFile::section(const std::string& prefix, NamedConfig base) const
{
    if (auto v = get(prefix + "preset")) {
        try {
            base = find_preset(*v);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (auto v = get(prefix + "detector")) {
        const auto d = parse_detector(*v);
        if (!d)
            throw ConfigError("unknown detector '" + *v + "'");
        if (*d != base.detector && !has(prefix + "sigma_base"))
            base.config.sigma_base = default_sigma_base(*d);
        base.detector = *d;
    }
    if (auto v = get(prefix + "scales"))
        base.config.scales = parse_number_list(*v);
    if (auto v = get(prefix + "tilts"))
        base.config.tilts = parse_number_list(*v);
    if (auto v = get(prefix + "delta_phi_base"))
        base.config.delta_phi_base = to_number(prefix + "delta_phi_base", *v);
    if (auto v = get(prefix + "sigma_base"))
        base.config.sigma_base = to_number(prefix + "sigma_base", *v);
    if (get(prefix + "preset") == std::nullopt && (has(prefix + "detector") || has(prefix + "scales")
            || has(prefix + "tilts") || has(prefix + "delta_phi_base") || has(prefix + "sigma_base")))
        base.name = prefix.empty() ? "custom" : prefix.substr(0, prefix.size() - 1);
    try {
        base.config.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return base;
}

NamedConfig ConfigFile::synthesis(const NamedConfig& base) const
{
    return section("", base);
}

std::vector<ModsStage> ConfigFile::stages() const
{
    std::set<int> ids;
    for (const auto& [k, v] : values_)
        if (auto s = split_stage(k))
            ids.insert(s->first);
    std::vector<ModsStage> out;
    int expect = 1;
    for (int id : ids) {
        if (id != expect++)
            throw ConfigError("stage numbers must run 1, 2, 3, ... without gaps");
        const std::string prefix = "stage" + std::to_string(id) + ".";
        if (!has(prefix + "preset") && !has(prefix + "detector"))
            throw ConfigError(prefix + "preset or " + prefix + "detector is required");
        NamedConfig base = plain_config(DetectorKind::MSER);
        if (auto d = get(prefix + "detector"))
            if (auto kind = parse_detector(*d))
                base = plain_config(*kind);
        NamedConfig c = section(prefix, base);
        if (!has(prefix + "preset"))
            c.name = "stage" + std::to_string(id);
        out.push_back({c.detector, c.config, c.name});
    }
    return out;
}

void ConfigFile::apply(ModsOptions& o) const
{
    if (auto v = get("theta_m"))
        o.theta_m = to_int("theta_m", *v);
    if (auto v = get("s_max"))
        o.s_max = to_int("s_max", *v);
    if (auto v = get("model")) {
        const auto m = parse_model(*v);
        if (!m)
            throw ConfigError("unknown model '" + *v + "'");
        o.model = *m;
    }
    if (auto v = get("ransac_threshold"))
        o.ransac_threshold = to_number("ransac_threshold", *v);
    if (auto v = get("ransac_confidence"))
        o.ransac_confidence = to_number("ransac_confidence", *v);
    if (auto v = get("ransac_max_iterations"))
        o.ransac_max_iterations = to_int("ransac_max_iterations", *v);
    if (auto v = get("seed")) {
        const int s = to_int("seed", *v);
        if (s < 0)
            throw ConfigError("'seed' must be >= 0");
        o.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = get("match")) {
        const auto m = parse_match_kind(*v);
        if (!m)
            throw ConfigError("unknown match rule '" + *v + "'");
        o.match_kind = *m;
    }
    if (auto v = get("ratio_mser"))
        o.ratio[static_cast<int>(DetectorKind::MSER)] = to_number("ratio_mser", *v);
    if (auto v = get("ratio_hessaff"))
        o.ratio[static_cast<int>(DetectorKind::HESSAFF)] = to_number("ratio_hessaff", *v);
    if (auto v = get("ratio_dog"))
        o.ratio[static_cast<int>(DetectorKind::DOG)] = to_number("ratio_dog", *v);
    if (auto v = get("inconsistency_radius"))
        o.inconsistency_radius = to_number("inconsistency_radius", *v);
    if (auto v = get("duplicate_radius"))
        o.duplicate_radius = to_number("duplicate_radius", *v);
}

void ConfigFile::check_keys() const
{
    for (const auto& [k, v] : values_) {
        if (auto s = split_stage(k)) {
            if (!kSectionKeys.count(s->second))
                throw ConfigError("unknown key '" + k + "'");
        } else if (!kSectionKeys.count(k) && !kOptionKeys.count(k)) {
            throw ConfigError("unknown key '" + k + "'");
        }
    }
}

std::string describe_config(const NamedConfig& c)
{
    const auto views = enumerate_views(c.config);
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s: detector=%s scales={%s} tilts={%s} delta_phi_base=%.4g sigma_base=%.4g views=%zu",
        c.name.c_str(), std::string(to_string(c.detector)).c_str(), list(c.config.scales).c_str(),
        list(c.config.tilts).c_str(), c.config.delta_phi_base, c.config.sigma_base, views.size());
    return buf;
}

std::string describe_run(const std::vector<ModsStage>& stages, const ModsOptions& o)
{
    std::string s;
    for (std::size_t i = 0; i < stages.size(); ++i)
        s += "stage " + std::to_string(i + 1) + " "
             + describe_config({stages[i].label, stages[i].detector, stages[i].config}) + "\n";
    char buf[512];
    std::snprintf(buf, sizeof buf,
        "theta_m=%d s_max=%d model=%s match=%s ratio(mser,hessaff,dog)=%.3g,%.3g,%.3g inconsistency_radius=%.4g "
        "duplicate_radius=%.4g ransac_threshold=%.4g ransac_confidence=%.4g ransac_max_iterations=%d seed=%llu\n",
        o.theta_m, o.s_max > 0 ? o.s_max : static_cast<int>(stages.size()),
        o.model == GeometryModel::HOMOGRAPHY ? "homography" : "fundamental",
        o.match_kind == MatchKind::FIRST_GEOM_INCONSISTENT ? "fginn" : "snn", o.ratio[0], o.ratio[1], o.ratio[2],
        o.inconsistency_radius, o.duplicate_radius, o.ransac_threshold, o.ransac_confidence, o.ransac_max_iterations,
        static_cast<unsigned long long>(o.seed));
    return s + buf;
}

}  // namespace mods
