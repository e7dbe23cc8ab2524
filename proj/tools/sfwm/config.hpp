#pragma once

// Flat JSON run configuration. Each command declares its keys; values come
// from the defaults, then an optional config file, then `--key value` flags.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sfwm/error.hpp"
#include "sfwm/io.hpp"
#include "sfwm/version.hpp"

namespace sfwm::cli {

enum class KeyType { Number, Integer, String, Boolean };

enum class Range {
    Any,
    Positive,
    NonNegative,
    NonPositive,
    Probability,  // [0, 1]
};

struct KeySpec {
    std::string name;
    KeyType type;
    Json default_value;
    std::string help;
    Range range = Range::Any;
    std::vector<std::string> choices;  // for strings; empty means free text
};

using Schema = std::vector<KeySpec>;

inline const char* type_name(KeyType t) {
    switch (t) {
        case KeyType::Number: return "number";
        case KeyType::Integer: return "integer";
        case KeyType::String: return "string";
        case KeyType::Boolean: return "boolean";
    }
    return "?";
}

class Config {
public:
    Config(const Schema& schema, Json values) : schema_(&schema), values_(std::move(values)) {}

    double number(const std::string& key) const { return at(key).get<double>(); }
    std::int64_t integer(const std::string& key) const { return at(key).get<std::int64_t>(); }
    std::string string(const std::string& key) const { return at(key).get<std::string>(); }
    bool boolean(const std::string& key) const { return at(key).get<bool>(); }
    const Json& values() const { return values_; }

private:
    const Json& at(const std::string& key) const {
        if (!values_.contains(key)) throw ConfigError("internal: key '" + key + "' not in schema");
        return values_.at(key);
    }

    const Schema* schema_;
    Json values_;
};

namespace detail {

inline Json coerce_json(const KeySpec& spec, const Json& v, const std::string& origin) {
    auto bad = [&] {
        return ConfigError(origin + ": key '" + spec.name + "' expects a " + type_name(spec.type));
    };
    switch (spec.type) {
        case KeyType::Number:
            if (!v.is_number()) throw bad();
            return v.get<double>();
        case KeyType::Integer:
            if (v.is_number_integer()) return v.get<std::int64_t>();
            if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>())
                return static_cast<std::int64_t>(v.get<double>());
            throw bad();
        case KeyType::String:
            if (!v.is_string()) throw bad();
            return v;
        case KeyType::Boolean:
            if (!v.is_boolean()) throw bad();
            return v;
    }
    throw bad();
}

inline Json coerce_text(const KeySpec& spec, const std::string& text) {
    const std::string origin = "flag --" + spec.name;
    auto bad = [&] {
        return ConfigError(origin + ": cannot read '" + text + "' as a " + type_name(spec.type));
    };
    switch (spec.type) {
        case KeyType::Number: {
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(text, &used);
            } catch (const std::exception&) {
                throw bad();
            }
            if (used != text.size()) throw bad();
            return x;
        }
        case KeyType::Integer: {
            std::size_t used = 0;
            long long x = 0;
            try {
                x = std::stoll(text, &used);
            } catch (const std::exception&) {
                throw bad();
            }
            if (used != text.size()) throw bad();
            return static_cast<std::int64_t>(x);
        }
        case KeyType::String: return text;
        case KeyType::Boolean:
            if (text == "true" || text == "1") return true;
            if (text == "false" || text == "0") return false;
            throw bad();
    }
    throw bad();
}

inline void check_range(const KeySpec& spec, const Json& v) {
    if (spec.type == KeyType::String) {
        if (spec.choices.empty()) return;
        const auto s = v.get<std::string>();
        for (const auto& c : spec.choices)
            if (c == s) return;
        std::string list;
        for (const auto& c : spec.choices) list += (list.empty() ? "" : ", ") + c;
        throw ConfigError("key '" + spec.name + "' must be one of: " + list);
    }
    if (spec.type == KeyType::Boolean) return;
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("key '" + spec.name + "' must be finite");
    switch (spec.range) {
        case Range::Any: return;
        case Range::Positive:
            if (!(x > 0.0)) throw ConfigError("key '" + spec.name + "' must be positive");
            return;
        case Range::NonNegative:
            if (!(x >= 0.0)) throw ConfigError("key '" + spec.name + "' must be >= 0");
            return;
        case Range::NonPositive:
            if (!(x <= 0.0)) throw ConfigError("key '" + spec.name + "' must be <= 0");
            return;
        case Range::Probability:
            if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("key '" + spec.name + "' must lie in [0, 1]");
            return;
    }
}

inline const KeySpec* find_key(const Schema& schema, const std::string& name) {
    for (const auto& k : schema)
        if (k.name == name) return &k;
    return nullptr;
}

}  // namespace detail

inline Json read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    Json j;
    try {
        j = Json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
    return j;
}

/// Merges defaults, the config document and flag overrides, then validates
/// every value against the schema. Unknown keys are rejected.
inline Config resolve_config(const Schema& schema, const Json& document,
                             const std::map<std::string, std::string>& overrides) {
    Json values = Json::object();
    for (const auto& k : schema) values[k.name] = k.default_value;

    for (const auto& [key, v] : document.items()) {
        if (key == "schema_version") {
            if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
                throw ConfigError("config schema_version " + v.dump() + " is not supported (expected " +
                                  std::to_string(kSchemaVersion) + ")");
            continue;
        }
        const KeySpec* spec = detail::find_key(schema, key);
        if (!spec) throw ConfigError("unknown config key '" + key + "'");
        values[key] = detail::coerce_json(*spec, v, "config");
    }
    for (const auto& [key, text] : overrides) {
        const KeySpec* spec = detail::find_key(schema, key);
        if (!spec) throw ConfigError("unknown config key '" + key + "'");
        values[key] = detail::coerce_text(*spec, text);
    }
    for (const auto& k : schema) detail::check_range(k, values[k.name]);
    return Config(schema, std::move(values));
}

inline std::string output_path(const Config& cfg, const std::string& file) {
    const std::filesystem::path dir = cfg.string("output_dir");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return (dir / file).string();
}

}  // namespace sfwm::cli
