#ifndef WVFIELD_SCENARIO_CONFIG_HPP
#define WVFIELD_SCENARIO_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "wvfield/types.hpp"

namespace wvf::scenario {

enum class ParamType { Int, Real, Bool, String, Complex, ComplexList };

using ParamValue = std::variant<std::int64_t, double, bool, std::string,
                                wvf::Complex, std::vector<wvf::Complex>>;

struct ParamSpec {
    ParamType type;
    ParamValue default_value;
    bool required = false;
};

using Schema = std::map<std::string, ParamSpec>;

// All scenario kinds and their parameter schemas, keyed by kind name.
const std::map<std::string, Schema>& scenario_schemas();

// Flat sectioned key = value configuration for one scenario run.
struct ScenarioConfig {
    std::string kind;
    std::uint64_t seed = 0;
    std::string out_dir;  // empty: resolved by the caller
    std::map<std::string, ParamValue> params;  // explicitly set values

    std::int64_t get_int(const std::string& key) const;
    double get_real(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    wvf::Complex get_complex(const std::string& key) const;
    std::vector<wvf::Complex> get_complex_list(const std::string& key) const;
};

// Strict parser: [section] headers, key = value lines, '#' comments.
// Unknown kinds, unknown keys, and type mismatches fail with line numbers.
ScenarioConfig parse_config(const std::string& text);

// Canonical text form; parse(serialize(parse(t))) == parse(t).
std::string serialize_config(const ScenarioConfig& config);

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

// "1.2+0.3j", "-0.5j", "2e-3"
wvf::Complex parse_complex(const std::string& token);
std::string format_complex(wvf::Complex value);

}  // namespace wvf::scenario

#endif
