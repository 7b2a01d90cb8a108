#include "wvfield/scenario/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "wvfield/io.hpp"

namespace wvf::scenario {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
    std::ostringstream out;
    out << "config error, line " << line << ": " << msg;
    throw ConfigError(out.str());
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

Schema qubit_pair(const char* pre_default, const char* post_default) {
    return Schema{
        {"pre", {ParamType::ComplexList, std::string(pre_default), false}},
        {"post", {ParamType::ComplexList, std::string(post_default), false}},
    };
}

void merge(Schema& dst, const Schema& src) {
    for (const auto& [k, v] : src) dst.emplace(k, v);
}

ParamValue cl(const char* text) { return std::string(text); }

}  // namespace

const std::map<std::string, Schema>& scenario_schemas() {
    static const std::map<std::string, Schema> schemas = [] {
        std::map<std::string, Schema> m;

        // the anomalous qubit is the default everywhere a qubit pair appears
        const char* kPlus = "0.7071067811865476, 0.7071067811865476";
        const char* kAnomalousPost = "0.9238795325112867, -0.3826834323650898";
        const char* kCircularPost = "0.7071067811865476, -0.7071067811865476j";

        {
            Schema s = qubit_pair(kPlus, kAnomalousPost);
            s["observable"] = {ParamType::String, cl("sigma_z"), false};
            m["weak_value"] = s;
        }
        {
            Schema s = qubit_pair(kPlus, kCircularPost);
            s["perturbation"] = {ParamType::String, cl("sigma_z"), false};
            s["hamiltonian"] = {ParamType::String, cl("zero"), false};
            s["n_slices"] = {ParamType::Int, std::int64_t(1), false};
            s["dt"] = {ParamType::Real, 1.0, false};
            s["delta_kick"] = {ParamType::Bool, true, false};
            s["kick_position"] = {ParamType::Int, std::int64_t(0), false};
            s["hbar"] = {ParamType::Real, 1.0, false};
            s["g_max"] = {ParamType::Real, 0.05, false};
            s["n_g"] = {ParamType::Int, std::int64_t(9), false};
            s["tol"] = {ParamType::Real, 1e-6, false};
            m["eq6_check"] = s;
        }
        {
            Schema s;
            s["pre1"] = {ParamType::ComplexList, cl(kPlus), false};
            s["post1"] = {ParamType::ComplexList, cl(kAnomalousPost), false};
            s["h1"] = {ParamType::String, cl("sigma_z"), false};
            s["pre2"] = {ParamType::ComplexList, cl(kPlus), false};
            s["post2"] = {ParamType::ComplexList, cl(kCircularPost), false};
            s["h2"] = {ParamType::String, cl("sigma_z"), false};
            s["fd_step"] = {ParamType::Real, 1e-4, false};
            s["tol"] = {ParamType::Real, 1e-5, false};
            m["eq7_check"] = s;
        }
        {
            Schema s;
            s["n_scenarios"] = {ParamType::Int, std::int64_t(25), false};
            s["max_dim"] = {ParamType::Int, std::int64_t(16), false};
            s["max_slices"] = {ParamType::Int, std::int64_t(8), false};
            s["dt"] = {ParamType::Real, 0.2, false};
            s["tol"] = {ParamType::Real, 1e-6, false};
            m["schwinger_check"] = s;
        }
        {
            Schema s;
            s["n_max"] = {ParamType::Int, std::int64_t(64), false};
            s["alpha"] = {ParamType::Complex, Complex(0.7, 0.2), false};
            s["beta"] = {ParamType::Complex, Complex(0.4, -0.1), false};
            s["omega"] = {ParamType::Real, 1.0, false};
            s["n_slices"] = {ParamType::Int, std::int64_t(6), false};
            s["dt"] = {ParamType::Real, 0.15, false};
            s["slices"] = {ParamType::String, cl("0,2,5"), false};
            s["tol"] = {ParamType::Real, 1e-6, false};
            m["background_field"] = s;
        }
        {
            Schema s = qubit_pair(kPlus, kCircularPost);
            s["hamiltonian"] = {ParamType::String, cl("sigma_x"), false};
            s["source"] = {ParamType::String, cl("sigma_z"), false};
            s["n_slices"] = {ParamType::Int, std::int64_t(4), false};
            s["dt"] = {ParamType::Real, 0.3, false};
            s["slice_1"] = {ParamType::Int, std::int64_t(1), false};
            s["slice_2"] = {ParamType::Int, std::int64_t(3), false};
            s["tol"] = {ParamType::Real, 1e-5, false};
            m["npoint"] = s;
        }
        {
            Schema s = qubit_pair(kPlus, kAnomalousPost);
            s["observable"] = {ParamType::String, cl("sigma_z"), false};
            s["sigma"] = {ParamType::Real, 1.0, false};
            s["g"] = {ParamType::Real, 0.01, false};
            s["n_points"] = {ParamType::Int, std::int64_t(2048), false};
            s["span_sigmas"] = {ParamType::Real, 12.0, false};
            s["n_shots"] = {ParamType::Int, std::int64_t(100000), false};
            s["basis"] = {ParamType::String, cl("both"), false};
            m["pointer_mc"] = s;
        }
        {
            Schema s;
            s["slit_separation"] = {ParamType::Real, 4.0, false};
            s["slit_width"] = {ParamType::Real, 0.3, false};
            s["propagation_time"] = {ParamType::Real, 1.0, false};
            s["n_nodes"] = {ParamType::Int, std::int64_t(1024), false};
            s["half_width"] = {ParamType::Real, 16.0, false};
            s["n_frames"] = {ParamType::Int, std::int64_t(600), false};
            s["n_seeds"] = {ParamType::Int, std::int64_t(400), false};
            s["substeps"] = {ParamType::Int, std::int64_t(4), false};
            s["export_stride"] = {ParamType::Int, std::int64_t(20), false};
            s["tv_bins"] = {ParamType::Int, std::int64_t(50), false};
            s["tv_tol"] = {ParamType::Real, 0.05, false};
            m["two_slit_streamlines"] = s;
        }
        {
            Schema s;
            s["slit_separation"] = {ParamType::Real, 4.0, false};
            s["slit_width"] = {ParamType::Real, 0.3, false};
            s["propagation_time"] = {ParamType::Real, 1.0, false};
            s["n_nodes"] = {ParamType::Int, std::int64_t(1024), false};
            s["half_width"] = {ParamType::Real, 16.0, false};
            s["n_probes"] = {ParamType::Int, std::int64_t(10), false};
            s["cross_nodes"] = {ParamType::Int, std::int64_t(3), false};
            s["probe_shots"] = {ParamType::Int, std::int64_t(1000000), false};
            s["map_shots"] = {ParamType::Int, std::int64_t(4000000), false};
            s["pointer_sigma"] = {ParamType::Real, 1.0, false};
            m["probe_vs_weak"] = s;
        }
        {
            Schema s;
            s["n_nodes"] = {ParamType::Int, std::int64_t(64), false};
            s["half_width"] = {ParamType::Real, 6.0, false};
            s["sigma"] = {ParamType::Real, 1.5, false};
            s["chirp"] = {ParamType::Real, 0.1, false};
            s["mode"] = {ParamType::String, cl("exact"), false};
            s["g"] = {ParamType::Real, 0.3, false};
            s["shots_per_node"] = {ParamType::Int, std::int64_t(100000), false};
            m["direct_state"] = s;
        }
        {
            Schema s;
            s["alpha"] = {ParamType::Complex, Complex(0.1, 0.05), false};
            s["beta"] = {ParamType::Complex, Complex(0.07, -0.04), false};
            s["omega"] = {ParamType::Real, 0.8, false};
            s["n_max"] = {ParamType::Int, std::int64_t(64), false};
            s["t_total"] = {ParamType::Real, 0.5, false};
            s["dt"] = {ParamType::Real, 1e-3, false};
            s["tol"] = {ParamType::Real, 1e-8, false};
            m["weak_trajectory"] = s;
        }
        {
            Schema s = qubit_pair("0.8,0.5-0.2j", "0.3-0.4j,0.7");
            s["hamiltonian"] = {ParamType::String, cl("sigma_x"), false};
            s["source"] = {ParamType::String, cl("sigma_z"), false};
            s["n_slices"] = {ParamType::Int, std::int64_t(4), false};
            s["dt"] = {ParamType::Real, 0.3, false};
            s["j_scale"] = {ParamType::Real, 0.1, false};
            m["legendre_check"] = s;
        }
        return m;
    }();
    return schemas;
}

Complex parse_complex(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError("empty complex value");
    const bool has_j = s.back() == 'j' || s.back() == 'J';
    if (!has_j) {
        try {
            std::size_t pos = 0;
            const double re = std::stod(s, &pos);
            if (pos != s.size()) throw ConfigError("bad number '" + s + "'");
            return Complex(re, 0.0);
        } catch (const std::invalid_argument&) {
            throw ConfigError("bad number '" + s + "'");
        }
    }
    const std::string body = s.substr(0, s.size() - 1);
    // split at the last +/- that is not an exponent sign and not leading
    std::size_t cut = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
        const char c = body[i];
        if ((c == '+' || c == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
            cut = i;
            break;
        }
    }
    try {
        if (cut == std::string::npos) {
            // pure imaginary: "j", "-j", "0.5j"
            if (body.empty() || body == "+") return Complex(0.0, 1.0);
            if (body == "-") return Complex(0.0, -1.0);
            std::size_t pos = 0;
            const double im = std::stod(body, &pos);
            if (pos != body.size())
                throw ConfigError("bad complex '" + s + "'");
            return Complex(0.0, im);
        }
        std::size_t pos = 0;
        const double re = std::stod(body.substr(0, cut), &pos);
        if (pos != cut) throw ConfigError("bad complex '" + s + "'");
        std::string imag_part = body.substr(cut);
        if (imag_part == "+") imag_part = "1";
        if (imag_part == "-") imag_part = "-1";
        const double im = std::stod(imag_part, &pos);
        if (pos != imag_part.size())
            throw ConfigError("bad complex '" + s + "'");
        return Complex(re, im);
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad complex '" + s + "'");
    }
}

std::string format_complex(Complex value) {
    std::string out = io::format_double(value.real());
    if (value.imag() != 0.0) {
        if (value.imag() >= 0.0) out += "+";
        out += io::format_double(value.imag()) + "j";
    }
    return out;
}

namespace {

ParamValue parse_value(ParamType type, const std::string& raw, int line) {
    const std::string s = trim(raw);
    try {
        switch (type) {
            case ParamType::Int: {
                std::size_t pos = 0;
                const std::int64_t v = std::stoll(s, &pos);
                if (pos != s.size()) fail(line, "expected integer, got '" + s + "'");
                return v;
            }
            case ParamType::Real: {
                std::size_t pos = 0;
                const double v = std::stod(s, &pos);
                if (pos != s.size()) fail(line, "expected number, got '" + s + "'");
                return v;
            }
            case ParamType::Bool: {
                if (s == "true" || s == "1") return true;
                if (s == "false" || s == "0") return false;
                fail(line, "expected bool, got '" + s + "'");
            }
            case ParamType::String:
                return s;
            case ParamType::Complex:
                return parse_complex(s);
            case ParamType::ComplexList: {
                std::vector<Complex> values;
                for (const std::string& tok : split(s, ','))
                    values.push_back(parse_complex(tok));
                return values;
            }
        }
    } catch (const ConfigError& e) {
        fail(line, e.what());
    } catch (const std::exception&) {
        fail(line, "bad value '" + s + "'");
    }
    fail(line, "unreachable");
}

ParamValue coerce_default(const ParamSpec& spec) {
    // ComplexList defaults are stored as their text form
    if (spec.type == ParamType::ComplexList &&
        std::holds_alternative<std::string>(spec.default_value)) {
        std::vector<Complex> values;
        for (const std::string& tok :
             split(std::get<std::string>(spec.default_value), ','))
            values.push_back(parse_complex(tok));
        return values;
    }
    return spec.default_value;
}

const ParamSpec& spec_for(const std::string& kind, const std::string& key) {
    const auto& schemas = scenario_schemas();
    const auto kit = schemas.find(kind);
    if (kit == schemas.end())
        throw ConfigError("unknown scenario kind '" + kind + "'");
    const auto pit = kit->second.find(key);
    if (pit == kit->second.end())
        throw ConfigError("unknown key '" + key + "' for scenario kind '" +
                          kind + "'");
    return pit->second;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig config;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    // first pass collects raw strings so params can be typed once the kind
    // is known (the [scenario] section may appear anywhere)
    struct RawEntry {
        std::string key, value;
        int line;
    };
    std::vector<RawEntry> raw_params;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "scenario" && section != "params")
                fail(line_no, "unknown section '" + section + "'");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        if (section == "scenario") {
            if (key == "kind") {
                config.kind = value;
                if (!scenario_schemas().count(value))
                    fail(line_no, "unknown scenario kind '" + value + "'");
            } else if (key == "seed") {
                config.seed = std::get<std::int64_t>(
                    parse_value(ParamType::Int, value, line_no));
            } else if (key == "out_dir") {
                config.out_dir = value;
            } else {
                fail(line_no, "unknown key '" + key + "' in [scenario]");
            }
        } else if (section == "params") {
            raw_params.push_back({key, value, line_no});
        } else {
            fail(line_no, "key outside any section");
        }
    }
    if (config.kind.empty())
        throw ConfigError("config error: missing [scenario] kind");
    for (const RawEntry& entry : raw_params) {
        const ParamSpec* spec = nullptr;
        try {
            spec = &spec_for(config.kind, entry.key);
        } catch (const ConfigError& e) {
            fail(entry.line, e.what());
        }
        if (config.params.count(entry.key))
            fail(entry.line, "duplicate key '" + entry.key + "'");
        config.params[entry.key] =
            parse_value(spec->type, entry.value, entry.line);
    }
    for (const auto& [key, spec] : scenario_schemas().at(config.kind))
        if (spec.required && !config.params.count(key))
            throw ConfigError("config error: missing required key '" + key +
                              "'");
    return config;
}

namespace {

std::string format_value(const ParamValue& value) {
    if (std::holds_alternative<std::int64_t>(value))
        return std::to_string(std::get<std::int64_t>(value));
    if (std::holds_alternative<double>(value))
        return io::format_double(std::get<double>(value));
    if (std::holds_alternative<bool>(value))
        return std::get<bool>(value) ? "true" : "false";
    if (std::holds_alternative<std::string>(value))
        return std::get<std::string>(value);
    if (std::holds_alternative<Complex>(value))
        return format_complex(std::get<Complex>(value));
    const auto& list = std::get<std::vector<Complex>>(value);
    std::string out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (i) out += ", ";
        out += format_complex(list[i]);
    }
    return out;
}

ParamValue resolved(const ScenarioConfig& config, const std::string& key) {
    const auto it = config.params.find(key);
    if (it != config.params.end()) return it->second;
    return coerce_default(spec_for(config.kind, key));
}

}  // namespace

std::string serialize_config(const ScenarioConfig& config) {
    std::ostringstream out;
    out << "[scenario]\n";
    out << "kind = " << config.kind << "\n";
    out << "seed = " << config.seed << "\n";
    if (!config.out_dir.empty()) out << "out_dir = " << config.out_dir << "\n";
    out << "\n[params]\n";
    for (const auto& [key, value] : config.params)
        out << key << " = " << format_value(value) << "\n";
    return out.str();
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
    return a.kind == b.kind && a.seed == b.seed && a.params == b.params;
}

std::int64_t ScenarioConfig::get_int(const std::string& key) const {
    return std::get<std::int64_t>(resolved(*this, key));
}
double ScenarioConfig::get_real(const std::string& key) const {
    const ParamValue v = resolved(*this, key);
    if (std::holds_alternative<std::int64_t>(v))
        return double(std::get<std::int64_t>(v));
    return std::get<double>(v);
}
bool ScenarioConfig::get_bool(const std::string& key) const {
    return std::get<bool>(resolved(*this, key));
}
std::string ScenarioConfig::get_string(const std::string& key) const {
    return std::get<std::string>(resolved(*this, key));
}
wvf::Complex ScenarioConfig::get_complex(const std::string& key) const {
    return std::get<Complex>(resolved(*this, key));
}
std::vector<wvf::Complex> ScenarioConfig::get_complex_list(
    const std::string& key) const {
    return std::get<std::vector<Complex>>(resolved(*this, key));
}

}  // namespace wvf::scenario
