#include "fedspectra/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "fedspectra/errors.hpp"

namespace fedspectra {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

std::string format_table(const std::vector<std::vector<int>>& table) {
    std::string out;
    for (std::size_t r = 0; r < table.size(); ++r) {
        if (r) out += ';';
        for (std::size_t c = 0; c < table[r].size(); ++c) {
            if (c) out += ':';
            out += std::to_string(table[r][c]);
        }
    }
    return out;
}

std::vector<std::vector<int>> parse_table(const std::string& key, const std::string& v) {
    std::vector<std::vector<int>> table;
    std::stringstream rows(v);
    std::string row;
    while (std::getline(rows, row, ';')) {
        std::vector<int> counts;
        std::stringstream cells(trim(row));
        std::string cell;
        while (std::getline(cells, cell, ':')) counts.push_back(static_cast<int>(parse_int(key, trim(cell))));
        table.push_back(std::move(counts));
    }
    if (table.empty()) throw ConfigError(key + ": empty table");
    return table;
}

struct KeySpec {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

int to_int(const std::string& key, const std::string& v) {
    const long long x = parse_int(key, v);
    if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(key + ": out of range");
    return static_cast<int>(x);
}

std::size_t to_size(const std::string& key, const std::string& v) {
    const long long x = parse_int(key, v);
    if (x < 0) throw ConfigError(key + ": must be non-negative");
    return static_cast<std::size_t>(x);
}

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = {
        {"profile", [](RunConfig& c, const std::string& v) { c.profile = v; },
         [](const RunConfig& c) { return c.profile; }},
        {"seed",
         [](RunConfig& c, const std::string& v) { c.federation.seed = c.synth.seed = parse_u64("seed", v); },
         [](const RunConfig& c) { return std::to_string(c.federation.seed); }},
        {"num_clients",
         [](RunConfig& c, const std::string& v) {
             const int n = to_int("num_clients", v);
             if (n < 1) throw ConfigError("num_clients must be >= 1");
             c.federation.num_clients = n;
             c.synth.num_clients = static_cast<std::size_t>(n);
         },
         [](const RunConfig& c) { return std::to_string(c.federation.num_clients); }},
        {"comm_interval", [](RunConfig& c, const std::string& v) { c.federation.comm_interval = to_int("comm_interval", v); },
         [](const RunConfig& c) { return std::to_string(c.federation.comm_interval); }},
        {"total_epochs", [](RunConfig& c, const std::string& v) { c.federation.total_epochs = to_int("total_epochs", v); },
         [](const RunConfig& c) { return std::to_string(c.federation.total_epochs); }},
        {"aggregator", [](RunConfig& c, const std::string& v) { c.federation.aggregator = aggregator_from_string(v); },
         [](const RunConfig& c) { return std::string(to_string(c.federation.aggregator)); }},
        {"domain_mode", [](RunConfig& c, const std::string& v) { c.federation.domain_mode = domain_mode_from_string(v); },
         [](const RunConfig& c) { return std::string(to_string(c.federation.domain_mode)); }},
        {"s0", [](RunConfig& c, const std::string& v) { c.federation.s0 = parse_double("s0", v); },
         [](const RunConfig& c) { return format_double(c.federation.s0); }},
        {"s1", [](RunConfig& c, const std::string& v) { c.federation.s1 = parse_double("s1", v); },
         [](const RunConfig& c) { return format_double(c.federation.s1); }},
        {"lambda1", [](RunConfig& c, const std::string& v) { c.federation.lambda1 = parse_double("lambda1", v); },
         [](const RunConfig& c) { return format_double(c.federation.lambda1); }},
        {"lambda2", [](RunConfig& c, const std::string& v) { c.federation.lambda2 = parse_double("lambda2", v); },
         [](const RunConfig& c) { return format_double(c.federation.lambda2); }},
        {"cto_enabled", [](RunConfig& c, const std::string& v) { c.federation.cto_enabled = parse_bool("cto_enabled", v); },
         [](const RunConfig& c) { return format_bool(c.federation.cto_enabled); }},
        {"refine_trains_deputy",
         [](RunConfig& c, const std::string& v) {
             c.federation.refine_trains_deputy = parse_bool("refine_trains_deputy", v);
         },
         [](const RunConfig& c) { return format_bool(c.federation.refine_trains_deputy); }},
        {"batch_size", [](RunConfig& c, const std::string& v) { c.federation.batch_size = to_int("batch_size", v); },
         [](const RunConfig& c) { return std::to_string(c.federation.batch_size); }},
        {"lr", [](RunConfig& c, const std::string& v) { c.federation.lr.initial = parse_double("lr", v); },
         [](const RunConfig& c) { return format_double(c.federation.lr.initial); }},
        {"lr_halve_every",
         [](RunConfig& c, const std::string& v) { c.federation.lr.halve_every = to_int("lr_halve_every", v); },
         [](const RunConfig& c) { return std::to_string(c.federation.lr.halve_every); }},
        {"fedprox_mu", [](RunConfig& c, const std::string& v) { c.federation.fedprox_mu = parse_double("fedprox_mu", v); },
         [](const RunConfig& c) { return format_double(c.federation.fedprox_mu); }},
        {"fedbn_exclude_bn",
         [](RunConfig& c, const std::string& v) { c.federation.fedbn_exclude_bn = parse_bool("fedbn_exclude_bn", v); },
         [](const RunConfig& c) { return format_bool(c.federation.fedbn_exclude_bn); }},
        {"augment", [](RunConfig& c, const std::string& v) { c.federation.augment = parse_bool("augment", v); },
         [](const RunConfig& c) { return format_bool(c.federation.augment); }},
        {"arch", [](RunConfig& c, const std::string& v) { c.federation.arch = v; },
         [](const RunConfig& c) { return c.federation.arch; }},
        {"classes",
         [](RunConfig& c, const std::string& v) { c.federation.classes = c.synth.classes = to_size("classes", v); },
         [](const RunConfig& c) { return std::to_string(c.federation.classes); }},
        {"image_channels", [](RunConfig& c, const std::string& v) { c.synth.channels = to_size("image_channels", v); },
         [](const RunConfig& c) { return std::to_string(c.synth.channels); }},
        {"image_size",
         [](RunConfig& c, const std::string& v) { c.synth.height = c.synth.width = to_size("image_size", v); },
         [](const RunConfig& c) { return std::to_string(c.synth.height); }},
        {"label_table", [](RunConfig& c, const std::string& v) { c.synth.label_table = parse_table("label_table", v); },
         [](const RunConfig& c) { return format_table(c.synth.label_table); }},
        {"count_scale", [](RunConfig& c, const std::string& v) { c.synth.count_scale = parse_double("count_scale", v); },
         [](const RunConfig& c) { return format_double(c.synth.count_scale); }},
        {"noise", [](RunConfig& c, const std::string& v) { c.synth.noise = parse_double("noise", v); },
         [](const RunConfig& c) { return format_double(c.synth.noise); }},
        {"intra_class_jitter",
         [](RunConfig& c, const std::string& v) { c.synth.intra_class_jitter = parse_bool("intra_class_jitter", v); },
         [](const RunConfig& c) { return format_bool(c.synth.intra_class_jitter); }},
        {"style_shift", [](RunConfig& c, const std::string& v) { c.synth.style_shift = parse_double("style_shift", v); },
         [](const RunConfig& c) { return format_double(c.synth.style_shift); }},
        {"data_dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; },
         [](const RunConfig& c) { return c.data_dir; }},
        {"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
         [](const RunConfig& c) { return c.out_dir; }},
        {"checkpoints", [](RunConfig& c, const std::string& v) { c.checkpoints = checkpoint_policy_from_string(v); },
         [](const RunConfig& c) { return std::string(to_string(c.checkpoints)); }},
    };
    return table;
}

const KeySpec& lookup(const std::string& key) {
    const auto& table = key_table();
    auto it = std::find_if(table.begin(), table.end(), [&](const KeySpec& k) { return k.name == key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    return *it;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& spec : key_table()) k.push_back(spec.name);
        return k;
    }();
    return keys;
}

void RunConfig::validate() const {
    federation.validate();
    synth.validate();
    if (federation.classes != synth.classes) throw ConfigError("classes differ between federation and data");
    if (static_cast<std::size_t>(federation.num_clients) != synth.num_clients) {
        throw ConfigError("num_clients differs between federation and data");
    }
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

void RunConfig::set(const std::string& key, const std::string& value) { lookup(key).set(*this, value); }

std::string RunConfig::get(const std::string& key) const { return lookup(key).get(*this); }

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& spec : key_table()) out += spec.name + " = " + spec.get(*this) + "\n";
    return out;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            base.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    base.validate();
    return base;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what(), e.line());
    }
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    try {
        cfg.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
    } catch (const ConfigError& e) {
        throw ConfigError("override '" + assignment + "': " + e.what());
    }
}

}  // namespace fedspectra
