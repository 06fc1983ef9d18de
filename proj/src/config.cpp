#include "pqstrip/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>
#include <vector>

namespace pqstrip {

namespace {

using Slot = std::variant<double*, int*, bool*, std::string*>;

std::vector<std::pair<std::string, Slot>> slots(RunConfig& c) {
    OptimizerConfig& o = c.optimizer;
    return {
        {"input", &c.input},
        {"creases", &c.creases},
        {"output", &c.output},
        {"report", &c.report},
        {"theta1", &c.confidence.theta1},
        {"theta2", &c.confidence.theta2},
        {"omega_a", &o.omega_a},
        {"omega_s", &o.omega_s},
        {"halving_period", &o.halving_period},
        {"tolerance", &o.tolerance},
        {"max_iterations", &o.max_iterations},
        {"s_low", &o.s_low},
        {"s_high", &o.s_high},
        {"density_reg", &o.density_reg},
        {"qp_tolerance", &o.qp_tolerance},
        {"linear_tolerance", &o.linear_tolerance},
        {"weight_zero_tolerance", &o.weight_zero_tolerance},
        {"oscillation_window", &o.oscillation_window},
        {"sync_creases", &o.crease_curl},
        {"strips", &c.strips},
        {"auto_apex", &c.auto_apex},
        {"apex_threshold", &c.apex_threshold},
        {"detect_creases", &c.detect_creases},
        {"crease_threshold", &c.crease_threshold},
        {"planar_weight", &c.meshing.planar_weight},
        {"residual_warning", &c.residual_warning},
        {"hausdorff_samples", &c.hausdorff_samples},
    };
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError("config: bad value for " + key + ": '" + value + "'");
    return out;
}

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    for (auto& [name, slot] : slots(*this)) {
        if (name != key) continue;
        if (auto* d = std::get_if<double*>(&slot)) {
            **d = parse_number<double>(key, value);
        } else if (auto* i = std::get_if<int*>(&slot)) {
            **i = parse_number<int>(key, value);
        } else if (auto* b = std::get_if<bool*>(&slot)) {
            if (value == "true" || value == "1" || value == "on")
                **b = true;
            else if (value == "false" || value == "0" || value == "off")
                **b = false;
            else
                throw ConfigError("config: bad boolean for " + key + ": '" + value + "'");
        } else {
            std::string s = value;
            if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
            *std::get<std::string*>(slot) = s;
        }
        return;
    }
    throw ConfigError("config: unknown key '" + key + "'");
}

std::string RunConfig::serialize() const {
    std::ostringstream out;
    for (auto& [name, slot] : slots(const_cast<RunConfig&>(*this))) {
        out << name << " = ";
        if (auto* d = std::get_if<double*>(&slot))
            out << format_double(**d);
        else if (auto* i = std::get_if<int*>(&slot))
            out << **i;
        else if (auto* b = std::get_if<bool*>(&slot))
            out << (**b ? "true" : "false");
        else
            out << '"' << *std::get<std::string*>(slot) << '"';
        out << '\n';
    }
    return out.str();
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
        c.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace pqstrip
