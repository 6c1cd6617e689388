#include "thermorom/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "thermorom/errors.hpp"

namespace thermorom {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TOML subset reader

namespace {

class TomlReader {
public:
    TomlReader(const std::string& text, std::string source) : s_(text), source_(std::move(source)) {}

    json document() {
        json root = json::object();
        json* table = &root;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                ++pos_;
                if (peek() == '[') fail("arrays of tables are not supported");
                skip_ws();
                const auto path = key_path();
                skip_ws();
                expect(']');
                end_of_line();
                table = &root;
                for (const auto& k : path) {
                    json& next = (*table)[k];
                    if (next.is_null()) next = json::object();
                    if (!next.is_object()) fail("'" + k + "' is not a table");
                    table = &next;
                }
                if (!defined_tables_.insert(join(path)).second) fail("table [" + join(path) + "] defined twice");
                continue;
            }
            const auto path = key_path();
            skip_ws();
            expect('=');
            skip_ws();
            json v = value();
            end_of_line();
            json* t = table;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                json& next = (*t)[path[i]];
                if (next.is_null()) next = json::object();
                if (!next.is_object()) fail("'" + path[i] + "' is not a table");
                t = &next;
            }
            if (t->contains(path.back())) fail("duplicate key '" + path.back() + "'");
            (*t)[path.back()] = std::move(v);
        }
        return root;
    }

    /// A single value spanning the whole input.
    json lone_value() {
        skip_ws();
        json v = value();
        skip_ws();
        if (!eof()) fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(source_ + ":" + std::to_string(line_) + ": " + what);
    }
    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    char get() {
        if (eof()) fail("unexpected end of input");
        const char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        get();
    }
    void skip_ws() {
        while (peek() == ' ' || peek() == '\t') ++pos_;
    }
    void skip_comment() {
        if (peek() == '#')
            while (!eof() && peek() != '\n') ++pos_;
    }
    void skip_blank_lines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\r') ++pos_;
            if (peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }
    // whitespace, comments and newlines inside arrays
    void skip_array_space() {
        while (!eof()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r') ++pos_;
            else if (c == '\n') get();
            else if (c == '#') skip_comment();
            else break;
        }
    }
    void end_of_line() {
        skip_ws();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (eof()) return;
        if (peek() != '\n') fail("expected end of line");
        get();
    }

    static bool bare_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

    std::vector<std::string> key_path() {
        std::vector<std::string> path;
        while (true) {
            skip_ws();
            if (peek() == '"') {
                path.push_back(basic_string());
            } else if (peek() == '\'') {
                path.push_back(literal_string());
            } else {
                const auto start = pos_;
                while (bare_char(peek())) ++pos_;
                if (pos_ == start) fail("expected a key");
                path.push_back(s_.substr(start, pos_ - start));
            }
            skip_ws();
            if (peek() != '.') break;
            ++pos_;
        }
        return path;
    }

    std::string basic_string() {
        expect('"');
        std::string out;
        while (true) {
            const char c = get();
            if (c == '"') break;
            if (c == '\n') fail("newline in string");
            if (c != '\\') {
                out += c;
                continue;
            }
            switch (get()) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                default: fail("unsupported escape sequence");
            }
        }
        return out;
    }

    std::string literal_string() {
        expect('\'');
        std::string out;
        while (true) {
            const char c = get();
            if (c == '\'') break;
            if (c == '\n') fail("newline in string");
            out += c;
        }
        return out;
    }

    json value() {
        const char c = peek();
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (c == '{') fail("inline tables are not supported");
        const auto start = pos_;
        while (!eof() && (bare_char(peek()) || peek() == '.' || peek() == '+')) ++pos_;
        std::string tok = s_.substr(start, pos_ - start);
        if (tok.empty()) fail("expected a value");
        if (tok == "true") return true;
        if (tok == "false") return false;
        return number(tok);
    }

    json number(std::string tok) {
        std::string clean;
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (tok[i] != '_') {
                clean += tok[i];
                continue;
            }
            if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
                !std::isdigit(static_cast<unsigned char>(tok[i + 1])))
                fail("misplaced '_' in number '" + tok + "'");
        }
        const std::string body = (clean[0] == '+' || clean[0] == '-') ? clean.substr(1) : clean;
        if (body == "inf" || body == "nan") fail("inf and nan are not accepted");
        const bool is_float = clean.find_first_of(".eE") != std::string::npos;
        std::size_t used = 0;
        try {
            if (is_float) {
                if (body.front() == '.' || body.back() == '.') fail("malformed number '" + tok + "'");
                const double v = std::stod(clean, &used);
                if (used == clean.size()) return v;
            } else {
                const long long v = std::stoll(clean, &used, 10);
                if (used == clean.size()) return v;
            }
        } catch (const std::logic_error&) {
        }
        fail("malformed value '" + tok + "'");
    }

    json array() {
        expect('[');
        json arr = json::array();
        while (true) {
            skip_array_space();
            if (peek() == ']') {
                get();
                return arr;
            }
            arr.push_back(value());
            skip_array_space();
            if (peek() == ',') {
                get();
                continue;
            }
            if (peek() != ']') fail("expected ',' or ']' in array");
        }
    }

    static std::string join(const std::vector<std::string>& p) {
        std::string out;
        for (std::size_t i = 0; i < p.size(); ++i) out += (i ? "." : "") + p[i];
        return out;
    }

    const std::string& s_;
    std::string source_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::set<std::string> defined_tables_;
};

std::string toml_key(const std::string& k) {
    bool bare = !k.empty();
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) bare = false;
    return bare ? k : json(k).dump();
}

std::string toml_scalar(const json& v) {
    if (v.is_string()) return v.dump();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
        std::ostringstream s;
        s << std::setprecision(17) << v.get<double>();
        std::string out = s.str();
        if (out.find_first_of(".eE") == std::string::npos) out += ".0";
        return out;
    }
    if (v.is_array()) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + toml_scalar(v[i]);
        return out + "]";
    }
    throw ParseError("value cannot be written as TOML: " + v.dump());
}

void write_table(std::ostream& out, const json& table, const std::string& prefix) {
    for (const auto& [k, v] : table.items())
        if (!v.is_object()) out << toml_key(k) << " = " << toml_scalar(v) << '\n';
    for (const auto& [k, v] : table.items()) {
        if (!v.is_object()) continue;
        const std::string name = prefix.empty() ? toml_key(k) : prefix + "." + toml_key(k);
        out << "\n[" << name << "]\n";
        write_table(out, v, name);
    }
}

}  // namespace

json parse_toml(const std::string& text, const std::string& source) { return TomlReader(text, source).document(); }

json load_toml(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_toml(ss.str(), path.string());
}

std::string to_toml(const json& root) {
    std::ostringstream out;
    write_table(out, root, "");
    return out.str();
}

void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must have the form key.path=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json v;
    try {
        v = TomlReader(text, "--set " + key).lone_value();
    } catch (const ParseError&) {
        v = text;
    }
    json* t = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(key, "empty key component");
        if (dot == std::string::npos) {
            (*t)[part] = v;
            return;
        }
        json& next = (*t)[part];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) throw ConfigError(key.substr(0, dot), "is not a table");
        t = &next;
        start = dot + 1;
    }
}

// ---------------------------------------------------------------------------
// schema

json default_config(SystemKind kind) {
    const SystemConfig sys = default_system(kind);
    const BurgersConfig& b = sys.burgers;
    json c;
    c["seed"] = 0;
    c["jobs"] = 1;
    c["system"] = {{"kind", to_string(kind)},
                   {"params", sys.param_names},
                   {"horizon", sys.horizon},
                   {"fine_dt", sys.fine_dt},
                   {"stride", sys.stride},
                   {"initial_state", json::array()},
                   {"gas", {{"alpha", sys.gas.alpha}, {"mass", sys.gas.mass}}},
                   {"thermo", {{"alpha", sys.thermo.alpha}, {"k", sys.thermo.k}, {"beta", sys.thermo.beta}}},
                   {"burgers",
                    {{"nx", b.nx},
                     {"x_min", b.x_min},
                     {"x_max", b.x_max},
                     {"dt", b.dt},
                     {"final_time", b.final_time},
                     {"spatial_stride", b.spatial_stride},
                     {"temporal_stride", b.temporal_stride},
                     {"newton_tol", b.newton_tol},
                     {"newton_max_iter", b.newton_max_iter}}}};
    c["data"] = {{"train_mu", json::array()}, {"holdout", 16}};
    c["autoencoder"] = {{"kind", "dense"}, {"hidden", {100}}, {"latent_dim", 5}, {"activation", "relu"}};
    c["pgfinn"] = {{"depth", 5},
                   {"width", 40},
                   {"activation", "tanh"},
                   {"num_basis", 0},
                   {"known_energy", false},
                   {"known_entropy", false},
                   {"mu_offset", json::array()},
                   {"mu_scale", json::array()}};
    c["loss"] = {{"integration", 1.0},        {"lambda_rec", 1e-1},     {"lambda_jac", 1e-9},
                 {"lambda_mod", 1e-7},        {"jacobian", "with_derivatives"}, {"scheme", "euler"}};
    c["training"] = {{"epochs", 15000},
                     {"batch_size", 50},
                     {"phases", json::array()},
                     {"learning_rate", 1e-4},
                     {"lr_decay", 0.99},
                     {"lr_decay_period", 2000},
                     {"beta1", 0.9},
                     {"beta2", 0.999},
                     {"epsilon", 1e-8},
                     {"eval_every", 100},
                     {"checkpoint_every", 1000}};
    c["active"] = {{"update_every", 3000}, {"budget", 4},           {"pool_size", 16},
                   {"stride", 10},        {"target_indicator", 0.0}, {"max_redraws", 3}};
    c["eval"] = {{"timing_repeats", 5}, {"thermo_dt", 0.0}, {"thermo_steps", 0}};

    switch (kind) {
        case SystemKind::burgers:
            c["data"]["lower"] = {0.7, 0.9};
            c["data"]["upper"] = {0.9, 1.1};
            c["data"]["train_points"] = {3, 3};
            c["data"]["test_points"] = {21, 21};
            break;
        case SystemKind::gas_containers:
            c["data"]["lower"] = {1.0};
            c["data"]["upper"] = {50.0};
            c["data"]["train_points"] = {7};
            c["data"]["test_points"] = {21};
            c["autoencoder"]["kind"] = "identity";
            c["pgfinn"]["known_energy"] = true;
            c["pgfinn"]["known_entropy"] = true;
            c["loss"]["lambda_rec"] = 0.0;
            c["loss"]["lambda_jac"] = 0.0;
            c["loss"]["scheme"] = "rk4";
            c["training"]["epochs"] = 600;
            c["training"]["learning_rate"] = 1e-3;
            c["training"]["lr_decay"] = 0.7;
            c["training"]["lr_decay_period"] = 100;
            c["training"]["checkpoint_every"] = 100;
            c["active"]["update_every"] = 100;
            break;
        case SystemKind::thermo_mass:
            c["data"]["lower"] = {0.1};
            c["data"]["upper"] = {1.0};
            c["data"]["train_points"] = {7};
            c["data"]["test_points"] = {21};
            c["autoencoder"]["kind"] = "identity";
            c["pgfinn"]["known_energy"] = true;
            c["pgfinn"]["known_entropy"] = true;
            c["loss"]["lambda_rec"] = 0.0;
            c["loss"]["lambda_jac"] = 0.0;
            c["loss"]["scheme"] = "rk4";
            c["training"]["epochs"] = 600;
            c["training"]["learning_rate"] = 1e-3;
            c["training"]["lr_decay"] = 0.7;
            c["training"]["lr_decay_period"] = 100;
            c["training"]["checkpoint_every"] = 100;
            c["active"]["update_every"] = 100;
            break;
    }
    return c;
}

namespace {

void merge_into(json& base, const json& over, const std::string& path) {
    for (const auto& [k, v] : over.items()) {
        const std::string p = path.empty() ? k : path + "." + k;
        if (!base.contains(k)) throw ConfigError(p, "unknown key");
        json& slot = base[k];
        if (slot.is_object()) {
            if (!v.is_object()) throw ConfigError(p, "expected a table");
            merge_into(slot, v, p);
        } else {
            if (v.is_object()) throw ConfigError(p, "expected a value, found a table");
            slot = v;
        }
    }
}

// Typed access with the dotted path in every error.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}
    Node operator[](const std::string& k) const {
        const std::string p = path_.empty() ? k : path_ + "." + k;
        if (!j_.is_object() || !j_.contains(k)) throw ConfigError(p, "missing");
        return Node(j_.at(k), p);
    }
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_, what); }
    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }

    double num() const {
        if (!j_.is_number()) fail("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail("must be finite");
        return v;
    }
    double non_negative() const {
        const double v = num();
        if (v < 0.0) fail("must be non-negative");
        return v;
    }
    double positive() const {
        const double v = num();
        if (v <= 0.0) fail("must be positive");
        return v;
    }
    long long integer() const {
        if (j_.is_number_integer()) return j_.get<long long>();
        if (j_.is_number_float()) {
            const double v = j_.get<double>();
            if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9e15) return static_cast<long long>(v);
        }
        fail("expected an integer");
    }
    int int_at_least(int lo) const {
        const long long v = integer();
        if (v < lo || v > 1'000'000'000) fail("must be an integer >= " + std::to_string(lo));
        return static_cast<int>(v);
    }
    bool boolean() const {
        if (!j_.is_boolean()) fail("expected true or false");
        return j_.get<bool>();
    }
    std::string str() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }
    std::vector<Node> items() const {
        if (!j_.is_array()) fail("expected an array");
        std::vector<Node> out;
        for (std::size_t i = 0; i < j_.size(); ++i) out.emplace_back(j_[i], path_ + "[" + std::to_string(i) + "]");
        return out;
    }
    Vector vec() const {
        const auto it = items();
        Vector v(static_cast<Eigen::Index>(it.size()));
        for (std::size_t i = 0; i < it.size(); ++i) v[static_cast<Eigen::Index>(i)] = it[i].num();
        return v;
    }
    std::vector<int> ints(int lo) const {
        std::vector<int> v;
        for (const auto& n : items()) v.push_back(n.int_at_least(lo));
        return v;
    }
    template <class F>
    auto parsed(F&& f) const {
        try {
            return f(str());
        } catch (const ParseError& e) {
            fail(e.what());
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }

private:
    const json& j_;
    std::string path_;
};

}  // namespace

json merged_config(const json& config) {
    if (!config.is_object()) throw ConfigError("<root>", "expected a table");
    SystemKind kind = SystemKind::burgers;
    if (config.contains("system") && config["system"].is_object() && config["system"].contains("kind")) {
        kind = Node(config["system"]["kind"], "system.kind").parsed(system_from_tag);
    }
    json merged = default_config(kind);
    merge_into(merged, config, "");
    return merged;
}

RunConfig run_config_from_json(const json& config) {
    const json merged = merged_config(config);
    const Node root(merged, "");
    RunConfig rc;
    rc.seed = static_cast<std::uint64_t>(root["seed"].int_at_least(0));
    rc.jobs = root["jobs"].int_at_least(1);

    // system
    const Node sys = root["system"];
    SystemConfig& s = rc.system;
    s = default_system(sys["kind"].parsed(system_from_tag));
    s.param_names.clear();
    for (const auto& n : sys["params"].items()) s.param_names.push_back(n.str());
    if (s.param_names.empty()) sys["params"].fail("at least one parameter is required");
    s.horizon = sys["horizon"].positive();
    s.fine_dt = sys["fine_dt"].positive();
    s.stride = sys["stride"].int_at_least(1);
    s.initial_state = sys["initial_state"].vec();
    s.gas.alpha = sys["gas"]["alpha"].non_negative();
    s.gas.mass = sys["gas"]["mass"].positive();
    s.thermo.alpha = sys["thermo"]["alpha"].non_negative();
    s.thermo.k = sys["thermo"]["k"].positive();
    s.thermo.beta = sys["thermo"]["beta"].non_negative();
    const Node bn = sys["burgers"];
    BurgersConfig& b = s.burgers;
    b.nx = bn["nx"].int_at_least(2);
    b.x_min = bn["x_min"].num();
    b.x_max = bn["x_max"].num();
    if (b.x_max <= b.x_min) bn["x_max"].fail("must exceed x_min");
    b.dt = bn["dt"].positive();
    b.final_time = bn["final_time"].positive();
    b.spatial_stride = bn["spatial_stride"].int_at_least(1);
    b.temporal_stride = bn["temporal_stride"].int_at_least(1);
    if (b.nx % b.spatial_stride != 0) bn["spatial_stride"].fail("must divide nx");
    b.newton_tol = bn["newton_tol"].positive();
    b.newton_max_iter = bn["newton_max_iter"].int_at_least(1);
    if (s.kind != SystemKind::burgers && s.num_snapshots() < 2) sys["horizon"].fail("yields fewer than two snapshots");
    if (s.kind == SystemKind::burgers && s.num_snapshots() < 2) bn["final_time"].fail("yields fewer than two snapshots");
    if (s.initial_state.size() != 0 && s.initial_state.size() != s.state_dim())
        sys["initial_state"].fail("expected " + std::to_string(s.state_dim()) + " entries");
    // parameter names must be known to the system
    try {
        const Vector probe = Vector::Zero(s.param_dim());
        switch (s.kind) {
            case SystemKind::gas_containers: gas_params(s, probe); break;
            case SystemKind::thermo_mass: thermo_params(s, probe); break;
            case SystemKind::burgers: burgers_pulse(s, probe); break;
        }
    } catch (const std::invalid_argument& e) {
        sys["params"].fail(e.what());
    }
    const int p = s.param_dim();

    // data
    const Node data = root["data"];
    DataConfig& d = rc.data;
    d.lower = data["lower"].vec();
    d.upper = data["upper"].vec();
    if (d.lower.size() != p) data["lower"].fail("expected " + std::to_string(p) + " entries");
    if (d.upper.size() != p) data["upper"].fail("expected " + std::to_string(p) + " entries");
    if (((d.upper - d.lower).array() <= 0.0).any()) data["upper"].fail("must exceed lower componentwise");
    d.train_points = data["train_points"].ints(1);
    d.test_points = data["test_points"].ints(1);
    if (static_cast<int>(d.train_points.size()) != p) data["train_points"].fail("expected one count per parameter");
    if (static_cast<int>(d.test_points.size()) != p) data["test_points"].fail("expected one count per parameter");
    for (const auto& n : data["train_mu"].items()) {
        Vector mu = n.vec();
        if (mu.size() != p) n.fail("expected " + std::to_string(p) + " entries");
        d.train_mu.push_back(std::move(mu));
    }
    d.holdout = data["holdout"].int_at_least(0);

    // autoencoder
    const Node ae = root["autoencoder"];
    const std::string ae_kind = ae["kind"].str();
    if (ae_kind != "dense" && ae_kind != "identity") ae["kind"].fail("expected 'dense' or 'identity'");
    rc.autoencoder.identity = ae_kind == "identity";
    rc.autoencoder.hidden = ae["hidden"].ints(1);
    rc.autoencoder.latent_dim = ae["latent_dim"].int_at_least(1);
    rc.autoencoder.activation = ae["activation"].parsed(activation_from_string);
    if (rc.autoencoder.identity) rc.autoencoder.latent_dim = s.state_dim();
    else if (rc.autoencoder.latent_dim > s.state_dim()) ae["latent_dim"].fail("exceeds the state dimension");

    // pgfinn
    const Node pg = root["pgfinn"];
    PGFinnShape& sh = rc.model.shape;
    sh.latent_dim = rc.autoencoder.latent_dim;
    sh.param_dim = p;
    sh.depth = pg["depth"].int_at_least(1);
    sh.width = pg["width"].int_at_least(1);
    sh.activation = pg["activation"].parsed(activation_from_string);
    sh.num_basis = pg["num_basis"].int_at_least(0);
    rc.model.known_energy = pg["known_energy"].boolean();
    rc.model.known_entropy = pg["known_entropy"].boolean();
    if ((rc.model.known_energy || rc.model.known_entropy) && !rc.autoencoder.identity)
        pg["known_energy"].fail("known energy/entropy require the identity autoencoder");
    if ((rc.model.known_energy || rc.model.known_entropy) && s.kind == SystemKind::burgers)
        pg["known_energy"].fail("no closed-form energy/entropy for burgers");
    const Vector off = pg["mu_offset"].vec(), scl = pg["mu_scale"].vec();
    if (off.size() != 0 && off.size() != p) pg["mu_offset"].fail("expected 0 or " + std::to_string(p) + " entries");
    if (scl.size() != 0 && scl.size() != p) pg["mu_scale"].fail("expected 0 or " + std::to_string(p) + " entries");
    if ((scl.array() <= 0.0).any()) pg["mu_scale"].fail("entries must be positive");
    rc.model.mu_offset = off;
    rc.model.mu_scale = scl;

    // loss
    const Node loss = root["loss"];
    rc.loss.integration = loss["integration"].non_negative();
    rc.loss.rec = loss["lambda_rec"].non_negative();
    rc.loss.jac = loss["lambda_jac"].non_negative();
    rc.loss.mod = loss["lambda_mod"].non_negative();
    rc.loss.jac_mode = loss["jacobian"].parsed(jac_mode_from_string);
    rc.loss.scheme = loss["scheme"].parsed(scheme_from_string);

    // training
    const Node tr = root["training"];
    TrainSchedule& ts = rc.training;
    ts.phases.clear();
    const auto phases = tr["phases"].items();
    if (phases.empty()) {
        ts.phases.push_back({tr["epochs"].int_at_least(0), tr["batch_size"].int_at_least(1)});
    } else {
        for (const auto& ph : phases) {
            const auto pair = ph.items();
            if (pair.size() != 2) ph.fail("expected [epochs, batch_size]");
            ts.phases.push_back({pair[0].int_at_least(0), pair[1].int_at_least(1)});
        }
    }
    ts.adam.learning_rate = tr["learning_rate"].positive();
    ts.adam.decay_factor = tr["lr_decay"].positive();
    ts.adam.decay_period = tr["lr_decay_period"].int_at_least(1);
    ts.adam.beta1 = tr["beta1"].non_negative();
    ts.adam.beta2 = tr["beta2"].non_negative();
    if (ts.adam.beta1 >= 1.0) tr["beta1"].fail("must be below 1");
    if (ts.adam.beta2 >= 1.0) tr["beta2"].fail("must be below 1");
    ts.adam.epsilon = tr["epsilon"].positive();
    ts.eval_every = tr["eval_every"].int_at_least(1);
    ts.checkpoint_every = tr["checkpoint_every"].int_at_least(1);
    ts.seed = rc.seed;
    ts.jobs = rc.jobs;

    // active
    const Node ac = root["active"];
    ActiveConfig& a = rc.active;
    a.lower = d.lower;
    a.upper = d.upper;
    a.update_every = ac["update_every"].int_at_least(1);
    a.budget = ac["budget"].int_at_least(0);
    a.pool_size = ac["pool_size"].int_at_least(1);
    a.stride = ac["stride"].int_at_least(1);
    a.target_indicator = ac["target_indicator"].non_negative();
    a.max_redraws = ac["max_redraws"].int_at_least(0);
    a.seed = rc.seed;

    // eval
    const Node ev = root["eval"];
    rc.eval.timing_repeats = ev["timing_repeats"].int_at_least(1);
    rc.eval.thermo_dt = ev["thermo_dt"].non_negative();
    rc.eval.thermo_steps = ev["thermo_steps"].int_at_least(0);

    rc.loss.validate();
    rc.training.validate();
    rc.active.validate();
    return rc;
}

// ---------------------------------------------------------------------------

std::vector<Vector> uniform_grid(const Vector& lower, const Vector& upper, const std::vector<int>& counts) {
    if (lower.size() != upper.size() || static_cast<std::size_t>(lower.size()) != counts.size() || counts.empty())
        throw DimensionError("uniform_grid: inconsistent sizes");
    std::vector<Vector> out;
    std::vector<int> idx(counts.size(), 0);
    for (int c : counts)
        if (c < 1) throw DimensionError("uniform_grid: counts must be positive");
    while (true) {
        Vector mu(lower.size());
        for (Eigen::Index k = 0; k < mu.size(); ++k) {
            const int n = counts[static_cast<std::size_t>(k)];
            mu[k] = n == 1 ? 0.5 * (lower[k] + upper[k])
                           : lower[k] + (upper[k] - lower[k]) * idx[static_cast<std::size_t>(k)] / (n - 1);
        }
        out.push_back(mu);
        int k = static_cast<int>(counts.size()) - 1;
        while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == counts[static_cast<std::size_t>(k)]) {
            idx[static_cast<std::size_t>(k)] = 0;
            --k;
        }
        if (k < 0) return out;
    }
}

std::vector<Vector> RunConfig::training_grid() const {
    return data.train_mu.empty() ? uniform_grid(data.lower, data.upper, data.train_points) : data.train_mu;
}

std::vector<Vector> RunConfig::test_grid() const { return uniform_grid(data.lower, data.upper, data.test_points); }

std::vector<Vector> RunConfig::holdout_points(int count) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x401du};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vector> out;
    for (int i = 0; i < count; ++i) {
        Vector mu(data.lower.size());
        for (Eigen::Index k = 0; k < mu.size(); ++k) mu[k] = data.lower[k] + (data.upper[k] - data.lower[k]) * unit(rng);
        out.push_back(mu);
    }
    return out;
}

AutoEncoder make_autoencoder(const RunConfig& cfg, std::mt19937_64& rng) {
    const int n = cfg.system.state_dim();
    if (cfg.autoencoder.identity) return AutoEncoder::identity(n);
    return AutoEncoder::symmetric(n, cfg.autoencoder.hidden, cfg.autoencoder.latent_dim, cfg.autoencoder.activation,
                                  rng);
}

PGFinn make_model(const RunConfig& cfg, std::mt19937_64& rng) {
    std::optional<KnownScalar> e, s;
    if (cfg.model.known_energy) e = known_energy(cfg.system);
    if (cfg.model.known_entropy) s = known_entropy(cfg.system);
    PGFinn m(cfg.model.shape, rng, e, s);
    const Vector off = cfg.model.mu_offset.size() ? cfg.model.mu_offset : Vector(0.5 * (cfg.data.lower + cfg.data.upper));
    const Vector scl = cfg.model.mu_scale.size() ? cfg.model.mu_scale : Vector(0.5 * (cfg.data.upper - cfg.data.lower));
    m.set_param_normalization(off, scl);
    return m;
}

}  // namespace thermorom
