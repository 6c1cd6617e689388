#include "thermorom/snapshots.hpp"

#include <fstream>

#include <json.hpp>

#include "thermorom/checkpoint.hpp"
#include "thermorom/errors.hpp"

namespace thermorom {

namespace fs = std::filesystem;

namespace {

void write_payload(const fs::path& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    // column-major N_u x N_t is row-major N_t x N_u
    write_f64_le(out, std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

Matrix read_payload(const fs::path& path, Eigen::Index rows, Eigen::Index cols, const std::string& section) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(section + ": payload file " + path.string() + " is missing");
    Matrix m(rows, cols);
    try {
        read_f64_le(in, std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
    } catch (const ParseError& e) {
        throw ParseError(section + ": " + e.what());
    }
    in.peek();
    if (!in.eof()) throw ParseError(section + ": payload is longer than the declared shape");
    return m;
}

}  // namespace

void save_snapshots(const fs::path& header, const TrajectoryDataset& data) {
    data.validate();
    if (header.has_parent_path()) fs::create_directories(header.parent_path());
    const std::string stem = header.stem().string();
    nlohmann::json j;
    j["format"] = "thermorom-snapshots";
    j["version"] = 1;
    j["system"] = data.system;
    j["param_names"] = data.param_names;
    j["dt"] = data.dt;
    j["t0"] = data.t0;
    j["provenance"] = data.provenance;
    j["endianness"] = "little";
    j["layout"] = "row-major time x state";
    j["entries"] = nlohmann::json::array();
    for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
        const auto& t = data.trajectories[i];
        nlohmann::json e;
        e["mu"] = std::vector<double>(t.mu.data(), t.mu.data() + t.mu.size());
        e["shape"] = {t.states.cols(), t.states.rows()};
        const std::string base = stem + "." + std::to_string(i);
        e["states"] = base + ".u.f64";
        write_payload(header.parent_path() / (base + ".u.f64"), t.states);
        if (t.derivatives.size() != 0) {
            e["derivatives"] = base + ".udot.f64";
            write_payload(header.parent_path() / (base + ".udot.f64"), t.derivatives);
        } else {
            e["derivatives"] = nullptr;
        }
        j["entries"].push_back(e);
    }
    std::ofstream out(header);
    if (!out) throw ParseError("cannot write " + header.string());
    out << j.dump(2) << '\n';
}

TrajectoryDataset load_snapshots(const fs::path& header) {
    std::ifstream in(header);
    if (!in) throw ParseError("snapshot header " + header.string() + " cannot be opened");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("snapshot header: malformed JSON (" + std::string(e.what()) + ")");
    }
    auto field = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw ParseError(std::string("snapshot header: missing section '") + key + "'");
        return j.at(key);
    };
    TrajectoryDataset data;
    try {
        if (field("format") != "thermorom-snapshots") throw ParseError("snapshot header: unknown format");
        if (j.value("endianness", "little") != "little") throw ParseError("snapshot header: only little-endian payloads are supported");
        data.system = field("system").get<std::string>();
        data.param_names = field("param_names").get<std::vector<std::string>>();
        data.dt = field("dt").get<double>();
        data.t0 = j.value("t0", 0.0);
        data.provenance = j.value("provenance", std::string("file:") + header.filename().string());
        const auto& entries = field("entries");
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            const std::string where = "entry " + std::to_string(i);
            if (!e.contains("shape") || !e.contains("states") || !e.contains("mu")) {
                throw ParseError("snapshot header: " + where + " lacks shape, states or mu");
            }
            const auto shape = e.at("shape").get<std::vector<long>>();
            if (shape.size() != 2 || shape[0] < 2 || shape[1] < 1) throw ParseError(where + ": invalid shape");
            Trajectory t;
            const auto mu = e.at("mu").get<std::vector<double>>();
            t.mu = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
            const fs::path dir = header.parent_path();
            t.states = read_payload(dir / e.at("states").get<std::string>(), shape[1], shape[0], where + " states");
            if (e.contains("derivatives") && !e.at("derivatives").is_null()) {
                t.derivatives =
                    read_payload(dir / e.at("derivatives").get<std::string>(), shape[1], shape[0], where + " derivatives");
            }
            data.trajectories.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("snapshot header: ") + e.what());
    }
    if (data.trajectories.empty()) throw ParseError("snapshot header: no entries");
    data.validate();
    for (auto& t : data.trajectories) {
        if (t.derivatives.size() == 0) t.derivatives = backward_difference(t.states, data.dt);
    }
    return data;
}

void export_csv(const fs::path& path, const TrajectoryDataset& data) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out.precision(17);
    out << "trajectory";
    for (const auto& n : data.param_names) out << ',' << n;
    out << ",t";
    for (int k = 0; k < data.state_dim(); ++k) out << ",u" << k;
    out << '\n';
    for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
        const auto& t = data.trajectories[i];
        for (Eigen::Index n = 0; n < t.states.cols(); ++n) {
            out << i;
            for (Eigen::Index p = 0; p < t.mu.size(); ++p) out << ',' << t.mu[p];
            out << ',' << data.t0 + static_cast<double>(n) * data.dt;
            for (Eigen::Index k = 0; k < t.states.rows(); ++k) out << ',' << t.states(k, n);
            out << '\n';
        }
    }
}

}  // namespace thermorom
