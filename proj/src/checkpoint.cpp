#include "thermorom/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "thermorom/errors.hpp"

namespace thermorom {

namespace {

constexpr std::array<char, 8> kMagic{'T', 'R', 'M', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    unsigned char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* section) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
        throw ParseError(std::string("checkpoint truncated in section '") + section + "'");
    }
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

std::uint32_t activation_code(Activation a) {
    switch (a) {
        case Activation::tanh: return 0;
        case Activation::relu: return 1;
        case Activation::linear: return 2;
    }
    return 2;
}

Activation activation_from_code(std::uint32_t c) {
    switch (c) {
        case 0: return Activation::tanh;
        case 1: return Activation::relu;
        case 2: return Activation::linear;
        default: throw ParseError("checkpoint: unknown activation code " + std::to_string(c));
    }
}

}  // namespace

void write_f64_le(std::ostream& out, std::span<const double> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 8));
    } else {
        for (double v : values) put_le(out, std::bit_cast<std::uint64_t>(v));
    }
}

void read_f64_le(std::istream& in, std::span<double> values) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * 8));
        if (in.gcount() != static_cast<std::streamsize>(values.size() * 8)) {
            throw ParseError("payload truncated: expected " + std::to_string(values.size() * 8) + " bytes, got " +
                             std::to_string(in.gcount()));
        }
    } else {
        for (double& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(in, "payload"));
    }
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointRecord& rec) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
        out.write(kMagic.data(), kMagic.size());
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.header.kind));
        put_le<std::uint32_t>(out, activation_code(rec.header.activation));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.header.shape.size()));
        for (int s : rec.header.shape) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s));
        put_le<std::uint64_t>(out, rec.header.seed);
        put_le<std::uint64_t>(out, rec.header.step);
        put_le<std::uint64_t>(out, rec.header.epoch);
        put_le<std::uint64_t>(out, rec.values.size());
        write_f64_le(out, rec.values);
        if (!out) throw std::runtime_error("write failed: " + path.string());
    }
    nlohmann::json side;
    side["format"] = "thermorom-checkpoint";
    side["version"] = 1;
    side["kind"] = rec.header.kind == CheckpointKind::dense ? "dense" : "tensor";
    side["activation"] = to_string(rec.header.activation);
    side["shape"] = rec.header.shape;
    side["seed"] = rec.header.seed;
    side["step"] = rec.header.step;
    side["epoch"] = rec.header.epoch;
    side["count"] = rec.values.size();
    side["endianness"] = "little";
    std::ofstream js(path.string() + ".json");
    js << side.dump(2) << "\n";
}

CheckpointRecord read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 8 || magic != kMagic) throw ParseError("checkpoint " + path.string() + ": bad magic");
    CheckpointRecord rec;
    const auto kind = get_le<std::uint32_t>(in, "header");
    if (kind > 1) throw ParseError("checkpoint: unknown kind " + std::to_string(kind));
    rec.header.kind = static_cast<CheckpointKind>(kind);
    rec.header.activation = activation_from_code(get_le<std::uint32_t>(in, "header"));
    const auto rank = get_le<std::uint32_t>(in, "header");
    if (rank > 1024) throw ParseError("checkpoint: implausible rank");
    rec.header.shape.resize(rank);
    for (auto& s : rec.header.shape) s = static_cast<int>(get_le<std::uint32_t>(in, "shape"));
    rec.header.seed = get_le<std::uint64_t>(in, "header");
    rec.header.step = get_le<std::uint64_t>(in, "header");
    rec.header.epoch = get_le<std::uint64_t>(in, "header");
    const auto count = get_le<std::uint64_t>(in, "header");
    if (count > (1ull << 32)) throw ParseError("checkpoint: implausible parameter count");
    rec.values.resize(count);
    try {
        read_f64_le(in, rec.values);
    } catch (const ParseError& e) {
        throw ParseError("checkpoint " + path.string() + " section 'params': " + e.what());
    }
    return rec;
}

void save_net(const std::filesystem::path& path, const DenseNet& net, std::uint64_t seed, std::uint64_t step,
              std::uint64_t epoch) {
    CheckpointRecord rec;
    rec.header.kind = CheckpointKind::dense;
    rec.header.activation = net.activation();
    rec.header.shape = net.layer_sizes();
    rec.header.seed = seed;
    rec.header.step = step;
    rec.header.epoch = epoch;
    rec.values.assign(net.params().begin(), net.params().end());
    write_checkpoint(path, rec);
}

DenseNet load_net(const std::filesystem::path& path, CheckpointHeader* header) {
    CheckpointRecord rec = read_checkpoint(path);
    if (rec.header.kind != CheckpointKind::dense) throw ParseError(path.string() + " is not a dense-network checkpoint");
    DenseNet net(rec.header.shape, rec.header.activation);
    if (rec.values.size() != net.num_params()) {
        throw ParseError(path.string() + ": parameter count does not match layer sizes");
    }
    net.set_params(rec.values);
    if (header) *header = rec.header;
    return net;
}

}  // namespace thermorom
