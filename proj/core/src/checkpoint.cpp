#include "tacos/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "tacos/errors.hpp"

namespace tacos {

namespace {
constexpr char kMagic[4] = {'T', 'C', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
} // namespace

void save_checkpoint(const std::string& path, const Mlp& net) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("checkpoint", "cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    write_pod<std::uint32_t>(os, kVersion);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.widths().size()));
    for (int w : net.widths()) write_pod<std::int32_t>(os, w);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.activation()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(net.params().size()));
    os.write(reinterpret_cast<const char*>(net.params().data()),
             static_cast<std::streamsize>(net.params().size() * sizeof(double)));
    if (!os) throw ConfigError("checkpoint", "write failed for '" + path + "'");
}

Mlp load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("checkpoint", "cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw ConfigError("checkpoint", "bad magic in '" + path + "'");
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion) throw ConfigError("checkpoint", "unsupported version");
    const auto n_widths = read_pod<std::uint32_t>(is);
    std::vector<int> widths(n_widths);
    for (auto& w : widths) w = read_pod<std::int32_t>(is);
    const auto act = static_cast<Mlp::Activation>(read_pod<std::uint32_t>(is));
    Mlp net(widths, act);
    const auto n_params = read_pod<std::uint64_t>(is);
    if (n_params != static_cast<std::uint64_t>(net.params().size()))
        throw ConfigError("checkpoint", "parameter count mismatch");
    is.read(reinterpret_cast<char*>(net.params().data()),
            static_cast<std::streamsize>(n_params * sizeof(double)));
    if (!is) throw ConfigError("checkpoint", "truncated checkpoint '" + path + "'");
    return net;
}

} // namespace tacos
