#include "mpvad/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace mpvad {

namespace {
constexpr char kMagic[6] = {'M', 'P', 'V', 'D', '1', '\n'};
}

void save_archive(const Archive& a, const std::string& path) {
    nlohmann::json header;
    header["meta"] = a.meta;
    auto& entries = header["tensors"] = nlohmann::json::array();
    for (const auto& t : a.tensors)
        entries.push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "f32"}});
    std::string hs = header.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path + ": cannot open for writing");
    f.write(kMagic, sizeof(kMagic));
    uint64_t n = hs.size();
    f.write(reinterpret_cast<const char*>(&n), sizeof(n));
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& t : a.tensors)
        f.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!f) throw IoError(path + ": write failed");
}

Archive load_archive(const std::string& path) {
    if (!std::filesystem::exists(path)) throw NotFoundError(path + ": checkpoint not found");
    std::ifstream f(path, std::ios::binary);
    char magic[6];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DecodeError(path + ": not a checkpoint archive");
    uint64_t n = 0;
    f.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::string hs(n, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(n));
    if (!f) throw DecodeError(path + ": truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const std::exception& e) {
        throw DecodeError(path + ": bad header: " + e.what());
    }

    Archive a;
    a.meta = header.at("meta");
    for (const auto& e : header.at("tensors")) {
        NamedTensorF t;
        t.name = e.at("name").get<std::string>();
        t.shape = e.at("shape").get<std::vector<int>>();
        size_t count = 1;
        for (int d : t.shape) count *= static_cast<size_t>(d);
        t.data.resize(count);
        f.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(count * sizeof(float)));
        if (!f) throw DecodeError(path + ": truncated tensor data for '" + t.name + "'");
        a.tensors.push_back(std::move(t));
    }
    return a;
}

nlohmann::json to_json(const NetworkConfig& c) {
    return {{"num_paths", c.num_paths},
            {"input_len", c.input_len},
            {"in_channels", c.in_channels},
            {"path_channels", c.path_channels},
            {"path_divisors", c.path_divisors},
            {"seed", c.seed},
            {"use_nonlocal", c.use_nonlocal},
            {"use_gru", c.use_gru},
            {"active_paths", c.active_paths}};
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
    NetworkConfig c;
    c.num_paths = j.at("num_paths").get<int>();
    c.input_len = j.at("input_len").get<int>();
    c.in_channels = j.at("in_channels").get<int>();
    c.path_channels = j.at("path_channels").get<std::vector<int>>();
    c.path_divisors = j.at("path_divisors").get<std::vector<int>>();
    c.seed = j.at("seed").get<uint64_t>();
    c.use_nonlocal = j.at("use_nonlocal").get<bool>();
    c.use_gru = j.at("use_gru").get<bool>();
    c.active_paths = j.at("active_paths").get<std::vector<int>>();
    return c;
}

}  // namespace mpvad
