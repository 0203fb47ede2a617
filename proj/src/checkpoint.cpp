#include "seqcls/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "seqcls/errors.hpp"

namespace seqcls::train {

using json = nlohmann::json;

namespace {
constexpr const char* kMagic = "SQCKPT1";
}

uint64_t param_hash(const ParamStore& params) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [name, t] : params.entries()) {
        for (unsigned char ch : name) {
            h ^= ch;
            h *= 0x100000001b3ull;
        }
        const unsigned char* bytes = reinterpret_cast<const unsigned char*>(t.data());
        for (size_t i = 0; i < t.size() * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

void save_checkpoint(const model::Classifier& cls, const std::string& path) {
    json dir = json::array();
    for (const auto& [name, t] : cls.params().entries())
        dir.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
    json header;
    header["schema_version"] = 1;
    header["config"] = json::parse(to_json(cls.config()));
    header["architecture"] = json::parse(cls.architecture_description());
    header["input_dim"] = cls.input_dim();
    header["tensors"] = dir;
    header["param_hash"] = param_hash(cls.params());

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << kMagic << "\n" << header.dump() << "\n";
        for (const auto& [name, t] : cls.params().entries())
            out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!out) throw DataError("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move " + tmp + " into place");
}

std::unique_ptr<model::Classifier> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw DataError(path + ": not a checkpoint file");
    if (!std::getline(in, line)) throw DataError(path + ": truncated header");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError(path + ": malformed header: " + e.what());
    }
    if (header.at("schema_version").get<int>() != 1)
        throw DataError(path + ": unsupported checkpoint schema version");

    ModelConfig cfg = model_config_from_json(header.at("config").dump());
    const int input_dim = header.at("input_dim").get<int>();
    auto cls = model::build_classifier(cfg, input_dim, /*init_seed=*/0);

    const json& dir = header.at("tensors");
    if (dir.size() != cls->params().count())
        throw DataError(path + ": tensor directory does not match the architecture");
    size_t idx = 0;
    for (const auto& entry : dir) {
        const std::string name = entry.at("name").get<std::string>();
        const int rows = entry.at("rows").get<int>();
        const int cols = entry.at("cols").get<int>();
        auto& [have_name, tensor] = cls->params().entries()[idx++];
        if (have_name != name || tensor.rows() != rows || tensor.cols() != cols)
            throw DataError(path + ": tensor " + name + " does not match the rebuilt architecture");
        in.read(reinterpret_cast<char*>(tensor.data()), static_cast<std::streamsize>(tensor.size() * sizeof(double)));
        if (!in) throw DataError(path + ": truncated tensor data for " + name);
    }
    const uint64_t want = header.at("param_hash").get<uint64_t>();
    if (param_hash(cls->params()) != want) throw DataError(path + ": parameter hash mismatch");
    if (header.at("architecture").dump() != json::parse(cls->architecture_description()).dump())
        throw DataError(path + ": architecture description mismatch after rebuild");
    return cls;
}

} // namespace seqcls::train
