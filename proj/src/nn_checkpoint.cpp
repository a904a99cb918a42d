#include "spi/nn/checkpoint.hpp"

#include <sstream>
#include <vector>

#include "spi/errors.hpp"
#include "spi/nn/serialize.hpp"

namespace spi::nn {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'I', 'G'};

std::string encode_config(const std::map<std::string, std::string>& entries) {
    std::ostringstream out;
    for (const auto& [key, value] : entries) out << key << "=" << value << "\n";
    return out.str();
}

std::map<std::string, std::string> decode_config(const std::string& text) {
    std::map<std::string, std::string> entries;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed checkpoint config line: " + line);
        entries[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return entries;
}

int config_int(const std::map<std::string, std::string>& entries, const std::string& key) {
    const auto it = entries.find(key);
    if (it == entries.end()) throw IoError("checkpoint config missing key: " + key);
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw IoError("checkpoint config key '" + key + "' is not an integer: " + it->second);
    }
}

std::uint64_t config_u64(const std::map<std::string, std::string>& entries, const std::string& key) {
    const auto it = entries.find(key);
    if (it == entries.end()) throw IoError("checkpoint config missing key: " + key);
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw IoError("checkpoint config key '" + key + "' is not an integer: " + it->second);
    }
}

}  // namespace

void save_checkpoint(const std::string& path, Generator& gen, Discriminator& disc,
                     const std::map<std::string, std::string>& extra) {
    std::map<std::string, std::string> entries = extra;
    const GeneratorConfig& g = gen.config();
    const DiscriminatorConfig& d = disc.config();
    entries["g.width"] = std::to_string(g.width);
    entries["g.height"] = std::to_string(g.height);
    entries["g.channels"] = std::to_string(g.channels);
    entries["g.blocks"] = std::to_string(g.blocks);
    entries["g.skip"] = g.skip_enabled ? "1" : "0";
    entries["g.init_seed"] = std::to_string(g.init_seed);
    entries["d.width"] = std::to_string(d.width);
    entries["d.height"] = std::to_string(d.height);
    entries["d.base"] = std::to_string(d.base_channels);
    entries["d.stages"] = std::to_string(d.stages);
    entries["d.init_seed"] = std::to_string(d.init_seed);

    std::vector<NamedTensor> tensors = gen.named_tensors();
    for (NamedTensor& t : disc.named_tensors()) tensors.push_back(t);
    save_named_file(path, kMagic, encode_config(entries), tensors);
}

Checkpoint load_checkpoint(const std::string& path) {
    const NamedFile file = load_named_file(path, kMagic);
    Checkpoint ckpt;
    ckpt.config = decode_config(file.config);

    ckpt.gen_config.width = config_int(ckpt.config, "g.width");
    ckpt.gen_config.height = config_int(ckpt.config, "g.height");
    ckpt.gen_config.channels = config_int(ckpt.config, "g.channels");
    ckpt.gen_config.blocks = config_int(ckpt.config, "g.blocks");
    ckpt.gen_config.skip_enabled = config_int(ckpt.config, "g.skip") != 0;
    ckpt.gen_config.init_seed = config_u64(ckpt.config, "g.init_seed");

    ckpt.disc_config.width = config_int(ckpt.config, "d.width");
    ckpt.disc_config.height = config_int(ckpt.config, "d.height");
    ckpt.disc_config.base_channels = config_int(ckpt.config, "d.base");
    ckpt.disc_config.stages = config_int(ckpt.config, "d.stages");
    ckpt.disc_config.init_seed = config_u64(ckpt.config, "d.init_seed");

    ckpt.generator = std::make_unique<Generator>(ckpt.gen_config);
    ckpt.discriminator = std::make_unique<Discriminator>(ckpt.disc_config);

    std::vector<NamedTensor> tensors = ckpt.generator->named_tensors();
    for (NamedTensor& t : ckpt.discriminator->named_tensors()) tensors.push_back(t);
    fill_from_blocks(file, tensors);
    return ckpt;
}

}  // namespace spi::nn
