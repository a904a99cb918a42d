#include "spi/nn/serialize.hpp"

#include <cstring>
#include <fstream>

#include "spi/errors.hpp"

namespace spi::nn {

namespace {

constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw IoError("truncated parameter file: " + path);
    return v;
}

std::string read_string(std::istream& in, const std::string& path) {
    const std::uint32_t len = read_u32(in, path);
    if (len > (1u << 24)) throw IoError("corrupt string length in parameter file: " + path);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw IoError("truncated parameter file: " + path);
    return s;
}

}  // namespace

void save_named_file(const std::string& path, const char magic[4], const std::string& config,
                     const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(magic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(config.size()));
    out.write(config.data(), static_cast<std::streamsize>(config.size()));
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    std::vector<float> buffer;
    for (const NamedTensor& t : tensors) {
        write_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
        long long expected = 1;
        for (int d : t.dims) {
            write_u32(out, static_cast<std::uint32_t>(d));
            expected *= d;
        }
        if (expected != t.data->size())
            throw IoError("block '" + t.name + "' dims do not match its data size");
        buffer.resize(t.data->size());
        for (Eigen::Index i = 0; i < t.data->size(); ++i)
            buffer[static_cast<std::size_t>(i)] = static_cast<float>((*t.data)(i));
        out.write(reinterpret_cast<const char*>(buffer.data()),
                  static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path);
}

NamedFile load_named_file(const std::string& path, const char magic[4]) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    char got[4];
    in.read(got, 4);
    if (!in || std::memcmp(got, magic, 4) != 0)
        throw IoError("not a " + std::string(magic, 4) + " parameter file: " + path);
    const std::uint32_t version = read_u32(in, path);
    if (version != kVersion)
        throw IoError("unsupported parameter file version " + std::to_string(version));

    NamedFile file;
    file.config = read_string(in, path);
    const std::uint32_t count = read_u32(in, path);
    for (std::uint32_t b = 0; b < count; ++b) {
        const std::string name = read_string(in, path);
        const std::uint32_t rank = read_u32(in, path);
        if (rank > 8) throw IoError("corrupt block rank in parameter file: " + path);
        LoadedBlock block;
        long long total = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint32_t dim = read_u32(in, path);
            block.dims.push_back(static_cast<int>(dim));
            total *= dim;
        }
        if (total < 0 || total > (1LL << 30))
            throw IoError("corrupt block size in parameter file: " + path);
        std::vector<float> buffer(static_cast<std::size_t>(total));
        in.read(reinterpret_cast<char*>(buffer.data()),
                static_cast<std::streamsize>(buffer.size() * sizeof(float)));
        if (!in) throw IoError("truncated parameter file: " + path);
        block.data.resize(total);
        for (long long i = 0; i < total; ++i)
            block.data(i) = static_cast<double>(buffer[static_cast<std::size_t>(i)]);
        file.blocks.emplace(name, std::move(block));
    }
    return file;
}

void fill_from_blocks(const NamedFile& file, const std::vector<NamedTensor>& targets) {
    for (const NamedTensor& t : targets) {
        const auto it = file.blocks.find(t.name);
        if (it == file.blocks.end()) throw IoError("parameter file misses block '" + t.name + "'");
        if (it->second.dims != t.dims)
            throw IoError("block '" + t.name + "' has mismatched dimensions");
        *t.data = it->second.data;
    }
}

}  // namespace spi::nn
