#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spi/nn/layers.hpp"

namespace spi::nn {

// One parameter block read back from a named-block file.
struct LoadedBlock {
    std::vector<int> dims;
    Eigen::VectorXd data;
};

struct NamedFile {
    std::string config;  // free-form key=value echo
    std::map<std::string, LoadedBlock> blocks;
};

// Container format shared by checkpoints ("SPIG") and feature-extractor
// weight files ("SPIW"): 4-byte magic, version u32, config echo
// (u32 length + bytes), block count u32, then per block a u32-length name,
// u32 rank, u32 dims and the values as little-endian 32-bit floats.
void save_named_file(const std::string& path, const char magic[4], const std::string& config,
                     const std::vector<NamedTensor>& tensors);
NamedFile load_named_file(const std::string& path, const char magic[4]);

// Copies blocks into the targets by name, validating shapes; throws IoError
// on missing names or mismatched dimensions.
void fill_from_blocks(const NamedFile& file, const std::vector<NamedTensor>& targets);

}  // namespace spi::nn
