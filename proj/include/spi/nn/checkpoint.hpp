#pragma once

#include <map>
#include <memory>
#include <string>

#include "spi/nn/discriminator.hpp"
#include "spi/nn/generator.hpp"

namespace spi::nn {

// A generator/discriminator pair restored from a checkpoint file, together
// with the key=value metadata recorded when the file was written.
struct Checkpoint {
    GeneratorConfig gen_config;
    DiscriminatorConfig disc_config;
    std::map<std::string, std::string> config;
    std::unique_ptr<Generator> generator;
    std::unique_ptr<Discriminator> discriminator;
};

// Writes both networks (parameters and normalization statistics) plus the
// given extra metadata entries into a single binary file.
void save_checkpoint(const std::string& path, Generator& gen, Discriminator& disc,
                     const std::map<std::string, std::string>& extra = {});

// Rebuilds both networks from a checkpoint written by save_checkpoint.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace spi::nn
