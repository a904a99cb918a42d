#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spi/image.hpp"

namespace spi::nn {

// Dense NCHW activation/parameter block in double precision. All network
// math in this toolkit runs at 64-bit so analytic gradients can be checked
// against central finite differences at tight tolerances.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    Eigen::VectorXd data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), data(Eigen::VectorXd::Zero(size())) {}

    int size() const { return n * c * h * w; }
    int per_image() const { return c * h * w; }

    double& at(int ni, int ci, int hi, int wi) {
        return data[((ni * c + ci) * h + hi) * w + wi];
    }
    double at(int ni, int ci, int hi, int wi) const {
        return data[((ni * c + ci) * h + hi) * w + wi];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_string() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }
};

// Packs a batch of equally sized grayscale images into an Nx1xHxW tensor.
Tensor batch_from_images(const std::vector<Image>& images);

// Extracts image i of a single-channel tensor, clipping into [0,1].
Image image_from_tensor(const Tensor& t, int index);

}  // namespace spi::nn
