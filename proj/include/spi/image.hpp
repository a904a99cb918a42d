#pragma once

#include <Eigen/Core>

namespace spi {

// Grayscale raster with values in [0, 1], stored row-major as a flat vector.
struct Image {
    int width = 0;
    int height = 0;
    Eigen::VectorXd pixels;  // size() == width * height

    int n() const { return width * height; }

    double& at(int row, int col) { return pixels[row * width + col]; }
    double at(int row, int col) const { return pixels[row * width + col]; }

    static Image zeros(int width, int height);

    // Builds an image from a row-major vector; throws std::invalid_argument
    // if dimensions or pixel range are invalid.
    static Image from_vector(int width, int height, const Eigen::VectorXd& pixels);

    // Same, but clamps values into [0, 1] first.
    static Image from_vector_clipped(int width, int height, const Eigen::VectorXd& pixels);

    void validate() const;
};

}  // namespace spi
