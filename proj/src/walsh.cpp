#include "spi/walsh.hpp"

#include <stdexcept>
#include <string>

namespace spi {

Eigen::MatrixXd hadamard(int order) {
    if (!is_power_of_two(order))
        throw std::invalid_argument("hadamard order must be a power of two, got " +
                                    std::to_string(order));
    Eigen::MatrixXd h(order, order);
    h(0, 0) = 1.0;
    for (int s = 1; s < order; s *= 2) {
        h.block(0, s, s, s) = h.block(0, 0, s, s);
        h.block(s, 0, s, s) = h.block(0, 0, s, s);
        h.block(s, s, s, s) = -h.block(0, 0, s, s);
    }
    return h;
}

}  // namespace spi
