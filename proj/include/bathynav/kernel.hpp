#pragma once

#include <cmath>

#include "bathynav/common.hpp"

namespace bathynav {

/// Squared-exponential kernel with a truncation threshold defining the local neighborhood
/// M(x) = { x' : k(x, x') > truncation }.
template<typename Scalar>
struct KernelConfigT {
    Scalar length_scale = 3;
    Scalar truncation = Scalar(0.01);

    void validate() const {
        if (!(length_scale > 0) || !(truncation > 0 && truncation < 1)) {
            throw InvalidParams("kernel needs length_scale > 0 and truncation in (0, 1)");
        }
    }

    /// Distance at which the kernel equals the truncation threshold.
    [[nodiscard]] Scalar radius() const { return length_scale * std::sqrt(2 * std::log(1 / truncation)); }
};
using KernelConfig = KernelConfigT<double>;

template<typename Scalar>
Scalar kernel(const Vec2T<Scalar> &a, const Vec2T<Scalar> &b, const KernelConfigT<Scalar> &cfg) {
    return std::exp(-(a - b).squaredNorm() / (2 * cfg.length_scale * cfg.length_scale));
}

template<typename Scalar>
struct Gaussian1T {
    Scalar mean;
    Scalar variance;
};

/// Conjugate update of one cell's N(mean, variance) by a reading z whose noise variance is
/// inflated by the kernel weight: sigma_w^2 = sensor_variance / k^2.
template<typename Scalar>
Gaussian1T<Scalar> posterior_update(const Gaussian1T<Scalar> &prior, Scalar z, Scalar k, Scalar sensor_variance) {
    const Scalar sw2 = sensor_variance / (k * k);
    const Scalar denom = prior.variance + sw2;
    return {(sw2 * prior.mean + prior.variance * z) / denom, prior.variance * sw2 / denom};
}

}  // namespace bathynav
