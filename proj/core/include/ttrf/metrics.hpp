#pragma once

#include "ttrf/image.hpp"

namespace ttrf {

/// 10 log10(1 / MSE) over the RGB channels; +inf for identical images.
/// Throws DimMismatch.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over the RGB channels: 11x11 Gaussian window (sigma 1.5),
/// C1 = 0.01^2, C2 = 0.03^2, averaged over the positions where the window
/// fits entirely. Throws DimMismatch; images smaller than the window
/// throw InvalidArgument.
double ssim(const Image& a, const Image& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

}  // namespace ttrf
