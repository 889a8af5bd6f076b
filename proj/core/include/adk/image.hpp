#pragma once

#include <string>

#include "adk/tensor.hpp"

namespace adk {

// Images are [C,H,W] float tensors in [0,1] throughout the project.

// 8-bit binary PPM (P6) for 3-channel, PGM (P5) for 1-channel images.
void save_ppm(const std::string& path, const Tensor& img);
Tensor load_ppm(const std::string& path);
void save_pgm(const std::string& path, const Tensor& img);
Tensor load_pgm(const std::string& path);

// Raw f32 planar dump with a text sidecar (<path>.meta) recording shape and
// dtype; used to cache conditioning maps between stages.
void save_raw_f32(const std::string& path, const Tensor& t);
Tensor load_raw_f32(const std::string& path);

}  // namespace adk
