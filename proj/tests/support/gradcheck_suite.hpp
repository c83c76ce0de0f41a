// Block configurations covered by the gradient suite. Shapes stay within
// (1,8,6,6). CARAFE-family entries use k_up = 3: with k_up = 5 some of the
// 3600 encoder gradients are ~1e-8, below what a 1e-6 central difference in
// 64-bit arithmetic resolves to 1e-5 relative error.
#ifndef LWCONV_TESTS_GRADCHECK_SUITE_HPP
#define LWCONV_TESTS_GRADCHECK_SUITE_HPP

#include <array>
#include <cstdint>
#include <string_view>

#include "lwconv/tensor.hpp"

namespace suite {

struct GradCase {
  std::string_view label;
  std::string_view kind;
  std::string_view params;
  lwconv::Shape shape;
};

inline constexpr std::array<std::uint64_t, 3> kSeeds = {1, 2, 3};

inline const std::array<GradCase, 15> kGradCases = {{
    {"conv2d", "conv2d", R"({"out_channels":6,"kernel":3,"groups":2,"bias":true})", {1, 4, 5, 5}},
    {"group_norm", "group_norm", R"({"groups":2})", {1, 4, 3, 3}},
    {"ds_conv", "ds_conv", R"({"out_channels":6})", {1, 4, 5, 5}},
    {"ghost_conv", "ghost_conv", R"({"out_channels":8})", {1, 4, 5, 5}},
    {"ghost_conv(sigmoid)", "ghost_conv", R"({"out_channels":6,"ratio":3,"activation":"sigmoid"})", {1, 4, 4, 4}},
    {"ghost_bottleneck", "ghost_bottleneck", "{}", {1, 8, 4, 4}},
    {"c3ghost", "c3ghost", R"({"n":2})", {1, 8, 5, 5}},
    {"sru(soft)", "sru", R"({"gate":"soft"})", {1, 8, 4, 4}},
    {"cru", "cru", "{}", {1, 8, 4, 4}},
    {"scconv(soft)", "scconv", R"({"gate":"soft"})", {1, 8, 6, 6}},
    {"predict_kernels", "predict_kernels", R"({"k_up":3})", {1, 4, 4, 4}},
    {"reassemble", "reassemble", "{}", {1, 4, 4, 4}},
    {"carafe", "carafe", R"({"k_up":3})", {1, 4, 4, 4}},
    {"softmax", "softmax", "{}", {1, 6, 3, 3}},
    {"global_avg_pool", "global_avg_pool", "{}", {1, 8, 6, 6}},
}};

}  // namespace suite

#endif  // LWCONV_TESTS_GRADCHECK_SUITE_HPP
