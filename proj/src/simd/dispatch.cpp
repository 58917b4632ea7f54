#include <cstdlib>
#include <string_view>

#include "tesl/simd/kernels.hpp"

namespace tesl::simd {

namespace detail {
const Kernels* avx2_table() noexcept;
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

const Kernels* avx2_kernels() noexcept { return detail::avx2_table(); }

namespace {

const Kernels& select() noexcept {
  const char* forced = std::getenv("TESL_SIMD");
  if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
  if (const Kernels* k = avx2_kernels()) return *k;
  return scalar_kernels();
}

}  // namespace

const Kernels& active() noexcept {
  static const Kernels& chosen = select();
  return chosen;
}

}  // namespace tesl::simd
