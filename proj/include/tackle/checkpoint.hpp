#pragma once

#include <filesystem>

#include "tackle/vivit.hpp"

namespace tackle {

// "TCKP", u16 version, u32 config-JSON length + JSON, u32 tensor count, then per
// tensor: u16 name length + name, u8 dtype (1 = f32, 2 = f64), u32 ndim, u32 dims,
// little-endian payload.
inline constexpr std::uint16_t kCheckpointVersion = 1;

template <typename Real>
void save_checkpoint(const std::filesystem::path& path, const ModelParameters<Real>& params);

template <typename Real>
ModelParameters<Real> load_checkpoint(const std::filesystem::path& path);

}  // namespace tackle
