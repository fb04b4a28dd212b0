#pragma once

#include <string>

#include "fcpd/dense_tensor.hpp"
#include "fcpd/kruskal.hpp"

namespace fcpd {

/// FCPT v1: magic "FCPT", u8 version, u8 order, order x u64 LE mode sizes,
/// then prod(I) f64 LE values in first-mode-fastest order.
void write_tensor(const std::string& path, const DenseTensor& t);
DenseTensor read_tensor(const std::string& path);

/// FCPK v1: magic "FCPK", u8 version, u8 order, u32 LE rank, order x u64 LE
/// mode sizes, rank x f64 weights, then the factors consecutively,
/// column-major.
void write_kruskal(const std::string& path, const KruskalTensor& k);
KruskalTensor read_kruskal(const std::string& path);

} // namespace fcpd
