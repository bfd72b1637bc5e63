// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "portir/io.hpp"
#include "portir/tensor.hpp"

namespace portir {

/// Writes `dir/tensors.json` ([{name,dtype,shape,file}]) and one raw
/// little-endian blob per tensor. The directory is replaced.
void save_tensors(const TensorList& tensors, const fs::path& dir);
TensorList load_tensors(const fs::path& dir);

/// Hash of the manifest and blob bytes exactly as stored.
std::string tensors_sha256(const fs::path& dir);

}  // namespace portir
