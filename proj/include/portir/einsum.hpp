// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace portir {

/// Explicit-output einsum equation ("ij,jk->ik"). Labels are ASCII letters;
/// whitespace is ignored; ellipsis is not part of the dialect.
struct EinsumEquation {
  std::vector<std::string> operands;
  std::string output;
};

/// Throws UnsupportedEquation on grammar violations, an operand count that
/// differs from `operand_count`, or output labels that are repeated or do not
/// occur in any operand.
EinsumEquation parse_einsum(std::string_view equation, std::size_t operand_count);

}  // namespace portir
