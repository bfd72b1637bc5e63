// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/einsum.hpp"

#include <cctype>

#include "portir/error.hpp"

namespace portir {

EinsumEquation parse_einsum(std::string_view equation, std::size_t operand_count) {
  std::string compact;
  for (char c : equation) {
    if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
  }
  const auto arrow = compact.find("->");
  if (arrow == std::string::npos) fail(ErrorCode::UnsupportedEquation, "equation '" + compact + "' lacks '->'");

  EinsumEquation eq;
  std::string current;
  for (std::size_t i = 0; i < arrow; ++i) {
    const char c = compact[i];
    if (c == ',') {
      eq.operands.push_back(current);
      current.clear();
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      current.push_back(c);
    } else {
      fail(ErrorCode::UnsupportedEquation, std::string("unexpected character '") + c + "' in '" + compact + "'");
    }
  }
  eq.operands.push_back(current);
  eq.output = compact.substr(arrow + 2);

  for (char c : eq.output) {
    if (!std::isalpha(static_cast<unsigned char>(c))) {
      fail(ErrorCode::UnsupportedEquation, std::string("unexpected output character '") + c + "'");
    }
    if (eq.output.find(c) != eq.output.rfind(c)) {
      fail(ErrorCode::UnsupportedEquation, std::string("output label '") + c + "' repeats");
    }
    bool found = false;
    for (const auto& op : eq.operands) found = found || op.find(c) != std::string::npos;
    if (!found) fail(ErrorCode::UnsupportedEquation, std::string("output label '") + c + "' appears in no operand");
  }
  if (eq.operands.size() != operand_count) {
    fail(ErrorCode::UnsupportedEquation, "equation '" + compact + "' names " + std::to_string(eq.operands.size()) +
                                              " operands but the node has " + std::to_string(operand_count));
  }
  return eq;
}

}  // namespace portir
