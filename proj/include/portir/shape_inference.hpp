// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "portir/graph.hpp"

namespace portir {

/// Returns a copy of `graph` whose value_specs hold a spec for every tensor.
///
/// Symbolic dims flow unchanged through shape-preserving ops. Declared graph
/// output specs must agree with the inferred ones. Throws InvalidGraph when
/// validate_graph reports errors, otherwise ShapeMismatch, TypeMismatch,
/// UnresolvableReshape, UnsupportedEquation or BadAttribute.
Graph infer_shapes(const Graph& graph);

/// Numpy-style right-aligned broadcast of two shapes. Throws ShapeMismatch.
Shape broadcast_shapes(const Shape& a, const Shape& b);

/// Maps a possibly negative axis into [0, rank). Throws BadAttribute.
std::size_t normalize_axis(std::int64_t axis, std::size_t rank);

/// floor((in + 2*pad - kernel) / stride) + 1, the pooling/convolution extent.
std::int64_t window_extent(std::int64_t in, std::int64_t kernel, std::int64_t stride, std::int64_t pad);

}  // namespace portir
