// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "portir/cli.hpp"

int main(int argc, char** argv) { return portir::run_cli(argc, argv, std::cout, std::cerr); }
