// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include <iostream>

#include "slimsplit/cli/cli.hpp"

int main(int argc, char** argv) {
  return slimsplit::cli::cli_dispatch(argc, argv, std::cout, std::cerr);
}
