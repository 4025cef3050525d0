// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "rsqa/cli.hpp"

int main(int argc, char** argv) {
  return rsqa::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
