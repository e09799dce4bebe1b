// SPDX-License-Identifier: Apache-2.0
#include "vidlm/cli.hpp"

int main(int argc, char** argv) { return vidlm::cli::run(argc, argv); }
