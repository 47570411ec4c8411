// SPDX-License-Identifier: Apache-2.0
#include "fblab/cli.hpp"

int main(int argc, char** argv) { return fblab::run_cli(argc, argv); }
