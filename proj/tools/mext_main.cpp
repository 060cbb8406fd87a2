// SPDX-License-Identifier: Apache-2.0
#include "mext/cli.hpp"

int main(int argc, char **argv) { return mext::run_cli(argc, argv); }
