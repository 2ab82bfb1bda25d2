// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/cli.hpp"

int main(int argc, char** argv) { return lms3::cli::run(argc, argv); }
