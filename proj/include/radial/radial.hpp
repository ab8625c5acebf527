// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "radial/analysis.hpp"
#include "radial/attention.hpp"
#include "radial/block.hpp"
#include "radial/grid.hpp"
#include "radial/mask.hpp"
#include "radial/parallel.hpp"
#include "radial/presets.hpp"
