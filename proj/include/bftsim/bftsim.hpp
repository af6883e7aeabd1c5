// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

// Umbrella header: the whole library except the optional libsodium-backed
// signature scheme (bftsim/auth_ed25519.hpp), which needs -lsodium.

#include "bftsim/adversary.hpp"
#include "bftsim/auth.hpp"
#include "bftsim/client.hpp"
#include "bftsim/digest.hpp"
#include "bftsim/encoding.hpp"
#include "bftsim/harness.hpp"
#include "bftsim/history.hpp"
#include "bftsim/kvstore.hpp"
#include "bftsim/lincheck.hpp"
#include "bftsim/messages.hpp"
#include "bftsim/metrics.hpp"
#include "bftsim/proof.hpp"
#include "bftsim/quorum.hpp"
#include "bftsim/replica.hpp"
#include "bftsim/scenario.hpp"
#include "bftsim/simnet.hpp"
#include "bftsim/trace.hpp"
#include "bftsim/types.hpp"
