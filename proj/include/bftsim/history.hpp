// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bftsim/messages.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

// One client operation as observed at the client: invocation time, and — if
// the client assembled enough matching replies before the horizon — the
// response time and result. Incomplete operations keep the best matching-reply
// count they ever reached, which is the observable the isolation attack pins
// below threshold.
struct HistoryRecord {
  uint64_t client = 0;
  uint64_t seq = 0;
  OpKind kind = OpKind::Update;
  std::string key;
  std::string value;       // written value for updates
  SimTime invoke = 0;
  bool completed = false;
  SimTime response = 0;
  std::string result;
  uint32_t matching = 0;   // max replies agreeing on one result digest
  bool fast_path = false;  // completed via the direct read path
};

using History = std::vector<HistoryRecord>;

}  // namespace bftsim
