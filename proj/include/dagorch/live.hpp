// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>

#include "dagorch/backends.hpp"

namespace dagorch {

// Reference adapter for model-backed services. Every backend role POSTs a
// JSON document to <base_url>/<role> and reads one back:
//
//   /plan        {query, available_agents}        -> {plan, tokens}
//   /agent       {sub_question, prompt, attempt}  -> {content, sources, tokens}
//   /verify      {sub_question, result, dependency_results}
//                                                 -> verification record + tokens
//   /replan      {query, plan, complete, incomplete, iteration,
//                 max_iterations, completeness}   -> replan decision + tokens
//   /synthesize  {stage, query, group, items, verification_summary}
//                                                 -> final answer + tokens
//
// Non-2xx replies, transport errors and undecodable bodies raise
// BackendError. Every agent type is routed to the same /agent endpoint;
// tools come from `tool_service_url` when given.
struct LiveOptions {
  std::string base_url;
  std::string tool_service_url;
  std::chrono::milliseconds timeout = std::chrono::seconds(600);
};

BackendRegistry make_live_registry(const LiveOptions& options);

}  // namespace dagorch
