#pragma once

#include <string>

#include "geoloc/gateway/types.hpp"

namespace geoloc::gateway {

/// Evaluation prompt asking for country, city, and reasons as JSON.
std::string build_geoloc_prompt();

/// Country + reasons variant used for the reasoning-tuning corpus.
std::string build_reasoning_prompt();

/// Country + city variant (no reasons) used for the location-tuning corpus.
std::string build_location_prompt();

}  // namespace geoloc::gateway
