#pragma once

#include "civ/clengine/serialize.hpp"
#include "civ/dataio/stats.hpp"
#include "civ/dataio/synth.hpp"
#include "civ/explain/attribution.hpp"
#include "civ/explain/geometry.hpp"
#include "civ/sampling/bins.hpp"
#include "civ/sampling/negative.hpp"

namespace civ {

Json to_json(const FeatureStats& s);
Json to_json(const BinSummary& b);
Json to_json(const CircleLayout& c);
Json to_json(const Projection2D& p, const std::vector<std::size_t>& rows);
Json to_json(const FeatureAttribution& a);
Json to_json(const NegativeDelta& d);
Json to_json(const SynthSpec& s);

// Only the listed SynthSpec fields are accepted.
SynthSpec synth_spec_from_json(const Json& j);

}  // namespace civ
