#pragma once

#include "duel/net.hpp"

#include <filesystem>
#include <string>

namespace duel {

/// Network checkpoint, text format version 1:
///
///     duelnet 1
///     topology <single|dueling>
///     aggregator <mean|max|naive>
///     stream <shared|value|advantage> <layer count>
///     layer <out> <in> <rectifier|identity>
///     <out lines of `in` weights, row-major>
///     <one line of `out` biases>
///     ...
///     end
///
/// Numbers use the shortest round-trip decimal form, so save/load is lossless.
std::string serialize_net(const DenseNet& net);
DenseNet deserialize_net(const std::string& text);

/// Written to `<path>.tmp` and renamed into place.
void save_checkpoint(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_checkpoint(const std::filesystem::path& path);

}  // namespace duel
