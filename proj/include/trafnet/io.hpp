#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "trafnet/network.hpp"

namespace trafnet {

/// A network file: the graph plus the default onramp input flows it carries.
struct NetworkFile {
    Network network;
    Vector demands;  // indexed by link; zero for ordinary links
};

/// Parses the JSON network format. Throws std::invalid_argument on schema errors.
NetworkFile parse_network(const nlohmann::json& doc);
NetworkFile load_network(const std::filesystem::path& path);

nlohmann::json to_json(const Network& net, const Vector& demands);

}  // namespace trafnet
