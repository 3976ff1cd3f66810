#include "trafnet/io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace trafnet {

using nlohmann::json;

namespace {

double number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj.at(key).is_number()) {
        throw std::invalid_argument(where + ": missing numeric field '" + key + "'");
    }
    return obj.at(key).get<double>();
}

double optional_number(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    if (obj.at(key).is_string() && obj.at(key).get<std::string>() == "inf") return kInfinity;
    return obj.at(key).get<double>();
}

Demand parse_demand(const json& obj, const std::string& where) {
    const std::string type = obj.value("type", "piecewise_linear");
    if (type == "piecewise_linear") {
        const double capacity = number(obj, "capacity", where);
        // Either the slope or the density at which capacity is reached.
        const double speed = obj.contains("freeflow_speed") ? number(obj, "freeflow_speed", where)
                                                            : capacity / number(obj, "critical_density", where);
        return Demand::piecewise_linear(speed, capacity);
    }
    if (type == "exponential") {
        return Demand::exponential(number(obj, "scale", where), number(obj, "rate", where));
    }
    throw std::invalid_argument(where + ": unknown demand type '" + type + "'");
}

Supply parse_supply(const json& obj, const std::string& where) {
    const std::string type = obj.value("type", "piecewise_linear");
    const double jam = number(obj, "jam_density", where);
    if (type == "piecewise_linear") {
        // Either the slope or the supply value at zero density.
        const double speed = obj.contains("congestion_speed") ? number(obj, "congestion_speed", where)
                                                              : number(obj, "intercept", where) / jam;
        return Supply::piecewise_linear(speed, jam, optional_number(obj, "capacity", kInfinity));
    }
    if (type == "exponential") {
        return Supply::exponential(number(obj, "scale", where), number(obj, "rate", where), jam);
    }
    throw std::invalid_argument(where + ": unknown supply type '" + type + "'");
}

json demand_json(const Demand& d) {
    if (d.kind() == DiagramKind::PiecewiseLinear) {
        return {{"type", "piecewise_linear"}, {"freeflow_speed", d.freeflow_speed()}, {"capacity", d.capacity()}};
    }
    return {{"type", "exponential"}, {"scale", d.scale()}, {"rate", d.rate()}};
}

json supply_json(const Supply& s) {
    if (s.kind() == DiagramKind::PiecewiseLinear) {
        json out = {{"type", "piecewise_linear"}, {"congestion_speed", s.congestion_speed()},
                    {"jam_density", s.jam_density()}};
        if (std::isfinite(s.capacity())) out["capacity"] = s.capacity();
        return out;
    }
    return {{"type", "exponential"}, {"scale", s.scale()}, {"rate", s.rate()}, {"jam_density", s.jam_density()}};
}

}  // namespace

NetworkFile parse_network(const json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("network document must be a JSON object");
    for (const char* key : {"junctions", "links"}) {
        if (!doc.contains(key) || !doc.at(key).is_array()) {
            throw std::invalid_argument(std::string("network document needs an array '") + key + "'");
        }
    }

    std::vector<std::string> junctions;
    for (const auto& j : doc.at("junctions")) junctions.push_back(j.get<std::string>());

    std::vector<Link> links;
    for (const auto& obj : doc.at("links")) {
        Link link;
        link.id = obj.at("id").get<std::string>();
        const std::string where = "link '" + link.id + "'";
        const std::string kind = obj.value("kind", "ordinary");
        if (kind == "onramp") {
            link.kind = LinkKind::Onramp;
        } else if (kind == "ordinary") {
            link.kind = LinkKind::Ordinary;
        } else {
            throw std::invalid_argument(where + ": unknown kind '" + kind + "'");
        }
        if (obj.contains("tail") && !obj.at("tail").is_null()) link.tail = obj.at("tail").get<std::string>();
        link.head = obj.at("head").get<std::string>();
        if (!obj.contains("demand")) throw std::invalid_argument(where + ": missing demand");
        link.demand = parse_demand(obj.at("demand"), where);
        if (obj.contains("supply") && !obj.at("supply").is_null()) link.supply = parse_supply(obj.at("supply"), where);
        link.meter = optional_number(obj, "meter", kInfinity);
        links.push_back(std::move(link));
    }

    std::vector<Split> splits;
    if (doc.contains("split")) {
        for (const auto& s : doc.at("split")) {
            splits.push_back({s.at("from").get<std::string>(), s.at("to").get<std::string>(), s.at("beta").get<double>()});
        }
    }

    Network net(std::move(junctions), std::move(links), std::move(splits));
    Vector demands = Vector::Zero(static_cast<Eigen::Index>(net.link_count()));
    if (doc.contains("demands")) {
        for (const auto& [id, value] : doc.at("demands").items()) {
            const LinkIndex l = net.link_index(id);
            if (!net.is_onramp(l)) throw std::invalid_argument("demand given for ordinary link '" + id + "'");
            demands[l] = value.get<double>();
        }
    }
    return {std::move(net), std::move(demands)};
}

NetworkFile load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open network file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return parse_network(doc);
}

json to_json(const Network& net, const Vector& demands) {
    json doc;
    doc["junctions"] = net.junction_ids();
    doc["links"] = json::array();
    for (const Link& link : net.links()) {
        json obj = {{"id", link.id},
                    {"kind", link.kind == LinkKind::Onramp ? "onramp" : "ordinary"},
                    {"head", link.head},
                    {"demand", demand_json(link.demand)}};
        if (link.tail) obj["tail"] = *link.tail;
        if (link.supply) obj["supply"] = supply_json(*link.supply);
        if (std::isfinite(link.meter)) obj["meter"] = link.meter;
        doc["links"].push_back(std::move(obj));
    }
    doc["split"] = json::array();
    for (const Split& s : net.splits()) doc["split"].push_back({{"from", s.from}, {"to", s.to}, {"beta", s.beta}});
    doc["demands"] = json::object();
    for (LinkIndex l : net.onramps()) doc["demands"][net.link(l).id] = demands[l];
    return doc;
}

}  // namespace trafnet
