#include "psm/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "psm/errors.hpp"

namespace psm {

NumaTopology::NumaTopology(int num_nodes, int cores_per_node,
                           std::vector<double> distance)
    : num_nodes_(num_nodes),
      cores_per_node_(cores_per_node),
      distance_(std::move(distance)) {
    validate();
}

void NumaTopology::validate() const {
    if (num_nodes_ < 1 || cores_per_node_ < 1)
        throw ConfigError("topology: num_nodes and cores_per_node must be >= 1");
    if (distance_.size() != static_cast<std::size_t>(num_nodes_) * num_nodes_)
        throw ConfigError("topology: distance matrix must be num_nodes x num_nodes");
    for (int i = 0; i < num_nodes_; ++i) {
        if (distance_[i * num_nodes_ + i] != 1.0)
            throw ConfigError("topology: distance diagonal must be 1.0");
        for (int j = 0; j < num_nodes_; ++j) {
            double d = distance_[i * num_nodes_ + j];
            if (d < 1.0)
                throw ConfigError("topology: distances must be >= 1.0");
            if (d != distance_[j * num_nodes_ + i])
                throw ConfigError("topology: distance matrix must be symmetric");
        }
    }
}

NumaTopology NumaTopology::chain(int num_nodes, int cores_per_node, double hop) {
    if (num_nodes < 1)
        throw ConfigError("topology: num_nodes must be >= 1");
    std::vector<double> d(static_cast<std::size_t>(num_nodes) * num_nodes);
    for (int i = 0; i < num_nodes; ++i)
        for (int j = 0; j < num_nodes; ++j)
            d[i * num_nodes + j] = 1.0 + std::abs(i - j) * hop;
    return NumaTopology(num_nodes, cores_per_node, std::move(d));
}

NumaTopology NumaTopology::reference() { return chain(32, 8); }

NumaTopology NumaTopology::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("topology: bad JSON: ") + e.what());
    }
    if (!j.contains("nodes") || !j.contains("cores_per_node"))
        throw ConfigError("topology: 'nodes' and 'cores_per_node' are required");
    int nodes = j.at("nodes").get<int>();
    int cores = j.at("cores_per_node").get<int>();
    if (!j.contains("distance") || j.at("distance") == "auto")
        return chain(nodes, cores);
    const auto& m = j.at("distance");
    if (!m.is_array() || m.size() != static_cast<std::size_t>(nodes))
        throw ConfigError("topology: 'distance' must be an NxN array or \"auto\"");
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(nodes) * nodes);
    for (const auto& row : m) {
        if (!row.is_array() || row.size() != static_cast<std::size_t>(nodes))
            throw ConfigError("topology: 'distance' must be an NxN array or \"auto\"");
        for (const auto& v : row) d.push_back(v.get<double>());
    }
    return NumaTopology(nodes, cores, std::move(d));
}

NumaTopology NumaTopology::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("topology: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

int NumaTopology::node_of_core(int core) const {
    if (core < 0 || core >= total_cores())
        throw std::out_of_range("core id " + std::to_string(core) +
                                " out of range (total " +
                                std::to_string(total_cores()) + ")");
    return core / cores_per_node_;
}

double NumaTopology::access_cost(int from, int to) const {
    if (from < 0 || from >= num_nodes_ || to < 0 || to >= num_nodes_)
        throw std::out_of_range("node id out of range");
    return distance_[static_cast<std::size_t>(from) * num_nodes_ + to];
}

void ThreadRegistry::register_thread(int tid, int core) {
    if (core < 0 || core >= topo_->total_cores())
        throw std::out_of_range("register_thread: core " + std::to_string(core) +
                                " out of range");
    std::unique_lock lock(mu_);
    auto [it, inserted] = core_of_tid_.emplace(tid, core);
    if (!inserted)
        throw StateError("register_thread: tid " + std::to_string(tid) +
                         " already bound to core " + std::to_string(it->second));
}

bool ThreadRegistry::is_registered(int tid) const {
    std::shared_lock lock(mu_);
    return core_of_tid_.count(tid) != 0;
}

int ThreadRegistry::core_of(int tid) const {
    std::shared_lock lock(mu_);
    auto it = core_of_tid_.find(tid);
    if (it == core_of_tid_.end())
        throw StateError("thread " + std::to_string(tid) + " is not registered");
    return it->second;
}

int ThreadRegistry::node_of(int tid) const {
    return topo_->node_of_core(core_of(tid));
}

std::vector<int> ThreadRegistry::active_nodes() const {
    std::shared_lock lock(mu_);
    std::set<int> nodes;
    for (const auto& [tid, core] : core_of_tid_)
        nodes.insert(topo_->node_of_core(core));
    return {nodes.begin(), nodes.end()};
}

} // namespace psm
