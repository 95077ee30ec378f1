#pragma once

#include <cstddef>
#include <iosfwd>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace psm {

// Simulated cc-NUMA machine: nodes, cores per node, and a symmetric
// relative-latency matrix (1.0 on the diagonal).
class NumaTopology {
public:
    NumaTopology(int num_nodes, int cores_per_node, std::vector<double> distance);

    // num_nodes x cores_per_node with chain-interpolated distances:
    // distance(i,j) = 1 + |i-j| * hop.  The default hop of 5.8/31 makes a
    // 32-node machine span exactly 1.0 .. 6.8.
    static NumaTopology chain(int num_nodes, int cores_per_node,
                              double hop = 5.8 / 31.0);

    // The 32-node x 8-core reference machine (SGI-class, distances 1.0..6.8).
    static NumaTopology reference();

    // Parse `{ "nodes": N, "cores_per_node": C, "distance": [[...]] | "auto" }`.
    static NumaTopology from_json_text(const std::string& text);
    static NumaTopology from_json_file(const std::string& path);

    int num_nodes() const { return num_nodes_; }
    int cores_per_node() const { return cores_per_node_; }
    int total_cores() const { return num_nodes_ * cores_per_node_; }

    int node_of_core(int core) const;              // throws std::out_of_range
    double access_cost(int from, int to) const;    // distance[from][to]

private:
    void validate() const;

    int num_nodes_;
    int cores_per_node_;
    std::vector<double> distance_; // row-major num_nodes x num_nodes
};

// tid -> core binding, immutable per thread once registered.
class ThreadRegistry {
public:
    explicit ThreadRegistry(const NumaTopology& topo) : topo_(&topo) {}

    void register_thread(int tid, int core); // StateError on rebind, out_of_range on bad core
    bool is_registered(int tid) const;
    int core_of(int tid) const;              // StateError if unregistered
    int node_of(int tid) const;

    // Distinct nodes that host at least one registered thread, ascending.
    std::vector<int> active_nodes() const;

private:
    const NumaTopology* topo_;
    mutable std::shared_mutex mu_;
    std::unordered_map<int, int> core_of_tid_;
};

} // namespace psm
