#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wafl/errors.hpp"

namespace wafl {

// Sentinel node id for the attacker in neighbor lists.
inline constexpr int kAttackerId = -1;

// Symmetric adjacency as a function of the epoch index. The attacker edge
// to its mount node exists for epochs in the half-open window
// [attack_start, attack_end).
class TopologySchedule {
public:
    // Chain 0-1-...-(n-1).
    static TopologySchedule static_line(int n_nodes) {
        if (n_nodes < 2) throw InputError("static_line: need at least 2 nodes");
        TopologySchedule ts;
        ts.num_nodes_ = n_nodes;
        for (int i = 0; i + 1 < n_nodes; ++i) ts.edges_.emplace_back(i, i + 1);
        return ts;
    }

    void set_attacker(int mount_node, int start_epoch, int end_epoch) {
        if (mount_node < 0 || mount_node >= num_nodes_)
            throw InputError("set_attacker: mount node " + std::to_string(mount_node) +
                             " outside [0," + std::to_string(num_nodes_ - 1) + "]");
        if (start_epoch > end_epoch)
            throw InputError("set_attacker: start epoch after end epoch");
        mount_ = mount_node;
        start_ = start_epoch;
        end_ = end_epoch;
    }

    int num_nodes() const { return num_nodes_; }
    std::optional<int> attacker_mount() const { return mount_; }
    bool attacker_active(int epoch) const {
        return mount_.has_value() && epoch >= start_ && epoch < end_;
    }

    std::vector<int> neighbors(int node, int epoch) const {
        if (node == kAttackerId) {
            if (!mount_.has_value())
                throw InputError("neighbors: no attacker in this topology");
            if (attacker_active(epoch)) return {*mount_};
            return {};
        }
        if (node < 0 || node >= num_nodes_)
            throw InputError("neighbors: unknown node id " + std::to_string(node));
        std::vector<int> out;
        for (auto [a, b] : edges_) {
            if (a == node) out.push_back(b);
            if (b == node) out.push_back(a);
        }
        if (mount_ == node && attacker_active(epoch)) out.push_back(kAttackerId);
        std::sort(out.begin(), out.end());
        return out;
    }

    // Hops from the attacker along the line: the mount node is 1 away.
    int hop_count(int node) const {
        if (!mount_.has_value()) throw InputError("hop_count: no attacker in this topology");
        if (node < 0 || node >= num_nodes_)
            throw InputError("hop_count: unknown node id " + std::to_string(node));
        return std::abs(node - *mount_) + 1;
    }

    const std::vector<std::pair<int, int>>& base_edges() const { return edges_; }

private:
    int num_nodes_ = 0;
    std::vector<std::pair<int, int>> edges_;
    std::optional<int> mount_;
    int start_ = 0;
    int end_ = 0;
};

}  // namespace wafl
