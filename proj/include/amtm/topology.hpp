#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace amtm {

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Link {
  int src = -1;
  int dst = -1;
  double capacity_mbps = 0.0;
  double delay_s = 0.0;
};

/// Directed graph. Node indices are dense, in canonical (sorted id) order.
struct Network {
  std::vector<std::string> node_labels;
  std::vector<Link> links;
  std::vector<std::vector<int>> out_links;  // node -> outgoing link ids, sorted by dst

  int node_count() const { return static_cast<int>(node_labels.size()); }
  int link_count() const { return static_cast<int>(links.size()); }
  int find_link(int src, int dst) const;  // -1 if absent
  std::vector<double> capacities_mbps() const;
  std::vector<double> delays_s() const;
};

/// Parses the topology JSON document:
///   {"nodes":[id...],
///    "links":[{"src":id,"dst":id,"capacity_mbps":f,"delay_ms":f,"directed":bool}...]}
/// Links with "directed" false (the default) are expanded to two directed links.
Network load_topology(const std::string& json_text);
Network load_topology_file(const std::string& path);
std::string to_topology_json(const Network& net);

/// Built-in experiment substrate: 25 nodes, 110 directed links (ring plus 30
/// deterministic chords), per-link delays of a few ms. capacity_jitter > 0
/// spreads capacities by a deterministic per-link factor in
/// [1-jitter, 1+jitter]; jittered capacities keep link multipliers unique
/// when many flows ride at their class peaks.
Network make_sample_topology(double capacity_mbps = 5000.0,
                             double capacity_jitter = 0.0);

struct Path {
  int src = -1;
  int dst = -1;
  std::vector<int> links;
  std::vector<int> nodes;  // src .. dst, one more entry than links
  int length() const { return static_cast<int>(links.size()); }
};

/// Up to k loopless paths in nondecreasing (weight, tie_weight) order;
/// exact ties are broken by lexicographic node-index sequence. Unreachable
/// destinations yield an empty list.
std::vector<Path> yen_k_shortest(const Network& net, int src, int dst, int k,
                                 std::span<const double> weight,
                                 std::span<const double> tie_weight = {});

/// Candidate paths for every ordered node pair plus the path-link incidence
/// structures, flattened for kernel consumption. A "segment" is one (path,
/// position) pair; segments of a path are contiguous and in hop order.
struct PathSet {
  int nodes = 0;
  int nlinks = 0;
  int k = 0;
  std::vector<Path> paths;        // grouped by (src,dst), best-first
  std::vector<int> pair_first;    // size nodes*nodes+1, offsets into paths

  std::vector<int> seg_link;      // per segment: link id
  std::vector<int> seg_path;      // per segment: owning path
  std::vector<int> seg_pos;       // per segment: 1-based position s
  std::vector<int> path_seg_first;  // size paths+1

  std::vector<int> link_seg_first;  // size nlinks+1, CSR link -> segments
  std::vector<int> link_seg;
  std::vector<int> link_path_first;  // size nlinks+1, CSR link -> paths
  std::vector<int> link_path;

  int path_count() const { return static_cast<int>(paths.size()); }
  int seg_count() const { return static_cast<int>(seg_link.size()); }

  // [first, first+count) into `paths`
  std::pair<int, int> candidates(int src, int dst) const {
    const int id = src * nodes + dst;
    return {pair_first[id], pair_first[id + 1] - pair_first[id]};
  }
  double path_sum(int path_id, std::span<const double> per_link) const {
    double s = 0.0;
    for (int e : paths[path_id].links) s += per_link[e];
    return s;
  }
};

/// K shortest hop-count paths per ordered node pair (propagation delay as
/// tie-break), with all incidence structures populated.
PathSet build_pathset(const Network& net, int k);

}  // namespace amtm
