#include "amtm/topology.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "json.hpp"

namespace amtm {

namespace {

using nlohmann::json;

std::string id_to_label(const json& id) {
  if (id.is_string()) return id.get<std::string>();
  if (id.is_number_integer()) return std::to_string(id.get<std::int64_t>());
  throw TopologyError("node id must be a string or an integer");
}

}  // namespace

int Network::find_link(int src, int dst) const {
  for (int e : out_links[src])
    if (links[e].dst == dst) return e;
  return -1;
}

std::vector<double> Network::capacities_mbps() const {
  std::vector<double> c(links.size());
  for (size_t i = 0; i < links.size(); ++i) c[i] = links[i].capacity_mbps;
  return c;
}

std::vector<double> Network::delays_s() const {
  std::vector<double> d(links.size());
  for (size_t i = 0; i < links.size(); ++i) d[i] = links[i].delay_s;
  return d;
}

Network load_topology(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const std::exception& e) {
    throw TopologyError(std::string("topology parse failure: ") + e.what());
  }
  if (!doc.contains("nodes") || !doc.contains("links"))
    throw TopologyError("topology document needs 'nodes' and 'links'");

  // Canonical node order: all-numeric ids sort numerically, otherwise ids
  // are treated as strings and sort lexicographically.
  bool all_numeric = true;
  for (const auto& id : doc["nodes"])
    if (!id.is_number_integer()) all_numeric = false;

  std::vector<std::string> labels;
  if (all_numeric) {
    std::vector<std::int64_t> ids = doc["nodes"].get<std::vector<std::int64_t>>();
    std::sort(ids.begin(), ids.end());
    for (auto v : ids) labels.push_back(std::to_string(v));
  } else {
    for (const auto& id : doc["nodes"]) labels.push_back(id_to_label(id));
    std::sort(labels.begin(), labels.end());
  }
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
    throw TopologyError("duplicate node id");

  std::map<std::string, int> index;
  for (size_t i = 0; i < labels.size(); ++i) index[labels[i]] = static_cast<int>(i);

  Network net;
  net.node_labels = std::move(labels);
  net.out_links.resize(net.node_labels.size());

  std::set<std::pair<int, int>> seen;
  auto add_link = [&](int s, int d, double cap, double delay_ms, const std::string& where) {
    if (cap <= 0.0)
      throw TopologyError(where + ": nonpositive capacity");
    if (delay_ms < 0.0)
      throw TopologyError(where + ": negative delay");
    if (s == d)
      throw TopologyError(where + ": self loop");
    if (!seen.insert({s, d}).second)
      throw TopologyError(where + ": duplicate directed link " +
                          net.node_labels[s] + "->" + net.node_labels[d]);
    net.links.push_back(Link{s, d, cap, delay_ms * 1e-3});
  };

  int i = 0;
  for (const auto& l : doc["links"]) {
    const std::string where = "links[" + std::to_string(i++) + "]";
    const std::string src_label = id_to_label(l.at("src"));
    const std::string dst_label = id_to_label(l.at("dst"));
    auto si = index.find(src_label);
    auto di = index.find(dst_label);
    if (si == index.end()) throw TopologyError(where + ": unknown node '" + src_label + "'");
    if (di == index.end()) throw TopologyError(where + ": unknown node '" + dst_label + "'");
    const double cap = l.at("capacity_mbps").get<double>();
    const double delay = l.value("delay_ms", 0.0);
    const bool directed = l.value("directed", false);
    add_link(si->second, di->second, cap, delay, where);
    if (!directed) add_link(di->second, si->second, cap, delay, where);
  }

  for (size_t e = 0; e < net.links.size(); ++e)
    net.out_links[net.links[e].src].push_back(static_cast<int>(e));
  for (auto& adj : net.out_links)
    std::sort(adj.begin(), adj.end(),
              [&](int a, int b) { return net.links[a].dst < net.links[b].dst; });
  return net;
}

Network load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot open topology file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_topology(ss.str());
}

std::string to_topology_json(const Network& net) {
  // Numeric labels round-trip as numbers so the canonical order survives.
  bool numeric = true;
  for (const auto& n : net.node_labels)
    if (n.find_first_not_of("0123456789-") != std::string::npos) numeric = false;
  auto id_of = [&](int node) -> json {
    if (numeric) return std::stoll(net.node_labels[node]);
    return net.node_labels[node];
  };
  json doc;
  doc["nodes"] = json::array();
  for (int i = 0; i < net.node_count(); ++i) doc["nodes"].push_back(id_of(i));
  doc["links"] = json::array();
  for (const auto& l : net.links) {
    doc["links"].push_back({{"src", id_of(l.src)},
                            {"dst", id_of(l.dst)},
                            {"capacity_mbps", l.capacity_mbps},
                            {"delay_ms", l.delay_s * 1e3},
                            {"directed", true}});
  }
  return doc.dump(2);
}

Network make_sample_topology(double capacity_mbps, double capacity_jitter) {
  const int n = 25;
  json doc;
  doc["nodes"] = json::array();
  for (int i = 0; i < n; ++i) doc["nodes"].push_back(i);

  std::set<std::pair<int, int>> edges;
  auto add = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    if (a == b) return false;
    return edges.insert({a, b}).second;
  };
  for (int i = 0; i < n; ++i) add(i, (i + 1) % n);

  // 30 chords from a fixed xorshift stream; 55 undirected edges total.
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  auto next = [&]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  };
  int chords = 0;
  while (chords < 30) {
    int a = static_cast<int>(next() % n);
    int b = static_cast<int>(next() % n);
    if (add(a, b)) ++chords;
  }

  doc["links"] = json::array();
  for (auto [a, b] : edges) {
    const double delay_ms = 1.0 + static_cast<double>((7 * a + 13 * b) % 9);
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    const double cap = capacity_mbps * (1.0 + capacity_jitter * (2.0 * u - 1.0));
    doc["links"].push_back({{"src", a},
                            {"dst", b},
                            {"capacity_mbps", cap},
                            {"delay_ms", delay_ms},
                            {"directed", false}});
  }
  return load_topology(doc.dump());
}

namespace {

// Additive path cost with a secondary component and a final lexicographic
// node-sequence tie-break; a total order over simple paths.
struct PathLabel {
  double w = std::numeric_limits<double>::infinity();
  double tie = 0.0;
  std::vector<int> seq;

  bool reached() const { return !seq.empty(); }
};

bool label_less(const PathLabel& a, const PathLabel& b) {
  if (a.w != b.w) return a.w < b.w;
  if (a.tie != b.tie) return a.tie < b.tie;
  return std::lexicographical_compare(a.seq.begin(), a.seq.end(),
                                      b.seq.begin(), b.seq.end());
}

// Shortest path under (w, tie, node sequence) with banned nodes/links.
// Label-setting on (w, tie); sequence improvements at exactly equal cost are
// propagated by reinsertion.
PathLabel restricted_shortest(const Network& net, int src, int dst,
                              std::span<const double> weight,
                              std::span<const double> tie_weight,
                              const std::vector<char>& node_banned,
                              const std::vector<char>& link_banned) {
  const int n = net.node_count();
  std::vector<PathLabel> best(n);
  best[src] = PathLabel{0.0, 0.0, {src}};

  using QEntry = std::pair<std::pair<double, double>, int>;
  auto cmp = [](const QEntry& a, const QEntry& b) { return a.first > b.first; };
  std::priority_queue<QEntry, std::vector<QEntry>, decltype(cmp)> pq(cmp);
  pq.push({{0.0, 0.0}, src});

  while (!pq.empty()) {
    auto [key, u] = pq.top();
    pq.pop();
    if (!best[u].reached()) continue;
    if (key.first > best[u].w ||
        (key.first == best[u].w && key.second > best[u].tie))
      continue;
    for (int e : net.out_links[u]) {
      if (link_banned[e]) continue;
      const int v = net.links[e].dst;
      if (node_banned[v]) continue;
      PathLabel cand;
      cand.w = best[u].w + weight[e];
      cand.tie = best[u].tie + (tie_weight.empty() ? 0.0 : tie_weight[e]);
      cand.seq = best[u].seq;
      cand.seq.push_back(v);
      if (!best[v].reached() || label_less(cand, best[v])) {
        best[v] = std::move(cand);
        pq.push({{best[v].w, best[v].tie}, v});
      }
    }
  }
  return best[dst];
}

Path label_to_path(const Network& net, const PathLabel& lab) {
  Path p;
  p.nodes = lab.seq;
  p.src = lab.seq.front();
  p.dst = lab.seq.back();
  for (size_t i = 0; i + 1 < lab.seq.size(); ++i) {
    const int e = net.find_link(lab.seq[i], lab.seq[i + 1]);
    p.links.push_back(e);
  }
  return p;
}

}  // namespace

std::vector<Path> yen_k_shortest(const Network& net, int src, int dst, int k,
                                 std::span<const double> weight,
                                 std::span<const double> tie_weight) {
  if (src == dst) throw std::invalid_argument("yen_k_shortest: src == dst");
  if (k < 1) throw std::invalid_argument("yen_k_shortest: k < 1");
  for (double w : weight)
    if (w < 0.0) throw std::invalid_argument("yen_k_shortest: negative weight");

  const int n = net.node_count();
  const int m = net.link_count();
  std::vector<char> no_node(n, 0), no_link(m, 0);

  auto cost_of = [&](const std::vector<int>& node_seq) {
    PathLabel lab;
    lab.w = 0.0;
    lab.tie = 0.0;
    lab.seq = node_seq;
    for (size_t i = 0; i + 1 < node_seq.size(); ++i) {
      const int e = net.find_link(node_seq[i], node_seq[i + 1]);
      lab.w += weight[e];
      if (!tie_weight.empty()) lab.tie += tie_weight[e];
    }
    return lab;
  };

  PathLabel first = restricted_shortest(net, src, dst, weight, tie_weight, no_node, no_link);
  if (!first.reached()) return {};

  std::vector<PathLabel> accepted{first};
  auto cand_less = [](const PathLabel& a, const PathLabel& b) { return label_less(a, b); };
  std::set<PathLabel, decltype(cand_less)> candidates(cand_less);

  while (static_cast<int>(accepted.size()) < k) {
    const std::vector<int>& prev = accepted.back().seq;
    for (size_t i = 0; i + 1 < prev.size(); ++i) {
      std::fill(no_node.begin(), no_node.end(), 0);
      std::fill(no_link.begin(), no_link.end(), 0);
      // Ban the next edge of every accepted path sharing this root.
      for (const auto& a : accepted) {
        if (a.seq.size() > i + 1 &&
            std::equal(prev.begin(), prev.begin() + i + 1, a.seq.begin())) {
          const int e = net.find_link(a.seq[i], a.seq[i + 1]);
          if (e >= 0) no_link[e] = 1;
        }
      }
      for (size_t j = 0; j < i; ++j) no_node[prev[j]] = 1;

      PathLabel spur = restricted_shortest(net, prev[i], dst, weight, tie_weight,
                                           no_node, no_link);
      if (!spur.reached()) continue;
      std::vector<int> total(prev.begin(), prev.begin() + i);
      total.insert(total.end(), spur.seq.begin(), spur.seq.end());
      candidates.insert(cost_of(total));
    }
    if (candidates.empty()) break;
    auto it = candidates.begin();
    // Already-accepted sequences can reappear through different spur roots.
    bool duplicate = false;
    for (const auto& a : accepted)
      if (a.seq == it->seq) duplicate = true;
    if (!duplicate) accepted.push_back(*it);
    candidates.erase(it);
  }

  std::vector<Path> out;
  out.reserve(accepted.size());
  for (const auto& lab : accepted) out.push_back(label_to_path(net, lab));
  return out;
}

PathSet build_pathset(const Network& net, int k) {
  const int n = net.node_count();
  const int m = net.link_count();
  PathSet ps;
  ps.nodes = n;
  ps.nlinks = m;
  ps.k = k;
  ps.pair_first.assign(n * n + 1, 0);

  const std::vector<double> hop(m, 1.0);
  const std::vector<double> delay = net.delays_s();

  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < n; ++d) {
      ps.pair_first[s * n + d] = ps.path_count();
      if (s == d) continue;
      for (auto& p : yen_k_shortest(net, s, d, k, hop, delay))
        ps.paths.push_back(std::move(p));
    }
  }
  ps.pair_first[n * n] = ps.path_count();

  ps.path_seg_first.assign(ps.path_count() + 1, 0);
  for (int p = 0; p < ps.path_count(); ++p) {
    ps.path_seg_first[p + 1] = ps.path_seg_first[p] + ps.paths[p].length();
    for (int s = 1; s <= ps.paths[p].length(); ++s) {
      ps.seg_link.push_back(ps.paths[p].links[s - 1]);
      ps.seg_path.push_back(p);
      ps.seg_pos.push_back(s);
    }
  }

  // CSR link -> segments, then link -> paths in the same traversal order.
  ps.link_seg_first.assign(m + 1, 0);
  for (int e : ps.seg_link) ++ps.link_seg_first[e + 1];
  for (int e = 0; e < m; ++e) ps.link_seg_first[e + 1] += ps.link_seg_first[e];
  ps.link_seg.resize(ps.seg_count());
  {
    std::vector<int> fill(ps.link_seg_first.begin(), ps.link_seg_first.end() - 1);
    for (int seg = 0; seg < ps.seg_count(); ++seg)
      ps.link_seg[fill[ps.seg_link[seg]]++] = seg;
  }
  ps.link_path_first.assign(m + 1, 0);
  ps.link_path.clear();
  for (int e = 0; e < m; ++e) {
    ps.link_path_first[e] = static_cast<int>(ps.link_path.size());
    // Paths are simple, so each path appears at most once per link.
    for (int i = ps.link_seg_first[e]; i < ps.link_seg_first[e + 1]; ++i)
      ps.link_path.push_back(ps.seg_path[ps.link_seg[i]]);
  }
  ps.link_path_first[m] = static_cast<int>(ps.link_path.size());
  return ps;
}

}  // namespace amtm
