#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coinflip/rational.hpp"

namespace coinflip {

enum class Party : std::uint8_t { A = 0, B = 1 };

inline Party other(Party p) { return p == Party::A ? Party::B : Party::A; }
inline char party_char(Party p) { return p == Party::A ? 'A' : 'B'; }

// A node is addressed by its transcript: a string over {'0','1'}; "" is the root.
using NodeId = std::string;

inline bool is_prefix(const NodeId& p, const NodeId& u) {
  return p.size() <= u.size() && std::equal(p.begin(), p.end(), u.begin());
}

// Full binary tree with per-node controller, edge pair and leaf output.
// Leaves may sit at different depths; depth() is the longest transcript.
// Nodes are stored in preorder, so every child has a larger index than its parent.
class ProtocolTree {
 public:
  struct Node {
    NodeId id;
    int parent = -1;
    std::array<int, 2> child{-1, -1};
    Party ctrl = Party::A;
    std::array<Rational, 2> edge;
    int out = 0;

    bool leaf() const { return child[0] < 0; }
    int depth() const { return static_cast<int>(id.size()); }
  };

  ProtocolTree() = default;

  static ProtocolTree bottom() {
    ProtocolTree t;
    t.bottom_ = true;
    return t;
  }

  // The undefined protocol with this tree's shape kept, so leaf measures stay aligned.
  ProtocolTree as_bottom() const {
    ProtocolTree t = *this;
    t.bottom_ = true;
    return t;
  }

  bool is_bottom() const { return bottom_; }
  bool empty() const { return nodes_.empty(); }
  int size() const { return static_cast<int>(nodes_.size()); }
  int depth() const { return depth_; }
  static constexpr int root() { return 0; }

  const Node& operator[](int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& leaves() const { return leaves_; }
  const std::vector<int>& internals() const { return internals_; }

  int find(const NodeId& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
  }

  int index(const NodeId& id) const {
    int i = find(id);
    if (i < 0) throw std::out_of_range("no node '" + id + "' in tree");
    return i;
  }

  bool is_leaf(int i) const { return (*this)[i].leaf(); }
  const NodeId& id(int i) const { return (*this)[i].id; }

  // Shape-preserving edits, used while deriving trees.
  void set_edges(int u, Rational e0, Rational e1) {
    auto& n = nodes_[static_cast<std::size_t>(u)];
    n.edge[0] = std::move(e0);
    n.edge[1] = std::move(e1);
  }
  void set_ctrl(int u, Party p) { nodes_[static_cast<std::size_t>(u)].ctrl = p; }
  void set_out(int u, int out) { nodes_[static_cast<std::size_t>(u)].out = out; }

  bool same_shape(const ProtocolTree& o) const {
    if (size() != o.size()) return false;
    for (int i = 0; i < size(); ++i)
      if ((*this)[i].id != o[i].id) return false;
    return true;
  }

  // Exact equality of shape, controls, edges and outputs (⊥ equals only ⊥).
  bool operator==(const ProtocolTree& o) const {
    if (bottom_ || o.bottom_) return bottom_ == o.bottom_;
    if (!same_shape(o)) return false;
    for (int i = 0; i < size(); ++i) {
      const Node &a = (*this)[i], &b = o[i];
      if (a.leaf()) {
        if (a.out != b.out) return false;
      } else if (a.ctrl != b.ctrl || a.edge[0] != b.edge[0] || a.edge[1] != b.edge[1]) {
        return false;
      }
    }
    return true;
  }

 private:
  friend class TreeBuilder;

  void finish() {
    index_.clear();
    leaves_.clear();
    internals_.clear();
    depth_ = 0;
    for (int i = 0; i < size(); ++i) {
      index_[nodes_[static_cast<std::size_t>(i)].id] = i;
      if (nodes_[static_cast<std::size_t>(i)].leaf()) {
        leaves_.push_back(i);
        depth_ = std::max(depth_, nodes_[static_cast<std::size_t>(i)].depth());
      } else {
        internals_.push_back(i);
      }
    }
  }

  std::vector<Node> nodes_;
  std::unordered_map<NodeId, int> index_;
  std::vector<int> leaves_;
  std::vector<int> internals_;
  int depth_ = 0;
  bool bottom_ = false;
};

class TreeBuilder {
 public:
  TreeBuilder& internal(const NodeId& id, Party ctrl, const Rational& p0) {
    return internal(id, ctrl, p0, Rational(1 - p0));
  }

  TreeBuilder& internal(const NodeId& id, Party ctrl, const Rational& e0, const Rational& e1) {
    check_id(id);
    Entry& e = entries_[id];
    e.internal = true;
    e.ctrl = ctrl;
    e.edge = {e0, e1};
    return *this;
  }

  TreeBuilder& leaf(const NodeId& id, int out) {
    check_id(id);
    if (out != 0 && out != 1) throw std::invalid_argument("leaf output must be 0 or 1 at '" + id + "'");
    Entry& e = entries_[id];
    e.internal = false;
    e.out = out;
    return *this;
  }

  ProtocolTree build() const {
    if (!entries_.count("")) throw std::invalid_argument("tree has no root");
    ProtocolTree t;
    std::unordered_map<NodeId, int> pos;
    for (const auto& [id, e] : entries_) {  // std::map order on {0,1}-strings is preorder
      ProtocolTree::Node n;
      n.id = id;
      if (!id.empty()) {
        auto it = pos.find(id.substr(0, id.size() - 1));
        if (it == pos.end() || !entries_.at(id.substr(0, id.size() - 1)).internal)
          throw std::invalid_argument("node '" + id + "' has no internal parent");
        n.parent = it->second;
      }
      if (e.internal) {
        n.ctrl = e.ctrl;
        n.edge = e.edge;
      } else {
        n.out = e.out;
      }
      int idx = static_cast<int>(t.nodes_.size());
      pos[id] = idx;
      if (n.parent >= 0) t.nodes_[static_cast<std::size_t>(n.parent)].child[id.back() - '0'] = idx;
      t.nodes_.push_back(std::move(n));
    }
    for (const auto& [id, e] : entries_) {
      const auto& n = t.nodes_[static_cast<std::size_t>(pos[id])];
      if (e.internal && (n.child[0] < 0 || n.child[1] < 0))
        throw std::invalid_argument("internal node '" + id + "' is missing a child");
      if (!e.internal && (n.child[0] >= 0 || n.child[1] >= 0))
        throw std::invalid_argument("leaf '" + id + "' has children");
    }
    t.finish();
    return t;
  }

 private:
  struct Entry {
    bool internal = false;
    Party ctrl = Party::A;
    std::array<Rational, 2> edge;
    int out = 0;
  };

  static void check_id(const NodeId& id) {
    for (char c : id)
      if (c != '0' && c != '1') throw std::invalid_argument("bad node id '" + id + "'");
  }

  std::map<NodeId, Entry> entries_;
};

// Complete tree of depth m; callbacks receive the node id.
inline ProtocolTree complete_tree(int m, const std::function<Party(const NodeId&)>& ctrl,
                                  const std::function<Rational(const NodeId&)>& p0,
                                  const std::function<int(const NodeId&)>& out) {
  TreeBuilder b;
  std::function<void(const NodeId&)> rec = [&](const NodeId& u) {
    if (static_cast<int>(u.size()) == m) {
      b.leaf(u, out(u));
      return;
    }
    b.internal(u, ctrl(u), p0(u));
    rec(u + "0");
    rec(u + "1");
  };
  rec("");
  return b.build();
}

struct Violation {
  NodeId node;
  std::string rule;
};

inline std::vector<Violation> validate(const ProtocolTree& t) {
  std::vector<Violation> out;
  if (t.is_bottom()) return out;
  std::vector<Rational> visit(static_cast<std::size_t>(t.size()));
  visit[0] = 1;
  for (int i = 0; i < t.size(); ++i) {
    const auto& n = t[i];
    if (n.leaf()) {
      if (n.out != 0 && n.out != 1) out.push_back({n.id, "leaf output must be 0 or 1"});
      continue;
    }
    const Rational& v = visit[static_cast<std::size_t>(i)];
    if (v != 0) {
      for (int b = 0; b < 2; ++b) {
        if (n.edge[b] < 0 || n.edge[b] > 1) {
          out.push_back({n.id, "edge to child " + std::to_string(b) + " outside [0,1]"});
        }
      }
      if (n.edge[0] + n.edge[1] != 1) out.push_back({n.id, "edges do not sum to 1"});
    }
    for (int b = 0; b < 2; ++b)
      visit[static_cast<std::size_t>(n.child[b])] = v == 0 ? Rational(0) : Rational(v * n.edge[b]);
  }
  return out;
}

}  // namespace coinflip
