#include "fourns/bitree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>

#include "fourns/errors.hpp"

namespace fourns {

bool operator==(const BiTreeNode& a, const BiTreeNode& b) {
  return a.parent == b.parent && a.children == b.children && a.conjugated == b.conjugated && a.tree == b.tree &&
         a.expanded_at == b.expanded_at;
}

bool operator==(const OrderedBiTree& a, const OrderedBiTree& b) {
  return a.nodes_ == b.nodes_ && a.chronicle_ == b.chronicle_;
}

OrderedBiTree OrderedBiTree::first_generation() {
  OrderedBiTree t;
  BiTreeNode r1;
  r1.tree = 1;
  BiTreeNode r2;
  r2.tree = 2;
  r2.conjugated = true;
  t.nodes_ = {r1, r2};
  return t.expand(0);
}

OrderedBiTree OrderedBiTree::expand(int node) const {
  if (node < 0 || node >= static_cast<int>(nodes_.size())) throw ValidationError("expand: node id out of range");
  if (!nodes_[static_cast<std::size_t>(node)].terminal()) throw ValidationError("expand: node is not terminal");
  OrderedBiTree t = *this;
  const int first = static_cast<int>(t.nodes_.size());
  auto& parent = t.nodes_[static_cast<std::size_t>(node)];
  parent.expanded_at = generations() + 1;
  const bool pc = parent.conjugated;
  const int tree = parent.tree;
  for (int k = 0; k < 3; ++k) {
    BiTreeNode c;
    c.parent = node;
    c.conjugated = pc != (k == 1);
    c.tree = tree;
    t.nodes_[static_cast<std::size_t>(node)].children[static_cast<std::size_t>(k)] = first + k;
    t.nodes_.push_back(c);
  }
  t.chronicle_.push_back(node);
  return t;
}

std::vector<int> OrderedBiTree::terminals() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    if (nodes_[static_cast<std::size_t>(i)].terminal()) out.push_back(i);
  }
  return out;
}

std::vector<int> OrderedBiTree::non_terminals() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    if (!nodes_[static_cast<std::size_t>(i)].terminal()) out.push_back(i);
  }
  return out;
}

int OrderedBiTree::generation_sign(int j) const {
  if (j < 1 || j > generations()) throw ValidationError("generation index out of range");
  return node(chronicle_[static_cast<std::size_t>(j - 1)]).conjugated ? -1 : 1;
}

OrderedBiTree OrderedBiTree::prefix(int j) const {
  if (j < 1 || j > generations()) throw ValidationError("prefix: generation out of range");
  OrderedBiTree t;
  const auto keep = static_cast<std::size_t>(3 * j + 2);
  t.nodes_.assign(nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(keep));
  for (auto& n : t.nodes_) {
    if (n.expanded_at > j) {
      n.expanded_at = 0;
      n.children = {-1, -1, -1};
    }
  }
  t.chronicle_.assign(chronicle_.begin(), chronicle_.begin() + j);
  return t;
}

Tree OrderedBiTree::projection(int which) const {
  if (which != 1 && which != 2) throw ValidationError("projection index must be 1 or 2");
  Tree t;
  std::vector<int> local(nodes_.size(), -1);
  std::function<void(int, int)> visit = [&](int id, int parent_local) {
    const int me = static_cast<int>(t.node_ids.size());
    local[static_cast<std::size_t>(id)] = me;
    t.node_ids.push_back(id);
    t.parent.push_back(parent_local);
    t.children.push_back({-1, -1, -1});
    const auto& n = node(id);
    if (n.terminal()) return;
    for (int k = 0; k < 3; ++k) {
      const int child_local = static_cast<int>(t.node_ids.size());
      t.children[static_cast<std::size_t>(me)][static_cast<std::size_t>(k)] = child_local;
      visit(n.children[static_cast<std::size_t>(k)], me);
    }
  };
  visit(which - 1, -1);
  return t;
}

bool Tree::valid() const {
  if (node_ids.empty() || parent.size() != node_ids.size() || children.size() != node_ids.size()) return false;
  if (parent[0] != -1) return false;
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    const auto& c = children[i];
    const int set = static_cast<int>(std::count_if(c.begin(), c.end(), [](int x) { return x >= 0; }));
    if (set != 0 && set != 3) return false;
    for (int x : c) {
      if (x >= 0 && (x >= static_cast<int>(node_ids.size()) || parent[static_cast<std::size_t>(x)] != static_cast<int>(i))) {
        return false;
      }
    }
    if (i > 0 && parent[i] < 0) return false;
  }
  return true;
}

bool OrderedBiTree::valid(std::string* why) const {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  const int J = generations();
  if (J < 1) return fail("no generations");
  if (static_cast<int>(nodes_.size()) != 3 * J + 2) return fail("|T| != 3J+2");
  if (static_cast<int>(non_terminals().size()) != J) return fail("|T^0| != J");
  if (static_cast<int>(terminals().size()) != 2 * J + 2) return fail("|T^inf| != 2J+2");
  if (nodes_[0].terminal()) return fail("r1 must be non-terminal");
  if (nodes_[0].parent != -1 || nodes_[1].parent != -1) return fail("roots must have no parent");
  if (!nodes_[1].conjugated || nodes_[0].conjugated) return fail("root conjugation flags");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (!n.terminal()) {
      for (int k = 0; k < 3; ++k) {
        const int c = n.children[static_cast<std::size_t>(k)];
        if (c < 0 || c >= static_cast<int>(nodes_.size())) return fail("non-terminal without three children");
        const auto& ch = nodes_[static_cast<std::size_t>(c)];
        if (ch.parent != static_cast<int>(i)) return fail("child/parent mismatch");
        if (ch.conjugated != (n.conjugated != (k == 1))) return fail("conjugation parity");
        if (ch.tree != n.tree) return fail("child in the wrong tree");
      }
    } else if (std::any_of(n.children.begin(), n.children.end(), [](int c) { return c >= 0; })) {
      return fail("terminal node with children");
    }
  }
  // Event j converts a node that was terminal in T_{j-1}, i.e. one created earlier.
  for (int j = 1; j <= J; ++j) {
    const int a = chronicle_[static_cast<std::size_t>(j - 1)];
    if (a < 0 || a >= 3 * (j - 1) + 2) return fail("chronicle event names a node absent from T_{j-1}");
    if (nodes_[static_cast<std::size_t>(a)].expanded_at != j) return fail("expansion generation mismatch");
    if (nodes_[static_cast<std::size_t>(a)].children[0] != 3 * (j - 1) + 2) return fail("child numbering");
  }
  if (chronicle_[0] != 0) return fail("first event must expand r1");
  return true;
}

std::uint64_t chronicle_count(int J) {
  if (J < 1) throw ValidationError("generation count must be >= 1");
  std::uint64_t c = 1;
  for (int j = 2; j <= J; ++j) c *= static_cast<std::uint64_t>(2 * j);
  return c;
}

std::vector<OrderedBiTree> enumerate_chronicles(int J, int J_max) {
  if (J < 1) throw ValidationError("enumerate_chronicles requires J >= 1");
  if (J > J_max) {
    throw ValidationError("enumerate_chronicles: J = " + std::to_string(J) + " exceeds J_max = " + std::to_string(J_max));
  }
  std::vector<OrderedBiTree> level{OrderedBiTree::first_generation()};
  for (int j = 2; j <= J; ++j) {
    std::vector<OrderedBiTree> next;
    next.reserve(level.size() * static_cast<std::size_t>(2 * j));
    for (const auto& t : level) {
      for (int term : t.terminals()) next.push_back(t.expand(term));
    }
    level = std::move(next);
  }
  return level;
}

bool is_valid_assignment(const OrderedBiTree& tree, const IndexAssignment& a, int N) {
  if (a.freq.size() != tree.nodes().size()) return false;
  for (int f : a.freq) {
    if (std::abs(f) > N) return false;
  }
  if (a.freq[0] != a.freq[1]) return false;
  for (int id : tree.non_terminals()) {
    const auto& c = tree.node(id).children;
    const int na = a.freq[static_cast<std::size_t>(id)];
    const int n1 = a.freq[static_cast<std::size_t>(c[0])];
    const int n2 = a.freq[static_cast<std::size_t>(c[1])];
    const int n3 = a.freq[static_cast<std::size_t>(c[2])];
    if (na != n1 - n2 + n3) return false;
    if (na == n1 || na == n3 || n2 == n1 || n2 == n3) return false;
  }
  return true;
}

PhaseQuadruple generation_quadruple(const OrderedBiTree& tree, const IndexAssignment& a, int j) {
  const int id = tree.chronicle()[static_cast<std::size_t>(j - 1)];
  const auto& c = tree.node(id).children;
  return PhaseQuadruple{a.freq[static_cast<std::size_t>(c[0])], a.freq[static_cast<std::size_t>(c[1])],
                        a.freq[static_cast<std::size_t>(c[2])], a.freq[static_cast<std::size_t>(id)]};
}

int free_variable_count(const OrderedBiTree& tree) {
  // two nested loops (n_a1, n_a2) per chronicle event
  return 2 * static_cast<int>(tree.chronicle().size());
}

std::vector<IndexAssignment> enumerate_assignments(const OrderedBiTree& tree, int n_root, int N) {
  if (std::abs(n_root) > N) throw ValidationError("enumerate_assignments requires |n_root| <= N");
  std::vector<IndexAssignment> out;
  walk_assignments(
      tree, n_root, N, [](int, std::span<const int>) { return true; },
      [&](std::span<const int> f) { out.push_back(IndexAssignment{{f.begin(), f.end()}}); });
  return out;
}

GenerationPhases generation_phases(const OrderedBiTree& tree, const IndexAssignment& a) {
  GenerationPhases g;
  const int J = tree.generations();
  PhaseInt cum = 0, cum_signed = 0;
  for (int j = 1; j <= J; ++j) {
    const auto q = generation_quadruple(tree, a, j);
    const PhaseInt phi = phase_phi(q);
    const int sign = tree.generation_sign(j);
    cum += phi;
    cum_signed += sign * phi;
    g.phi.push_back(phi);
    g.mu.push_back(phase_mu(q));
    g.phi_tilde.push_back(cum);
    g.sign.push_back(sign);
    g.psi_tilde.push_back(cum_signed);
    g.nmax.push_back(q.max_abs());
  }
  return g;
}

double region_threshold(int J, double c_impl) {
  const double b = 2.0 * J + 4.0;
  return c_impl * b * b * b;
}

bool in_region_Aj(const GenerationPhases& g, int j, int J, double c_impl, PhaseSumMode mode) {
  if (j < 1 || j > J) throw ValidationError("in_region_Aj requires 1 <= j <= J");
  if (j + 1 > g.generations()) throw ValidationError("in_region_Aj needs phases through generation j+1");
  const double next = std::abs(static_cast<double>(g.cumulative(j + 1, mode)));
  const double cur = std::abs(static_cast<double>(g.cumulative(j, mode)));
  const double first = std::abs(static_cast<double>(g.phi[0]));
  const double thr = region_threshold(J, c_impl);
  return next <= thr * cur || next <= thr * first;
}

nlohmann::json audit_json(const OrderedBiTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const auto& n = tree.nodes()[i];
    nlohmann::json rec{{"id", i},
                       {"parent", n.parent},
                       {"tree", n.tree},
                       {"conjugated", n.conjugated},
                       {"terminal", n.terminal()},
                       {"expanded_at", n.expanded_at}};
    if (!n.terminal()) rec["children"] = n.children;
    nodes.push_back(rec);
  }
  return {{"generations", tree.generations()},
          {"events", std::vector<int>(tree.chronicle().begin(), tree.chronicle().end())},
          {"nodes", nodes}};
}

}  // namespace fourns
