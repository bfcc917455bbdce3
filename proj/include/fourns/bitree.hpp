#pragma once

// Ordered bi-trees, their chronicles, index functions and the per-generation
// phase bookkeeping used by the normal form expansion.
//
// Node ids follow creation order: 0 = r1, 1 = r2, and expanding a node at
// generation j appends its three children. The prefix of the first 3j+2 ids
// is therefore the generation-j tree of the chronicle.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fourns/spectral.hpp"

namespace fourns {

inline constexpr int kDefaultMaxGenerations = 5;

struct BiTreeNode {
  int parent = -1;
  std::array<int, 3> children{-1, -1, -1};
  /// Carries conj(v): r2 is conjugated, and the flag flips at every second child.
  bool conjugated = false;
  int tree = 1;  ///< 1 or 2 (which root it hangs from)
  int expanded_at = 0;  ///< generation at which the node became non-terminal, 0 if terminal

  bool terminal() const { return children[0] < 0; }
};

/// A rooted tree with ordered ternary branching (one half of a bi-tree).
struct Tree {
  std::vector<int> node_ids;  ///< ids in the parent bi-tree, root first
  std::vector<int> parent;    ///< local index of the parent, -1 for the root
  std::vector<std::array<int, 3>> children;  ///< local indices, -1 for terminal

  bool valid() const;
};

class OrderedBiTree {
 public:
  /// The unique first-generation bi-tree: r1 with three children, r2 terminal.
  static OrderedBiTree first_generation();

  /// Turns a terminal node into a non-terminal one (next chronicle event).
  OrderedBiTree expand(int node) const;

  int generations() const { return static_cast<int>(chronicle_.size()); }
  std::span<const BiTreeNode> nodes() const { return nodes_; }
  const BiTreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  /// chronicle()[j-1] is the node expanded at generation j.
  std::span<const int> chronicle() const { return chronicle_; }

  std::vector<int> terminals() const;
  std::vector<int> non_terminals() const;

  /// Sign of the oscillation introduced at generation j: -1 when the node
  /// expanded there carries a complex conjugate.
  int generation_sign(int j) const;

  /// pi_j: the generation-j member of the chronicle.
  OrderedBiTree prefix(int j) const;
  /// Pi_1 / Pi_2.
  Tree projection(int which) const;

  /// Checks node counts, ternary branching and chronicle consistency.
  bool valid(std::string* why = nullptr) const;

  friend bool operator==(const OrderedBiTree&, const OrderedBiTree&);

 private:
  std::vector<BiTreeNode> nodes_;
  std::vector<int> chronicle_;
};

bool operator==(const BiTreeNode&, const BiTreeNode&);

/// |BT(J)| = 2^(J-1) J!.
std::uint64_t chronicle_count(int J);

/// All ordered bi-trees of generation J, lexicographic in the sequence of
/// expanded terminal positions (terminals numbered by node id).
std::vector<OrderedBiTree> enumerate_chronicles(int J, int J_max = kDefaultMaxGenerations);

struct IndexAssignment {
  std::vector<int> freq;  ///< one frequency per node id
  friend bool operator==(const IndexAssignment&, const IndexAssignment&) = default;
  friend auto operator<=>(const IndexAssignment&, const IndexAssignment&) = default;
};

/// Conditions (a)-(c) of an index function plus |n_a| <= N for every node.
bool is_valid_assignment(const OrderedBiTree& tree, const IndexAssignment& a, int N);

/// The frequencies introduced at generation j: (n_a, n_a1, n_a2, n_a3).
PhaseQuadruple generation_quadruple(const OrderedBiTree& tree, const IndexAssignment& a, int j);

/// Number of free integer loops the assignment enumeration uses (2J).
int free_variable_count(const OrderedBiTree& tree);

/// Depth-first enumeration of index functions with n_r = n_root and every
/// frequency in [-N, N]. Each generation chooses (n_a1, n_a2) and solves for
/// n_a3. `enter(j, freq)` runs after generation j is assigned; returning
/// false prunes the subtree. `leaf(freq)` sees complete assignments.
template <class Enter, class Leaf>
void walk_assignments(const OrderedBiTree& tree, int n_root, int N, Enter&& enter, Leaf&& leaf) {
  std::vector<int> freq(tree.nodes().size(), 0);
  freq[0] = freq[1] = n_root;
  const auto events = tree.chronicle();
  const int J = static_cast<int>(events.size());
  auto rec = [&](auto& self, int j) -> void {
    if (j == J) {
      leaf(std::span<const int>(freq));
      return;
    }
    const auto& a = tree.node(events[static_cast<std::size_t>(j)]);
    const int na = freq[static_cast<std::size_t>(events[static_cast<std::size_t>(j)])];
    const auto c = a.children;
    for (int n1 = -N; n1 <= N; ++n1) {
      if (n1 == na) continue;
      for (int n2 = -N; n2 <= N; ++n2) {
        const int n3 = na - n1 + n2;
        if (n3 < -N || n3 > N || n3 == na) continue;
        freq[static_cast<std::size_t>(c[0])] = n1;
        freq[static_cast<std::size_t>(c[1])] = n2;
        freq[static_cast<std::size_t>(c[2])] = n3;
        if (enter(j + 1, std::span<const int>(freq))) self(self, j + 1);
      }
    }
  };
  if (std::abs(n_root) > N) return;
  rec(rec, 0);
}

std::vector<IndexAssignment> enumerate_assignments(const OrderedBiTree& tree, int n_root, int N);

enum class PhaseSumMode { signed_sum, unsigned_sum };

struct GenerationPhases {
  std::vector<PhaseInt> phi;        ///< phi_j
  std::vector<PhaseInt> mu;         ///< mu_j
  std::vector<PhaseInt> phi_tilde;  ///< sum_{k<=j} phi_k
  std::vector<int> sign;            ///< +1 / -1 (conjugated expansion)
  std::vector<PhaseInt> psi_tilde;  ///< sum_{k<=j} sign_k phi_k, the true oscillation frequency
  std::vector<int> nmax;            ///< max |frequency| among generation-j quadruple

  int generations() const { return static_cast<int>(phi.size()); }
  /// Cumulative phase used by region tests (1-based j).
  PhaseInt cumulative(int j, PhaseSumMode mode) const {
    const auto k = static_cast<std::size_t>(j - 1);
    return mode == PhaseSumMode::signed_sum ? psi_tilde[k] : phi_tilde[k];
  }
};

GenerationPhases generation_phases(const OrderedBiTree& tree, const IndexAssignment& a);

/// Region threshold c_impl (2J+4)^3.
double region_threshold(int J, double c_impl);

/// A_j: |tphi_{j+1}| <= c (2J+4)^3 |tphi_j|  or  |tphi_{j+1}| <= c (2J+4)^3 |phi_1|.
bool in_region_Aj(const GenerationPhases& g, int j, int J, double c_impl = 1.0,
                  PhaseSumMode mode = PhaseSumMode::signed_sum);

/// JSON audit record: node list (parent, children, conjugation, tree,
/// expansion generation) and the chronicle events.
nlohmann::json audit_json(const OrderedBiTree& tree);

}  // namespace fourns
