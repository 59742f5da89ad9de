#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace must {

using PairId = int32_t;

struct Pair {
  int32_t state = -1;
  int32_t object = -1;
  bool operator==(const Pair&) const = default;
};

// Reference to one component class, tagged with which side it is.
struct ComponentRef {
  enum class Kind { state, object };
  Kind kind;
  int32_t id;

  static ComponentRef state(int32_t id) { return {Kind::state, id}; }
  static ComponentRef object(int32_t id) { return {Kind::object, id}; }
};

// The compositional label universe: state/object classes, the closed pair
// set, its seen/unseen partition, and the two dependency masks queried by
// the losses and the inference rules. Immutable after construction.
class CompositionSpace {
 public:
  static CompositionSpace build(std::vector<std::string> states, std::vector<std::string> objects,
                                const std::vector<Pair>& seen, const std::vector<Pair>& unseen);

  int32_t n_states() const { return static_cast<int32_t>(states_.size()); }
  int32_t n_objects() const { return static_cast<int32_t>(objects_.size()); }
  size_t n_pairs() const { return pairs_.size(); }

  const std::vector<std::string>& state_names() const { return states_; }
  const std::vector<std::string>& object_names() const { return objects_; }
  const std::vector<Pair>& pairs() const { return pairs_; }
  const std::vector<PairId>& seen_ids() const { return seen_ids_; }
  const std::vector<PairId>& unseen_ids() const { return unseen_ids_; }

  Pair pair(PairId id) const;
  // Dense id for (s, o), or -1 when the pair is outside the closed world.
  PairId pair_id(int32_t s, int32_t o) const;

  // Seen-pair dependency mask, 1 iff (s, o) is a seen training pair.
  int psi(int32_t s, int32_t o) const;
  // Component-membership mask, 1 iff the component is part of the pair.
  int psi_hat(ComponentRef a, Pair y) const;

  bool is_seen(PairId id) const;
  bool is_unseen(PairId id) const { return !is_seen(id); }

  int32_t state_index(const std::string& name) const;   // -1 when unknown
  int32_t object_index(const std::string& name) const;  // -1 when unknown

  void check_state(int32_t s) const;
  void check_object(int32_t o) const;
  void check_pair_id(PairId id) const;

  // Canonical text form covering names, pairs and the split; equal spaces
  // serialize identically, which is what checkpoint compat checks rely on.
  std::string canonical_serialization() const;

 private:
  std::vector<std::string> states_;
  std::vector<std::string> objects_;
  std::vector<Pair> pairs_;
  std::vector<PairId> seen_ids_;
  std::vector<PairId> unseen_ids_;
  std::vector<uint8_t> psi_mask_;      // |S| * |O|, 1 iff seen
  std::vector<uint8_t> seen_by_id_;    // per pair id
  std::vector<PairId> pair_index_;     // |S| * |O| -> pair id or -1
  size_t grid(int32_t s, int32_t o) const { return static_cast<size_t>(s) * objects_.size() + o; }
};

}  // namespace must
