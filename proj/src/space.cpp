#include "space.hpp"

#include <unordered_set>

#include "errors.hpp"

namespace must {

namespace {

void check_unique_names(const std::vector<std::string>& names, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) fail(Errc::config, std::string("empty ") + what + " name");
    if (!seen.insert(n).second) fail(Errc::config, std::string("duplicate ") + what + " name '" + n + "'");
  }
}

}  // namespace

CompositionSpace CompositionSpace::build(std::vector<std::string> states,
                                         std::vector<std::string> objects,
                                         const std::vector<Pair>& seen,
                                         const std::vector<Pair>& unseen) {
  check_unique_names(states, "state");
  check_unique_names(objects, "object");

  CompositionSpace sp;
  sp.states_ = std::move(states);
  sp.objects_ = std::move(objects);
  const size_t ns = sp.states_.size();
  const size_t no = sp.objects_.size();
  if (ns == 0 || no == 0) fail(Errc::config, "space needs at least one state and one object");

  sp.pair_index_.assign(ns * no, -1);
  sp.psi_mask_.assign(ns * no, 0);

  auto add_pair = [&](const Pair& p, bool is_seen) {
    if (p.state < 0 || p.state >= static_cast<int32_t>(ns)) {
      fail(Errc::unknown_component, "pair references state index " + std::to_string(p.state));
    }
    if (p.object < 0 || p.object >= static_cast<int32_t>(no)) {
      fail(Errc::unknown_component, "pair references object index " + std::to_string(p.object));
    }
    size_t g = sp.grid(p.state, p.object);
    if (sp.pair_index_[g] >= 0) {
      if (static_cast<bool>(sp.seen_by_id_[sp.pair_index_[g]]) != is_seen) {
        fail(Errc::split_overlap, "pair (" + sp.states_[p.state] + ", " + sp.objects_[p.object] +
                                      ") listed as both seen and unseen");
      }
      fail(Errc::duplicate_pair,
           "pair (" + sp.states_[p.state] + ", " + sp.objects_[p.object] + ") listed twice");
    }
    PairId id = static_cast<PairId>(sp.pairs_.size());
    sp.pair_index_[g] = id;
    sp.pairs_.push_back(p);
    sp.seen_by_id_.push_back(is_seen ? 1 : 0);
    if (is_seen) {
      sp.psi_mask_[g] = 1;
      sp.seen_ids_.push_back(id);
    } else {
      sp.unseen_ids_.push_back(id);
    }
  };

  // Dense ids are assigned in declaration order, seen pairs first.
  for (const auto& p : seen) add_pair(p, true);
  for (const auto& p : unseen) add_pair(p, false);
  return sp;
}

Pair CompositionSpace::pair(PairId id) const {
  check_pair_id(id);
  return pairs_[id];
}

PairId CompositionSpace::pair_id(int32_t s, int32_t o) const {
  check_state(s);
  check_object(o);
  return pair_index_[grid(s, o)];
}

int CompositionSpace::psi(int32_t s, int32_t o) const {
  check_state(s);
  check_object(o);
  return psi_mask_[grid(s, o)];
}

int CompositionSpace::psi_hat(ComponentRef a, Pair y) const {
  check_state(y.state);
  check_object(y.object);
  if (a.kind == ComponentRef::Kind::state) {
    check_state(a.id);
    return a.id == y.state ? 1 : 0;
  }
  check_object(a.id);
  return a.id == y.object ? 1 : 0;
}

bool CompositionSpace::is_seen(PairId id) const {
  check_pair_id(id);
  return seen_by_id_[id] != 0;
}

int32_t CompositionSpace::state_index(const std::string& name) const {
  for (size_t i = 0; i < states_.size(); ++i) {
    if (states_[i] == name) return static_cast<int32_t>(i);
  }
  return -1;
}

int32_t CompositionSpace::object_index(const std::string& name) const {
  for (size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i] == name) return static_cast<int32_t>(i);
  }
  return -1;
}

void CompositionSpace::check_state(int32_t s) const {
  if (s < 0 || s >= n_states()) {
    fail(Errc::unknown_component, "state index " + std::to_string(s) + " out of range");
  }
}

void CompositionSpace::check_object(int32_t o) const {
  if (o < 0 || o >= n_objects()) {
    fail(Errc::unknown_component, "object index " + std::to_string(o) + " out of range");
  }
}

void CompositionSpace::check_pair_id(PairId id) const {
  if (id < 0 || static_cast<size_t>(id) >= pairs_.size()) {
    fail(Errc::unknown_component, "pair id " + std::to_string(id) + " out of range");
  }
}

std::string CompositionSpace::canonical_serialization() const {
  std::string out = "space v1\n";
  out += "states";
  for (const auto& s : states_) out += " " + s;
  out += "\nobjects";
  for (const auto& o : objects_) out += " " + o;
  out += "\npairs";
  for (size_t i = 0; i < pairs_.size(); ++i) {
    out += " " + std::to_string(pairs_[i].state) + ":" + std::to_string(pairs_[i].object) +
           (seen_by_id_[i] ? ":s" : ":u");
  }
  out += "\n";
  return out;
}

}  // namespace must
