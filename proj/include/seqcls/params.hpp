#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "seqcls/autodiff.hpp"
#include "seqcls/tensor.hpp"

namespace seqcls {

// Ordered, named parameter tensors. Registration order is the canonical order
// for gradient reduction, optimizer state, and checkpoint serialization.
class ParamStore {
  public:
    Tensor& add(const std::string& name, Tensor t) {
        if (index_.count(name)) throw ContractError("ParamStore: duplicate parameter " + name);
        index_[name] = entries_.size();
        entries_.push_back({name, std::move(t)});
        return entries_.back().second;
    }

    bool has(const std::string& name) const { return index_.count(name) > 0; }

    Tensor& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("ParamStore: unknown parameter " + name);
        return entries_[it->second].second;
    }
    const Tensor& get(const std::string& name) const { return const_cast<ParamStore*>(this)->get(name); }

    size_t count() const { return entries_.size(); }
    size_t total_elements() const {
        size_t n = 0;
        for (const auto& e : entries_) n += e.second.size();
        return n;
    }

    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }

  private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, size_t> index_;
};

// Per-tape view of a ParamStore: every tensor becomes a trainable leaf, in
// store order, so tape.param_ids() aligns with store entries.
struct BoundParams {
    std::unordered_map<std::string, ad::Value> values;

    ad::Value at(const std::string& name) const {
        auto it = values.find(name);
        if (it == values.end()) throw ContractError("BoundParams: unknown parameter " + name);
        return it->second;
    }
};

inline BoundParams bind_params(ad::Tape& tape, const ParamStore& store) {
    BoundParams bound;
    for (const auto& [name, tensor] : store.entries()) bound.values.emplace(name, tape.param(tensor));
    return bound;
}

} // namespace seqcls
