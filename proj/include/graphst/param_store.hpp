#pragma once

#include <map>
#include <string>
#include <vector>

#include "graphst/matrix.hpp"
#include "graphst/tape.hpp"

namespace graphst {

struct AdamConfig {
  double lr = 5e-4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named registry of trainable tensors plus per-parameter optimizer state.
class ParamStore {
 public:
  void add(const std::string& name, Matrix init);
  bool contains(const std::string& name) const;
  Matrix& value(const std::string& name);
  const Matrix& value(const std::string& name) const;
  std::vector<std::string> names() const;  // sorted
  std::size_t size() const { return entries_.size(); }

  // First/second moment accumulators and step counter, exposed for tests.
  const Matrix& first_moment(const std::string& name) const;
  const Matrix& second_moment(const std::string& name) const;
  long step_count(const std::string& name) const;

 private:
  friend void adam_update(ParamStore&, const GradMap&, const AdamConfig&);
  struct Entry {
    Matrix value;
    Matrix m;  // first moment
    Matrix v;  // second moment
    long step = 0;
  };
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;
  std::map<std::string, Entry> entries_;
};

// Bias-corrected adaptive-moment step with decoupled weight decay, applied
// multiplicatively before the moment update. Parameters without an entry in
// `grads` are left untouched: their gradient is treated as zero and no step
// (including decay) is taken for them.
void adam_update(ParamStore& store, const GradMap& grads, const AdamConfig& cfg);

// Place every named parameter on the tape as a requires_grad leaf.
std::map<std::string, Var> enter_params(Tape& tape, const ParamStore& store,
                                        const std::vector<std::string>& names);

// Read the gradients of previously entered parameters after backward().
GradMap collect_grads(const Tape& tape, const std::map<std::string, Var>& entered);

}  // namespace graphst
