#include "graphst/param_store.hpp"

#include <cmath>

#include "graphst/errors.hpp"

namespace graphst {

void ParamStore::add(const std::string& name, Matrix init) {
  if (entries_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  Entry e;
  e.m = Matrix(init.rows(), init.cols());
  e.v = Matrix(init.rows(), init.cols());
  e.value = std::move(init);
  entries_.emplace(name, std::move(e));
}

bool ParamStore::contains(const std::string& name) const { return entries_.count(name) > 0; }

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

Matrix& ParamStore::value(const std::string& name) { return entry(name).value; }
const Matrix& ParamStore::value(const std::string& name) const { return entry(name).value; }
const Matrix& ParamStore::first_moment(const std::string& name) const { return entry(name).m; }
const Matrix& ParamStore::second_moment(const std::string& name) const { return entry(name).v; }
long ParamStore::step_count(const std::string& name) const { return entry(name).step; }

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

void adam_update(ParamStore& store, const GradMap& grads, const AdamConfig& cfg) {
  for (const auto& [name, g] : grads) {
    ParamStore::Entry& e = store.entry(name);
    if (!g.same_shape(e.value))
      throw ShapeError("adam_update: gradient shape mismatch for " + name);
    e.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      e.value[i] *= 1.0 - cfg.lr * cfg.weight_decay;
      e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g[i];
      e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = e.m[i] / bc1;
      const double vhat = e.v[i] / bc2;
      e.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

std::map<std::string, Var> enter_params(Tape& tape, const ParamStore& store,
                                        const std::vector<std::string>& names) {
  std::map<std::string, Var> out;
  for (const std::string& name : names) out.emplace(name, tape.leaf(store.value(name), true));
  return out;
}

GradMap collect_grads(const Tape& tape, const std::map<std::string, Var>& entered) {
  GradMap out;
  for (const auto& [name, var] : entered) out.emplace(name, tape.grad(var));
  return out;
}

}  // namespace graphst
