#include "nioc/params.hpp"

#include <cmath>

namespace nioc {

void ParamVector::set(const std::string& name, double value, bool positive) {
  if (!std::isfinite(value)) throw NonFiniteValue("parameter '" + name + "' is not finite");
  entries_[name] = Entry{value, positive};
}

double ParamVector::at(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw MissingParameter("missing parameter '" + name + "'");
  return it->second.value;
}

bool ParamVector::has(const std::string& name) const { return entries_.count(name) > 0; }

bool ParamVector::is_positive(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw MissingParameter("missing parameter '" + name + "'");
  return it->second.positive;
}

std::vector<std::string> ParamVector::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

Eigen::VectorXd ParamVector::to_optimizer_space() const {
  Eigen::VectorXd z(size());
  int i = 0;
  for (const auto& [name, entry] : entries_) {
    if (entry.positive) {
      if (entry.value <= 0.0)
        throw NonPositiveParameter("parameter '" + name + "' must be positive to transform, got " +
                                   std::to_string(entry.value));
      z[i] = std::log(entry.value);
    } else {
      z[i] = entry.value;
    }
    ++i;
  }
  return z;
}

ParamVector ParamVector::from_optimizer_space(const Eigen::VectorXd& z) const {
  if (z.size() != size()) throw InvalidArgument("from_optimizer_space: dimension mismatch");
  ParamVector out;
  int i = 0;
  for (const auto& [name, entry] : entries_) {
    const double v = entry.positive ? std::exp(z[i]) : z[i];
    out.set(name, v, entry.positive);
    ++i;
  }
  return out;
}

}  // namespace nioc
