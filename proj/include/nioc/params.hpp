#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "nioc/errors.hpp"

namespace nioc {

// Named parameter bundle. Entries marked positive are optimized in log
// space; unconstrained entries stay linear. Iteration order is the sorted
// name order, which also fixes the optimizer-space coordinate order.
class ParamVector {
 public:
  ParamVector() = default;

  void set(const std::string& name, double value, bool positive = true);
  double at(const std::string& name) const;          // MissingParameter if absent
  bool has(const std::string& name) const;
  bool is_positive(const std::string& name) const;   // MissingParameter if absent

  std::vector<std::string> names() const;
  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }

  // Forward transform: log for positive entries (NonPositiveParameter if
  // the stored value is <= 0), identity otherwise.
  Eigen::VectorXd to_optimizer_space() const;

  // Inverse transform against this vector's schema (names + positivity).
  ParamVector from_optimizer_space(const Eigen::VectorXd& z) const;

 private:
  struct Entry {
    double value = 0.0;
    bool positive = true;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace nioc
