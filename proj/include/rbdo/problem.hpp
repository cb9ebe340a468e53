#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rbdo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error categories that call sites branch on. Anything structural
// (dimension mismatches, bad indices) throws std::invalid_argument.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Closed box [lower, upper] in design space. Both endpoints are feasible.
class Bounds {
 public:
  Bounds(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() == 0)
      throw std::invalid_argument("Bounds: lower/upper must have equal nonzero length");
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
      if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]))
        throw std::invalid_argument("Bounds: entries must be finite");
      if (!(lower_[i] < upper_[i]))
        throw std::invalid_argument("Bounds: lower[" + std::to_string(i) + "] must be < upper");
    }
  }

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  Vec width() const { return upper_ - lower_; }

  bool contains(const Vec& x) const {
    if (x.size() != lower_.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
    return true;
  }

  Vec clamp(const Vec& x) const {
    if (x.size() != lower_.size())
      throw std::invalid_argument("Bounds::clamp: dimension mismatch");
    return x.cwiseMax(lower_).cwiseMin(upper_);
  }

 private:
  Vec lower_, upper_;
};

// A design point validated against its problem's bounds at construction.
class DesignVector {
 public:
  DesignVector(Vec values, const Bounds& bounds) : values_(std::move(values)) {
    if (values_.size() != bounds.lower().size())
      throw std::invalid_argument("DesignVector: dimension mismatch with bounds");
    if (!bounds.contains(values_))
      throw std::invalid_argument("DesignVector: point outside bounds");
  }

  const Vec& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }
  int dim() const { return static_cast<int>(values_.size()); }

 private:
  Vec values_;
};

enum class Distribution { Normal };

// One random variable of the uncertainty model. Its mean either tracks a
// design coordinate or is a fixed scalar (non-design noise parameters).
struct RandomVarSpec {
  Distribution kind = Distribution::Normal;
  std::optional<int> design_index;  // set -> mean follows d[design_index]
  double fixed_mean = 0.0;          // used when design_index is empty
  double std_dev = 1.0;

  static RandomVarSpec linked(int index, double sd) {
    if (index < 0) throw std::invalid_argument("RandomVarSpec: negative design index");
    if (!(sd > 0)) throw std::invalid_argument("RandomVarSpec: std_dev must be > 0");
    RandomVarSpec s;
    s.design_index = index;
    s.std_dev = sd;
    return s;
  }

  static RandomVarSpec fixed(double mean, double sd) {
    if (!(sd > 0)) throw std::invalid_argument("RandomVarSpec: std_dev must be > 0");
    RandomVarSpec s;
    s.fixed_mean = mean;
    s.std_dev = sd;
    return s;
  }

  double mean_for(const Vec& d) const {
    return design_index ? d[*design_index] : fixed_mean;
  }
};

// Deterministic scalar mapping with a declared arity.
class ScalarFunction {
 public:
  ScalarFunction() = default;
  ScalarFunction(std::string name, int arity, std::function<double(const Vec&)> fn)
      : name_(std::move(name)), arity_(arity), fn_(std::move(fn)) {}

  double operator()(const Vec& x) const {
    if (!fn_) throw std::invalid_argument("ScalarFunction: empty");
    if (static_cast<int>(x.size()) != arity_)
      throw std::invalid_argument("ScalarFunction '" + name_ + "': expected " +
                                  std::to_string(arity_) + " inputs, got " +
                                  std::to_string(x.size()));
    return fn_(x);
  }

  const std::string& name() const { return name_; }
  int arity() const { return arity_; }
  explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  std::string name_;
  int arity_ = 0;
  std::function<double(const Vec&)> fn_;
};

// Problem statement: minimize cost(d) over the box subject to
// Pr(G_i(x) < 0) <= 1 - R_t for every limit state, x the random vector
// whose design-linked means follow d. Negative g is failure throughout.
class RBDOProblem {
 public:
  RBDOProblem(std::string name, ScalarFunction cost, std::vector<ScalarFunction> constraints,
              Bounds bounds, std::vector<RandomVarSpec> random_vars, double target_reliability)
      : name_(std::move(name)),
        cost_(std::move(cost)),
        constraints_(std::move(constraints)),
        bounds_(std::move(bounds)),
        random_vars_(std::move(random_vars)),
        target_reliability_(target_reliability) {
    if (constraints_.empty()) throw std::invalid_argument("RBDOProblem: need at least one constraint");
    if (random_vars_.empty()) throw std::invalid_argument("RBDOProblem: need at least one random variable");
    if (!(target_reliability_ > 0.0 && target_reliability_ < 1.0))
      throw std::invalid_argument("RBDOProblem: target reliability must be in (0,1)");
    if (cost_.arity() != nd())
      throw std::invalid_argument("RBDOProblem: cost arity must equal nd");
    std::vector<bool> seen(static_cast<size_t>(nd()), false);
    for (const auto& rv : random_vars_) {
      if (rv.design_index) {
        if (*rv.design_index >= nd())
          throw std::invalid_argument("RBDOProblem: design-linked index out of range");
        if (seen[static_cast<size_t>(*rv.design_index)])
          throw std::invalid_argument("RBDOProblem: duplicate design-linked index");
        seen[static_cast<size_t>(*rv.design_index)] = true;
      }
    }
    for (const auto& g : constraints_)
      if (g.arity() != nr())
        throw std::invalid_argument("RBDOProblem: constraint arity must equal nr");
  }

  const std::string& name() const { return name_; }
  int nd() const { return bounds_.dim(); }
  int nr() const { return static_cast<int>(random_vars_.size()); }
  int nc() const { return static_cast<int>(constraints_.size()); }

  const ScalarFunction& cost() const { return cost_; }
  const std::vector<ScalarFunction>& constraints() const { return constraints_; }
  const Bounds& bounds() const { return bounds_; }
  const std::vector<RandomVarSpec>& random_vars() const { return random_vars_; }
  double target_reliability() const { return target_reliability_; }

  // Mean of the random vector when the design sits at d.
  Vec mean_vector(const Vec& d) const {
    Vec m(nr());
    for (int i = 0; i < nr(); ++i) m[i] = random_vars_[static_cast<size_t>(i)].mean_for(d);
    return m;
  }

 private:
  std::string name_;
  ScalarFunction cost_;
  std::vector<ScalarFunction> constraints_;
  Bounds bounds_;
  std::vector<RandomVarSpec> random_vars_;
  double target_reliability_;
};

inline double eval_cost(const RBDOProblem& p, const DesignVector& d) {
  return p.cost()(d.values());
}

inline double eval_constraint(const RBDOProblem& p, int i, const Vec& x) {
  if (i < 0 || i >= p.nc())
    throw std::invalid_argument("eval_constraint: index out of range");
  return p.constraints()[static_cast<size_t>(i)](x);
}

enum class OutOfBoundsPolicy { Reject, Clamp };

// Reject mode drops out-of-box points; clamp mode projects them back in.
inline std::optional<DesignVector> clamp_or_reject(const Vec& v, const Bounds& b,
                                                   OutOfBoundsPolicy mode) {
  if (v.size() != b.lower().size())
    throw std::invalid_argument("clamp_or_reject: dimension mismatch");
  if (mode == OutOfBoundsPolicy::Reject) {
    if (!b.contains(v)) return std::nullopt;
    return DesignVector(v, b);
  }
  return DesignVector(b.clamp(v), b);
}

// Box the surrogates are trained over: design-linked dimensions span the
// design bounds, fixed-mean dimensions span mean +- k_sigma standard
// deviations (covers the region Monte Carlo sampling actually visits).
inline Bounds surrogate_training_bounds(const RBDOProblem& p, double k_sigma = 3.0) {
  Vec lo(p.nr()), hi(p.nr());
  for (int i = 0; i < p.nr(); ++i) {
    const auto& rv = p.random_vars()[static_cast<size_t>(i)];
    if (rv.design_index) {
      lo[i] = p.bounds().lower()[*rv.design_index];
      hi[i] = p.bounds().upper()[*rv.design_index];
    } else {
      lo[i] = rv.fixed_mean - k_sigma * rv.std_dev;
      hi[i] = rv.fixed_mean + k_sigma * rv.std_dev;
    }
  }
  return Bounds(lo, hi);
}

// Name -> factory table so the CLI can instantiate problems from a config
// string. The string argument carries an optional data-file path.
class ProblemRegistry {
 public:
  using Factory = std::function<RBDOProblem(const std::string& arg)>;

  static void add(const std::string& name, Factory f) { table()[name] = std::move(f); }

  static bool has(const std::string& name) { return table().count(name) != 0; }

  static RBDOProblem make(const std::string& name, const std::string& arg = "") {
    auto it = table().find(name);
    if (it == table().end()) throw ConfigError("unknown problem '" + name + "'");
    return it->second(arg);
  }

  static std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : table()) out.push_back(k);
    return out;
  }

 private:
  static std::map<std::string, Factory>& table() {
    static std::map<std::string, Factory> t;
    return t;
  }
};

}  // namespace rbdo
