#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plkit/common.h"

namespace plkit {

struct ParamSpec {
  enum class Kind { kFixed, kChoice, kRange };

  Kind kind = Kind::kFixed;
  std::vector<double> values;  // fixed: one value; choice: the set
  double lo = 0;
  double hi = 0;

  static ParamSpec fixed(double v) { return {Kind::kFixed, {v}, v, v}; }
  static ParamSpec choice(std::vector<double> vs);
  static ParamSpec range(double lo, double hi);

  bool contains(double v) const;
  bool discrete() const { return kind != Kind::kRange; }
  bool operator==(const ParamSpec&) const = default;
};

using ParamSet = std::map<std::string, double>;

class SearchSpace {
 public:
  SearchSpace& add(std::string name, ParamSpec spec);
  const ParamSpec& at(std::string_view name) const;
  const std::vector<std::pair<std::string, ParamSpec>>& params() const { return params_; }
  bool discrete() const;
  // Cartesian product size of a fully discrete space.
  std::size_t discreteSize() const;
  bool contains(const ParamSet& p) const;

 private:
  std::vector<std::pair<std::string, ParamSpec>> params_;
};

// "name fixed v | choice v1,v2,... | range lo hi" per line; '#' comments.
SearchSpace parseSearchSpace(std::istream& in);

struct TrialResult {
  std::size_t index = 0;
  ParamSet params;
  double wer = 0;
  double wall_seconds = 0;
  // Non-empty when the objective threw; such trials sort last.
  std::string error;

  bool ok() const { return error.empty(); }
};

using Objective = std::function<double(const ParamSet&)>;

struct RandomSearchOptions {
  int trials = 128;
  uint64_t seed = 0;
  int workers = 1;
  // Discrete spaces only: draw distinct points (shuffled enumeration).
  bool without_replacement = false;
};

// Points a random search will evaluate, in trial order. Trial i draws from
// its own stream derived from (seed, i), so results do not depend on workers.
std::vector<ParamSet> randomPoints(const SearchSpace& space, const RandomSearchOptions& options);

std::vector<TrialResult> randomSearch(const SearchSpace& space, const RandomSearchOptions& options, const Objective& objective);

struct GridAxis {
  std::string name;
  double lo = 0;
  double hi = 0;
  double step = 0;

  std::size_t count() const;
  double value(std::size_t i) const;
};

// Full Cartesian product, endpoints inclusive; first axis varies slowest.
std::vector<ParamSet> gridPoints(std::span<const GridAxis> axes);

std::vector<TrialResult> gridSearch(std::span<const GridAxis> axes, const Objective& objective, int workers = 1);

// Evaluates `points` (trial i = points[i]) and sorts best-first.
std::vector<TrialResult> evaluatePoints(const std::vector<ParamSet>& points, const Objective& objective, int workers);

// Wall times vary run to run; they are written only when asked for.
void writeTrials(std::span<const TrialResult> results, std::ostream& out, bool with_timing = false);

enum class Strategy { kRandom, kGrid };

struct NamedSpace {
  std::string name;
  std::string description;
  Strategy strategy = Strategy::kRandom;
  SearchSpace space;
  int trials = 0;         // random strategy
  double grid_step = 0;   // grid strategy

  std::vector<GridAxis> axes() const;
  std::size_t plannedEvaluations() const;
};

// Decoding and rescoring search spaces for the reference models.
const std::map<std::string, NamedSpace>& builtinSpaces();
const NamedSpace& builtinSpace(std::string_view name);

// LM-weight ranges that turned out optimal for the reference models. Shipped
// for reference only; they depend on the full-scale acoustic models.
struct OptimalLmWeightRange {
  const char* lm;
  const char* train_data;
  const char* model;
  const char* split;
  double lo;
  double hi;
};
std::span<const OptimalLmWeightRange> documentedOptimalLmWeights();

} // namespace plkit
