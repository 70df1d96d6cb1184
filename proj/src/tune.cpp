#include "plkit/tune.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include "plkit/parallel.h"

namespace plkit {

ParamSpec ParamSpec::choice(std::vector<double> vs) {
  if (vs.empty()) {
    throw InvalidArgument("choice set must be nonempty");
  }
  ParamSpec p;
  p.kind = Kind::kChoice;
  p.lo = *std::min_element(vs.begin(), vs.end());
  p.hi = *std::max_element(vs.begin(), vs.end());
  p.values = std::move(vs);
  return p;
}

ParamSpec ParamSpec::range(double lo, double hi) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidArgument("range must satisfy lo <= hi");
  }
  ParamSpec p;
  p.kind = Kind::kRange;
  p.lo = lo;
  p.hi = hi;
  return p;
}

bool ParamSpec::contains(double v) const {
  if (kind == Kind::kRange) {
    return v >= lo && v <= hi;
  }
  return std::find(values.begin(), values.end(), v) != values.end();
}

SearchSpace& SearchSpace::add(std::string name, ParamSpec spec) {
  for (const auto& [n, s] : params_) {
    if (n == name) {
      throw InvalidArgument("duplicate parameter '" + name + "'");
    }
  }
  params_.emplace_back(std::move(name), std::move(spec));
  return *this;
}

const ParamSpec& SearchSpace::at(std::string_view name) const {
  for (const auto& [n, s] : params_) {
    if (n == name) {
      return s;
    }
  }
  throw InvalidArgument("no parameter '" + std::string(name) + "' in search space");
}

bool SearchSpace::discrete() const {
  return std::all_of(params_.begin(), params_.end(), [](const auto& p) { return p.second.discrete(); });
}

std::size_t SearchSpace::discreteSize() const {
  if (!discrete()) {
    throw InvalidArgument("search space has continuous parameters");
  }
  std::size_t n = 1;
  for (const auto& [name, spec] : params_) {
    n *= spec.values.size();
  }
  return n;
}

bool SearchSpace::contains(const ParamSet& p) const {
  if (p.size() != params_.size()) {
    return false;
  }
  for (const auto& [name, spec] : params_) {
    auto it = p.find(name);
    if (it == p.end() || !spec.contains(it->second)) {
      return false;
    }
  }
  return true;
}

SearchSpace parseSearchSpace(std::istream& in) {
  SearchSpace space;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    auto body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) {
      continue;
    }
    auto f = splitWhitespace(body);
    auto where = "search space line " + std::to_string(line_no) + ": ";
    try {
      if (f.size() == 3 && f[1] == "fixed") {
        space.add(f[0], ParamSpec::fixed(parseDouble(f[2], "value")));
      } else if (f.size() == 3 && f[1] == "choice") {
        std::vector<double> vs;
        for (const auto& v : splitChar(f[2], ',')) {
          vs.push_back(parseDouble(v, "choice value"));
        }
        space.add(f[0], ParamSpec::choice(std::move(vs)));
      } else if (f.size() == 4 && f[1] == "range") {
        space.add(f[0], ParamSpec::range(parseDouble(f[2], "lower bound"), parseDouble(f[3], "upper bound")));
      } else {
        throw FormatError("expected 'name fixed v', 'name choice a,b' or 'name range lo hi'");
      }
    } catch (const Error& e) {
      throw FormatError(where + e.what());
    }
  }
  return space;
}

std::vector<ParamSet> randomPoints(const SearchSpace& space, const RandomSearchOptions& options) {
  if (options.trials < 1) {
    throw InvalidArgument("trials must be >= 1");
  }
  std::vector<ParamSet> points;
  if (options.without_replacement) {
    std::size_t total = space.discreteSize();
    std::vector<std::size_t> order(total);
    for (std::size_t i = 0; i < total; ++i) {
      order[i] = i;
    }
    std::mt19937_64 rng(options.seed);
    for (std::size_t i = total; i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    auto take = std::min<std::size_t>(total, static_cast<std::size_t>(options.trials));
    for (std::size_t t = 0; t < take; ++t) {
      std::size_t code = order[t];
      ParamSet p;
      for (auto it = space.params().rbegin(); it != space.params().rend(); ++it) {
        const auto& vs = it->second.values;
        p[it->first] = vs[code % vs.size()];
        code /= vs.size();
      }
      points.push_back(std::move(p));
    }
    return points;
  }
  for (int t = 0; t < options.trials; ++t) {
    std::mt19937_64 rng(mixSeed(options.seed, static_cast<uint64_t>(t)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ParamSet p;
    for (const auto& [name, spec] : space.params()) {
      switch (spec.kind) {
        case ParamSpec::Kind::kFixed:
          p[name] = spec.values[0];
          break;
        case ParamSpec::Kind::kChoice: {
          std::uniform_int_distribution<std::size_t> pick(0, spec.values.size() - 1);
          p[name] = spec.values[pick(rng)];
          break;
        }
        case ParamSpec::Kind::kRange:
          p[name] = spec.lo + (spec.hi - spec.lo) * unit(rng);
          break;
      }
    }
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<TrialResult> evaluatePoints(const std::vector<ParamSet>& points, const Objective& objective, int workers) {
  std::vector<TrialResult> results(points.size());
  parallelFor(points.size(), workers, [&](std::size_t i) {
    auto& r = results[i];
    r.index = i;
    r.params = points[i];
    auto start = std::chrono::steady_clock::now();
    try {
      r.wer = objective(points[i]);
      if (std::isnan(r.wer) || r.wer < 0) {
        throw Error("objective returned an invalid WER");
      }
    } catch (const std::exception& e) {
      r.error = e.what();
      r.wer = std::numeric_limits<double>::infinity();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  std::sort(results.begin(), results.end(), [](const TrialResult& a, const TrialResult& b) {
    if (a.ok() != b.ok()) {
      return a.ok();
    }
    if (a.wer != b.wer) {
      return a.wer < b.wer;
    }
    return a.index < b.index;
  });
  return results;
}

std::vector<TrialResult> randomSearch(const SearchSpace& space, const RandomSearchOptions& options, const Objective& objective) {
  return evaluatePoints(randomPoints(space, options), objective, options.workers);
}

std::size_t GridAxis::count() const {
  if (!(step > 0)) {
    throw InvalidArgument("grid step must be > 0 for axis '" + name + "'");
  }
  if (!(lo <= hi)) {
    throw InvalidArgument("grid axis '" + name + "' has lo > hi");
  }
  return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

double GridAxis::value(std::size_t i) const {
  double v = lo + static_cast<double>(i) * step;
  // Strip accumulated binary noise such as 0.30000000000000004.
  return std::round(v * 1e12) / 1e12;
}

std::vector<ParamSet> gridPoints(std::span<const GridAxis> axes) {
  std::vector<ParamSet> points;
  if (axes.empty()) {
    return points;
  }
  std::vector<std::size_t> counts;
  std::size_t total = 1;
  for (const auto& a : axes) {
    counts.push_back(a.count());
    total *= counts.back();
  }
  points.reserve(total);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    ParamSet p;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      p[axes[a].name] = axes[a].value(idx[a]);
    }
    points.push_back(std::move(p));
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++idx[a] < counts[a]) {
        break;
      }
      idx[a] = 0;
    }
  }
  return points;
}

std::vector<TrialResult> gridSearch(std::span<const GridAxis> axes, const Objective& objective, int workers) {
  return evaluatePoints(gridPoints(axes), objective, workers);
}

void writeTrials(std::span<const TrialResult> results, std::ostream& out, bool with_timing) {
  out << "trial\twer" << (with_timing ? "\twall_seconds" : "") << "\tparams\terror\n";
  for (const auto& r : results) {
    out << r.index << '\t' << (r.ok() ? formatDouble(r.wer) : std::string("inf"));
    if (with_timing) {
      out << '\t' << formatDouble(r.wall_seconds);
    }
    out << '\t';
    bool first = true;
    for (const auto& [k, v] : r.params) {
      out << (first ? "" : ",") << k << '=' << formatDouble(v);
      first = false;
    }
    out << '\t' << r.error << '\n';
  }
}

std::vector<GridAxis> NamedSpace::axes() const {
  std::vector<GridAxis> out;
  for (const auto& [name, spec] : space.params()) {
    if (spec.kind == ParamSpec::Kind::kRange) {
      out.push_back({name, spec.lo, spec.hi, grid_step});
    } else {
      for (double v : spec.values) {
        out.push_back({name, v, v, grid_step > 0 ? grid_step : 1.0});
        break;
      }
    }
  }
  return out;
}

std::size_t NamedSpace::plannedEvaluations() const {
  if (strategy == Strategy::kRandom) {
    return static_cast<std::size_t>(trials);
  }
  std::size_t n = 1;
  for (const auto& a : axes()) {
    n *= a.count();
  }
  return n;
}

namespace {

NamedSpace ctcSpace(std::string name, std::string desc, double beam, double lm_hi, double threshold) {
  NamedSpace s{std::move(name), std::move(desc), Strategy::kRandom, {}, 128, 0};
  s.space.add("beam", ParamSpec::fixed(beam))
      .add("token_beam", ParamSpec::fixed(100))
      .add("lm_weight", ParamSpec::range(0, lm_hi))
      .add("beam_threshold", ParamSpec::fixed(threshold))
      .add("word_insertion", ParamSpec::range(-3, 3));
  return s;
}

NamedSpace s2sSpace(
    std::string name,
    std::string desc,
    ParamSpec beam,
    ParamSpec token_beam,
    double lm_hi,
    ParamSpec threshold) {
  NamedSpace s{std::move(name), std::move(desc), Strategy::kRandom, {}, 128, 0};
  s.space.add("beam", std::move(beam))
      .add("token_beam", std::move(token_beam))
      .add("lm_weight", ParamSpec::range(0, lm_hi))
      .add("beam_threshold", std::move(threshold))
      .add("eos_penalty", ParamSpec::range(-10, 0));
  return s;
}

NamedSpace dumpSpace(std::string name, std::string desc, double beam, double token_beam, double threshold) {
  NamedSpace s{std::move(name), std::move(desc), Strategy::kRandom, {}, 1, 0};
  s.space.add("beam", ParamSpec::fixed(beam))
      .add("token_beam", ParamSpec::fixed(token_beam))
      .add("beam_threshold", ParamSpec::fixed(threshold));
  return s;
}

std::map<std::string, NamedSpace> makeCatalog() {
  std::map<std::string, NamedSpace> c;
  auto put = [&](NamedSpace s) { c.emplace(s.name, std::move(s)); };

  put(ctcSpace("ctc-ngram", "CTC, LibriSpeech AM, n-gram LM", 500, 3, 100));
  put(ctcSpace("librivox-ctc-ngram", "CTC, LibriVox AM, n-gram LM", 500, 1.5, 100));
  put(ctcSpace("ctc-gcnn", "CTC, LibriSpeech AM, GCNN LM", 250, 3, 20));
  put(ctcSpace("librivox-ctc-gcnn", "CTC, LibriVox AM, GCNN LM", 250, 1.5, 20));

  put(s2sSpace(
      "s2s-ngram", "S2S, LibriSpeech AM, n-gram LM", ParamSpec::choice({50, 100}), ParamSpec::choice({10, 50}), 2,
      ParamSpec::choice({10, 50})));
  put(s2sSpace(
      "librivox-s2s-ngram", "S2S, LibriVox AM, n-gram LM", ParamSpec::choice({20, 50, 100}),
      ParamSpec::choice({3, 5, 10}), 1, ParamSpec::choice({5, 10, 50})));
  put(s2sSpace(
      "s2s-gcnn", "S2S, LibriSpeech AM, GCNN LM", ParamSpec::fixed(50), ParamSpec::choice({10, 18}), 2,
      ParamSpec::choice({10, 15})));
  put(s2sSpace(
      "librivox-s2s-gcnn", "S2S, LibriVox AM, GCNN LM", ParamSpec::choice({20, 50, 100}),
      ParamSpec::choice({3, 5, 10}), 0.8, ParamSpec::choice({5, 10, 50})));

  NamedSpace grid{"rescore-ctc-grid", "N-best rescoring of CTC models", Strategy::kGrid, {}, 0, 0.1};
  grid.space.add("alpha1", ParamSpec::range(0, 1))
      .add("alpha2", ParamSpec::range(-0.3, 0.3))
      .add("beta", ParamSpec::range(0, 1));
  put(std::move(grid));

  NamedSpace rnd{"rescore-s2s-random", "N-best rescoring of S2S models", Strategy::kRandom, {}, 1000, 0};
  rnd.space.add("alpha1", ParamSpec::range(0, 2.5))
      .add("alpha2", ParamSpec::range(-1, 1))
      .add("beta", ParamSpec::range(-3, 3));
  put(std::move(rnd));

  // Widened settings for dumping candidates before rescoring.
  put(dumpSpace("dump-ctc-ngram", "candidate dump, CTC, n-gram LM", 2500, 1500, 5000));
  put(dumpSpace("dump-s2s-ngram", "candidate dump, S2S, n-gram LM", 250, 150, 150));
  put(dumpSpace("dump-ctc-gcnn", "candidate dump, CTC, GCNN LM", 250, 100, 20));
  put(dumpSpace("dump-s2s-gcnn", "candidate dump, S2S, GCNN LM", 250, 100, 100));
  return c;
}

constexpr OptimalLmWeightRange kOptimal[] = {
    {"ngram", "librispeech", "ctc", "clean", 0.8, 1.4},  {"ngram", "librispeech", "s2s", "clean", 0.6, 1.1},
    {"ngram", "librivox", "ctc", "clean", 0.2, 0.4},     {"ngram", "librivox", "s2s", "clean", 0.0, 0.2},
    {"ngram", "librispeech", "ctc", "other", 1.1, 1.9},  {"ngram", "librispeech", "s2s", "other", 0.6, 1.2},
    {"ngram", "librivox", "ctc", "other", 0.5, 0.7},     {"ngram", "librivox", "s2s", "other", 0.1, 0.5},
    {"gcnn", "librispeech", "ctc", "clean", 0.4, 0.8},   {"gcnn", "librispeech", "s2s", "clean", 0.2, 0.5},
    {"gcnn", "librivox", "ctc", "clean", 0.2, 0.5},      {"gcnn", "librivox", "s2s", "clean", 0.0, 0.4},
    {"gcnn", "librispeech", "ctc", "other", 0.5, 1.1},   {"gcnn", "librispeech", "s2s", "other", 0.3, 0.7},
    {"gcnn", "librivox", "ctc", "other", 0.3, 0.6},      {"gcnn", "librivox", "s2s", "other", 0.2, 0.4},
};

} // namespace

const std::map<std::string, NamedSpace>& builtinSpaces() {
  static const std::map<std::string, NamedSpace> catalog = makeCatalog();
  return catalog;
}

const NamedSpace& builtinSpace(std::string_view name) {
  const auto& c = builtinSpaces();
  auto it = c.find(std::string(name));
  if (it == c.end()) {
    throw InvalidArgument("unknown search space '" + std::string(name) + "'");
  }
  return it->second;
}

std::span<const OptimalLmWeightRange> documentedOptimalLmWeights() {
  return kOptimal;
}

} // namespace plkit
