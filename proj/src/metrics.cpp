#include "simrec/metrics.hpp"

#include "simrec/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace simrec {

void TimeSeries::append(Timestep t, MatrixXd value) {
  if (!samples_.empty() && t <= samples_.back().timestep)
    throw ConfigError("TimeSeries '" + name_ + "': timesteps must be strictly increasing");
  samples_.push_back({t, std::move(value)});
}

void TimeSeries::append(Timestep t, double value) { append(t, MatrixXd::Constant(1, 1, value)); }

std::vector<double> TimeSeries::values() const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) {
    if (s.value.size() != 1) throw ConfigError("TimeSeries '" + name_ + "' is not scalar");
    out.push_back(s.value(0, 0));
  }
  return out;
}

std::vector<Timestep> TimeSeries::timesteps() const {
  std::vector<Timestep> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.timestep);
  return out;
}

void MetricRegistry::add(std::unique_ptr<Observer> observer) {
  const std::string name = observer->name();
  if (is_registered(name)) throw ConfigError("metric '" + name + "' is already registered");
  series_.try_emplace(name, name);
  observers_.push_back(std::move(observer));
}

bool MetricRegistry::remove(const std::string& name) {
  const auto it = std::find_if(observers_.begin(), observers_.end(),
                               [&](const auto& o) { return o->name() == name; });
  if (it == observers_.end()) return false;
  observers_.erase(it);
  return true;
}

bool MetricRegistry::is_registered(const std::string& name) const {
  return std::any_of(observers_.begin(), observers_.end(),
                     [&](const auto& o) { return o->name() == name; });
}

void MetricRegistry::notify(const SimulationView& view) {
  for (const auto& o : observers_) series_.at(o->name()).append(view.timestep, o->observe(view));
}

void MetricRegistry::notify_baseline(const SimulationView& view) {
  for (const auto& o : observers_)
    if (o->samples_baseline()) series_.at(o->name()).append(view.timestep, o->observe(view));
}

const TimeSeries& MetricRegistry::series(const std::string& name) const {
  const auto it = series_.find(name);
  if (it == series_.end()) throw ConfigError("no series named '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------

UserPairing pair_users_by_similarity(const MatrixXd& repr) {
  const Index n = repr.rows();
  if (n < 2) throw ConfigError("pair_users_by_similarity: need at least two users");
  const MatrixXd sim = cosine_scores(repr, repr.transpose());
  UserPairing out;
  out.pairs.reserve(static_cast<std::size_t>(n));
  bool all_tied = true;
  for (Index u = 0; u < n; ++u) {
    Index best = -1;
    bool tied = true;
    for (Index v = 0; v < n; ++v) {
      if (v == u) continue;
      if (best < 0) {
        best = v;
        continue;
      }
      if (sim(u, v) != sim(u, best)) tied = false;
      if (sim(u, v) > sim(u, best)) best = v;
    }
    all_tied = all_tied && tied;
    out.pairs.emplace_back(u, best);
  }
  out.degenerate = all_tied;
  return out;
}

double homogenization_jaccard(std::span<const std::pair<UserId, UserId>> pairs,
                              const std::vector<std::vector<ItemId>>& interacted) {
  if (pairs.empty()) throw ConfigError("homogenization_jaccard: no pairs");
  double total = 0.0;
  for (const auto& [u, v] : pairs)
    total += jaccard(interacted[static_cast<std::size_t>(u)], interacted[static_cast<std::size_t>(v)]);
  return total / static_cast<double>(pairs.size());
}

TimeSeries relative_homogenization(const TimeSeries& model, const TimeSeries& ideal) {
  if (model.size() != ideal.size())
    throw ConfigError("relative_homogenization: series lengths differ");
  TimeSeries out(model.name() + "-relative");
  const auto& ms = model.samples();
  const auto& is = ideal.samples();
  for (std::size_t j = 0; j < ms.size(); ++j) {
    if (ms[j].timestep != is[j].timestep)
      throw ConfigError("relative_homogenization: timesteps are misaligned");
    out.append(ms[j].timestep, ms[j].value(0, 0) - is[j].value(0, 0));
  }
  return out;
}

double mse_scores(const MatrixXd& predicted, const MatrixXd& actual) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols())
    throw ConfigError("mse_scores: shape mismatch");
  if (predicted.size() == 0) return 0.0;
  return (predicted - actual).squaredNorm() / static_cast<double>(predicted.size());
}

double average_creator_entropy(const CreatorPool& creators, CreatorEntropy kind) {
  if (creators.size() == 0) throw ConfigError("average_creator_entropy: empty creator pool");
  double total = 0.0;
  for (Index c = 0; c < creators.size(); ++c) {
    const VectorXd gamma = creators.profiles.row(c).transpose();
    if (kind == CreatorEntropy::expected_item) {
      total += shannon_entropy(gamma);
    } else {
      total += dirichlet_entropy((gamma * creators.item_concentration).cwiseMax(1e-300));
    }
  }
  return total / static_cast<double>(creators.size());
}

double apdmci(const std::vector<std::vector<ItemId>>& interacted, const MatrixXd& item_attrs,
              std::size_t* excluded) {
  std::vector<VectorXd> means;
  std::size_t skipped = 0;
  for (const auto& history : interacted) {
    if (history.empty()) {
      ++skipped;
      continue;
    }
    VectorXd m = VectorXd::Zero(item_attrs.rows());
    for (ItemId i : history) m += item_attrs.col(i);
    means.push_back(m / static_cast<double>(history.size()));
  }
  if (excluded) *excluded = skipped;
  if (means.size() < 2) return 0.0;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      total += (means[a] - means[b]).norm();
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

MatrixXd pairs_to_matrix(const UserPairing& pairing) {
  MatrixXd m(static_cast<Index>(pairing.pairs.size()), 2);
  for (std::size_t j = 0; j < pairing.pairs.size(); ++j) {
    m(static_cast<Index>(j), 0) = static_cast<double>(pairing.pairs[j].first);
    m(static_cast<Index>(j), 1) = static_cast<double>(pairing.pairs[j].second);
  }
  return m;
}

std::vector<std::pair<UserId, UserId>> pairs_from_matrix(const MatrixXd& m) {
  std::vector<std::pair<UserId, UserId>> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Index r = 0; r < m.rows(); ++r)
    out.emplace_back(static_cast<UserId>(m(r, 0)), static_cast<UserId>(m(r, 1)));
  return out;
}

TimeSeries replay_homogenization(const TimeSeries& pairs_state, std::span<const Interaction> log,
                                 Index num_users) {
  TimeSeries out("jaccard");
  std::vector<std::vector<ItemId>> histories(static_cast<std::size_t>(num_users));
  std::size_t cursor = 0;
  for (const auto& sample : pairs_state.samples()) {
    while (cursor < log.size() && log[cursor].t < sample.timestep) {
      auto& h = histories[static_cast<std::size_t>(log[cursor].user)];
      const auto it = std::lower_bound(h.begin(), h.end(), log[cursor].item);
      if (it == h.end() || *it != log[cursor].item) h.insert(it, log[cursor].item);
      ++cursor;
    }
    const auto pairs = pairs_from_matrix(sample.value);
    out.append(sample.timestep, homogenization_jaccard(pairs, histories));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class JaccardObserver final : public Observer {
 public:
  std::string name() const override { return "jaccard"; }
  MatrixXd observe(const SimulationView& v) const override {
    return MatrixXd::Constant(1, 1, homogenization_jaccard(v.pairing.pairs, v.users.interacted));
  }
};

class MseObserver final : public Observer {
 public:
  std::string name() const override { return "mse"; }
  MatrixXd observe(const SimulationView& v) const override {
    // Items the model has not been trained on (and every item before the
    // first training) score 0.
    const Index n = v.items.size();
    MatrixXd predicted = MatrixXd::Zero(v.users.size(), n);
    const MatrixXd& s = v.model.predicted_scores();
    if (s.rows() == predicted.rows()) {
      const Index k = std::min(s.cols(), n);
      predicted.leftCols(k) = s.leftCols(k);
    }
    return MatrixXd::Constant(1, 1, mse_scores(predicted, v.users.true_utility.leftCols(n)));
  }
};

class AceObserver final : public Observer {
 public:
  explicit AceObserver(CreatorEntropy kind) : kind_(kind) {}
  std::string name() const override { return "ace"; }
  bool samples_baseline() const override { return true; }
  MatrixXd observe(const SimulationView& v) const override {
    if (!v.creators) throw ConfigError("metric 'ace' requires content creators");
    return MatrixXd::Constant(1, 1, average_creator_entropy(*v.creators, kind_));
  }

 private:
  CreatorEntropy kind_;
};

class ApdmciObserver final : public Observer {
 public:
  std::string name() const override { return "apdmci"; }
  MatrixXd observe(const SimulationView& v) const override {
    return MatrixXd::Constant(1, 1, apdmci(v.users.interacted, v.items.attributes));
  }
};

class PairingDegenerate final : public Observer {
 public:
  std::string name() const override { return "pairing_degenerate"; }
  MatrixXd observe(const SimulationView& v) const override {
    return MatrixXd::Constant(1, 1, v.pairing.degenerate ? 1.0 : 0.0);
  }
};

class PairsState final : public Observer {
 public:
  std::string name() const override { return "pairs"; }
  bool is_system_state() const override { return true; }
  MatrixXd observe(const SimulationView& v) const override { return pairs_to_matrix(v.pairing); }
};

class UserReprState final : public Observer {
 public:
  std::string name() const override { return "user_repr"; }
  bool is_system_state() const override { return true; }
  MatrixXd observe(const SimulationView& v) const override { return v.model.user_repr(); }
};

class CreatorProfilesState final : public Observer {
 public:
  std::string name() const override { return "creator_profiles"; }
  bool is_system_state() const override { return true; }
  bool samples_baseline() const override { return true; }
  MatrixXd observe(const SimulationView& v) const override {
    if (!v.creators) throw ConfigError("state 'creator_profiles' requires content creators");
    return v.creators->profiles;
  }
};

}  // namespace

std::unique_ptr<Observer> make_jaccard_observer() { return std::make_unique<JaccardObserver>(); }
std::unique_ptr<Observer> make_mse_observer() { return std::make_unique<MseObserver>(); }
std::unique_ptr<Observer> make_ace_observer(CreatorEntropy kind) {
  return std::make_unique<AceObserver>(kind);
}
std::unique_ptr<Observer> make_apdmci_observer() { return std::make_unique<ApdmciObserver>(); }
std::unique_ptr<Observer> make_pairs_state() { return std::make_unique<PairsState>(); }
std::unique_ptr<Observer> make_user_repr_state() { return std::make_unique<UserReprState>(); }
std::unique_ptr<Observer> make_creator_profiles_state() {
  return std::make_unique<CreatorProfilesState>();
}

std::unique_ptr<Observer> make_observer(const std::string& name) {
  if (name == "jaccard") return make_jaccard_observer();
  if (name == "mse") return make_mse_observer();
  if (name == "ace") return make_ace_observer();
  if (name == "ace_dirichlet") {
    // Differential-entropy variant, recorded under its own name.
    class Named final : public Observer {
     public:
      std::string name() const override { return "ace_dirichlet"; }
      bool samples_baseline() const override { return true; }
      MatrixXd observe(const SimulationView& v) const override {
        if (!v.creators) throw ConfigError("metric 'ace_dirichlet' requires content creators");
        return MatrixXd::Constant(
            1, 1, average_creator_entropy(*v.creators, CreatorEntropy::dirichlet_differential));
      }
    };
    return std::make_unique<Named>();
  }
  if (name == "apdmci") return make_apdmci_observer();
  if (name == "pairing_degenerate") return std::make_unique<PairingDegenerate>();
  if (name == "pairs") return make_pairs_state();
  if (name == "user_repr") return make_user_repr_state();
  if (name == "creator_profiles") return make_creator_profiles_state();
  throw ConfigError("unknown metric '" + name + "'");
}

}  // namespace simrec
