#include "support/test_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include <fmt/format.h>

namespace xg::testsup {

double ref_gower(const GowerSubset& a, const GowerSubset& b,
                 const GowerRanges& ranges) {
  double sum = 0.0;
  int used = 0;
  auto cat = [&](const auto& x, const auto& y) {
    if (!x || !y) return;
    sum += (*x == *y) ? 0.0 : 1.0;
    ++used;
  };
  auto num = [&](const std::optional<double>& x, const std::optional<double>& y,
                 double range) {
    if (!x || !y) return;
    double d = std::fabs(*x - *y) / range;
    if (d > 1.0) d = 1.0;
    sum += d;
    ++used;
  };
  cat(a.is_strong_side, b.is_strong_side);
  cat(a.last_event, b.last_event);
  cat(a.shot_type, b.shot_type);
  num(a.schuckers_x, b.schuckers_x, ranges.schuckers_x);
  num(a.schuckers_y, b.schuckers_y, ranges.schuckers_y);
  num(a.schuckers_dist, b.schuckers_dist, ranges.schuckers_dist);
  num(a.schuckers_angle, b.schuckers_angle, ranges.schuckers_angle);
  cat(a.rebound, b.rebound);
  cat(a.fastbreak, b.fastbreak);
  if (used == 0) throw std::runtime_error("no comparable attributes");
  return sum / used;
}

std::vector<double> ref_inverse_normalize(const std::vector<double>& d) {
  if (d.empty()) return {};
  double lo = d[0], hi = d[0];
  for (double v : d) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> w(d.size(), 1.0);
  if (hi == lo) return w;
  for (std::size_t i = 0; i < d.size(); ++i) w[i] = 1.0 - (d[i] - lo) / (hi - lo);
  return w;
}

namespace {

struct Sums {
  double wxg = 0.0;
  double wout = 0.0;
};

Sums weighted_sums(const std::vector<const LedgerEntry*>& entries,
                   const std::vector<double>& weights) {
  Sums s;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    s.wxg += weights[i] * entries[i]->xg;
    s.wout += weights[i] * entries[i]->outcome;
  }
  return s;
}

double ref_above(const Sums& s, Role role) {
  const double d = s.wout - s.wxg;
  return role == Role::Shooter ? d : -d;
}

double ref_talent(const Sums& s, Role role) {
  if (role == Role::Shooter) {
    if (s.wxg == 0.0) return 0.0;
    return s.wout / s.wxg;
  }
  if (s.wout == 0.0) return 0.0;
  return s.wxg / s.wout;
}

std::vector<double> ref_weights(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return w;
}

}  // namespace

RefSkillSide ref_skill_side(const std::vector<LedgerEntry>& entries, Role role,
                            BinId shot_bin, const GowerSubset& shot_gower,
                            const GowerRanges& ranges) {
  RefSkillSide out;
  const std::size_t n = entries.size();
  if (n == 0) return out;

  std::vector<const LedgerEntry*> all;
  for (const LedgerEntry& e : entries) all.push_back(&e);
  const std::vector<double> recency = ref_weights(n);

  std::vector<const LedgerEntry*> in_bin;
  for (const LedgerEntry& e : entries)
    if (e.bin == shot_bin) in_bin.push_back(&e);
  const std::vector<double> bin_w = ref_weights(in_bin.size());

  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i)
    dist[i] = ref_gower(entries[i].gower, shot_gower, ranges);
  const std::vector<double> sim = ref_inverse_normalize(dist);
  std::vector<double> situational_w(n);
  for (std::size_t i = 0; i < n; ++i) situational_w[i] = recency[i] * sim[i];

  const Sums total = weighted_sums(all, recency);
  const Sums locational = weighted_sums(in_bin, bin_w);
  const Sums situational = weighted_sums(all, situational_w);

  out.above_expected = ref_above(total, role) + ref_above(locational, role) +
                       ref_above(situational, role);
  out.talent = ref_talent(total, role) + ref_talent(locational, role) +
               ref_talent(situational, role);
  return out;
}

double ref_auc(const std::vector<double>& preds,
               const std::vector<int>& labels) {
  double wins = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (preds[i] > preds[j])
        wins += 1.0;
      else if (preds[i] == preds[j])
        wins += 0.5;
    }
  }
  if (pairs == 0) throw std::runtime_error("single-class labels");
  return wins / static_cast<double>(pairs);
}

namespace {

// Minimizes sum(g_i w + h_i w^2/2) + lambda w^2/2 by ternary search on the
// convex objective, then returns the attained minimum.
double leaf_min_objective(double G, double H, double lambda) {
  auto obj = [&](double w) { return G * w + 0.5 * (H + lambda) * w * w; };
  double lo = -1e3, hi = 1e3;
  for (int it = 0; it < 300; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (obj(m1) < obj(m2))
      hi = m2;
    else
      lo = m1;
  }
  return obj(0.5 * (lo + hi));
}

}  // namespace

double ref_best_split_gain(const std::vector<double>& x,
                           const std::vector<double>& g,
                           const std::vector<double>& h, double lambda,
                           int min_leaf) {
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  double G = 0.0, H = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    G += g[i];
    H += h[i];
  }
  const double parent = leaf_min_objective(G, H, lambda);

  double best = 0.0;
  double GL = 0.0, HL = 0.0;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    GL += g[order[k]];
    HL += h[order[k]];
    if (x[order[k]] == x[order[k + 1]]) continue;  // no threshold here
    const std::size_t n_left = k + 1;
    const std::size_t n_right = order.size() - n_left;
    if (n_left < static_cast<std::size_t>(min_leaf) ||
        n_right < static_cast<std::size_t>(min_leaf))
      continue;
    const double child =
        leaf_min_objective(GL, HL, lambda) +
        leaf_min_objective(G - GL, H - HL, lambda);
    best = std::max(best, parent - child);
  }
  return best;
}

GowerSubset random_subset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> xd(25.0, 100.0);
  std::uniform_real_distribution<double> yd(-42.5, 42.5);
  std::uniform_real_distribution<double> dd(0.0, 80.0);
  std::uniform_real_distribution<double> ad(0.0, 180.0);
  static const char* kEvents[] = {"SHOT", "HIT", "FACEOFF", "GIVEAWAY"};
  static const char* kTypes[] = {"Wrist", "Slap", "Snap", "Backhand"};

  GowerSubset s;
  if (unit(rng) > 0.1) s.is_strong_side = unit(rng) < 0.5;
  if (unit(rng) > 0.1)
    s.last_event = kEvents[static_cast<int>(unit(rng) * 4) % 4];
  s.shot_type = kTypes[static_cast<int>(unit(rng) * 4) % 4];
  s.schuckers_x = xd(rng);
  s.schuckers_y = yd(rng);
  s.schuckers_dist = dd(rng);
  s.schuckers_angle = ad(rng);
  s.rebound = unit(rng) < 0.1;
  s.fastbreak = unit(rng) < 0.15;
  return s;
}

LedgerEntry random_entry(std::mt19937_64& rng, int serial) {
  std::uniform_real_distribution<double> xg(0.01, 0.6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> bin(0, 9);

  LedgerEntry e;
  e.game_date =
      fmt::format("2019-{:02d}-{:02d}", 1 + serial / 28, 1 + serial % 28);
  e.game_id = fmt::format("201902{:04d}", serial);
  e.event_index = serial;
  e.xg = xg(rng);
  e.outcome = unit(rng) < e.xg ? 1 : 0;
  e.bin = static_cast<BinId>(bin(rng));
  e.gower = random_subset(rng);
  return e;
}

SkillLedger random_ledger(std::size_t n, Role role, std::mt19937_64& rng) {
  SkillLedger ledger;
  ledger.player_id = role == Role::Shooter ? "S1" : "G1";
  ledger.role = role;
  for (std::size_t i = 0; i < n; ++i)
    ledger.entries.push_back(random_entry(rng, static_cast<int>(i)));
  return ledger;
}

std::vector<RawEvent> fixture_game(const std::string& game_id,
                                   const std::string& date,
                                   const std::vector<EventSpec>& specs) {
  std::vector<RawEvent> events;
  int goals_home = 0, goals_away = 0;
  for (const EventSpec& spec : specs) {
    RawEvent e;
    e.season = std::atoi(game_id.substr(0, 4).c_str());
    e.game_id = game_id;
    e.game_date = date;
    e.event_index = spec.event_index;
    e.event_type = spec.type;
    e.period = spec.period;
    e.period_time_s = spec.period_time_s;
    e.game_time_s = (spec.period - 1) * 1200 + spec.period_time_s;
    e.team = spec.team;
    e.home_team = "HOME";
    e.arena_id = "RINK1";
    e.x = spec.x;
    e.y = spec.y;
    e.strength = "5v5";
    e.score_home = goals_home;
    e.score_away = goals_away;
    if (spec.type == EventType::Shot || spec.type == EventType::Goal ||
        spec.type == EventType::Miss) {
      e.shot_type = spec.shot_type;
      e.shooter_id = spec.shooter;
      e.goalie_id = spec.goalie;
      e.shooter_handedness = Handedness::Left;
    }
    if (spec.type == EventType::Goal) {
      if (spec.team == "HOME")
        ++goals_home;
      else
        ++goals_away;
    }
    events.push_back(std::move(e));
  }
  return events;
}

TempDir::TempDir() {
  char tmpl[] = "/tmp/xgtest_XXXXXX";
  path_ = mkdtemp(tmpl);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace xg::testsup
