#include "xg/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <fmt/core.h>

#include "xg/geometry.hpp"

namespace xg::synth {

namespace {

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

std::string date_string(int season, int day_offset) {
  using namespace std::chrono;
  const sys_days start = sys_days(year{season} / October / 1);
  const year_month_day ymd{start + days{day_offset}};
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

// Location-only goal logit; roughly 7% goal rate over the sampled
// distance/angle mix before skill multipliers.
double base_logit(double dist, double angle_rad, int shot_type) {
  static constexpr double kTypeShift[] = {0.0,  -0.15, 0.1, -0.3,
                                          0.35, -0.2,  0.15};
  return 0.75 - 0.105 * dist - 0.9 * std::abs(angle_rad) +
         kTypeShift[shot_type];
}

struct PendingEvent {
  int game_time_s = 0;
  int order = 0;  // generation order, breaks same-second ties
  RawEvent event;
  bool is_goal = false;
  bool home_side = false;
};

}  // namespace

SynthCorpus generate(const SynthParams& params) {
  if (params.n_teams < 2) throw Error("need at least 2 teams");
  if (params.games_per_season < 1) throw Error("need at least 1 game");

  SynthCorpus corpus;
  std::mt19937_64 rng(params.seed);

  static const char* kShotTypes[] = {"Wrist",       "Slap",      "Snap",
                                     "Backhand",    "Tip-In",    "Deflected",
                                     "Wrap-around"};
  const std::vector<double> type_weights = {0.45, 0.13, 0.15, 0.08,
                                            0.09, 0.06, 0.04};
  std::discrete_distribution<int> type_dist(type_weights.begin(),
                                            type_weights.end());

  std::vector<std::string> teams, arenas;
  for (int t = 0; t < params.n_teams; ++t) {
    teams.push_back(fmt::format("T{:02d}", t + 1));
    arenas.push_back(fmt::format("ARENA{:02d}", t + 1));
  }

  std::normal_distribution<double> shooter_skill(0.0, params.shooter_sigma);
  std::normal_distribution<double> goalie_skill(0.0, params.goalie_sigma);
  std::normal_distribution<double> arena_bias(0.0, params.arena_x_bias_sigma);
  std::bernoulli_distribution left_handed(0.7);

  std::vector<std::vector<std::string>> team_shooters(
      static_cast<std::size_t>(params.n_teams));
  std::vector<std::vector<std::string>> team_goalies(
      static_cast<std::size_t>(params.n_teams));
  std::map<std::string, Handedness> handedness;
  int shooter_seq = 0;
  int goalie_seq = 0;
  for (int t = 0; t < params.n_teams; ++t) {
    for (int k = 0; k < params.shooters_per_team; ++k) {
      const std::string id = fmt::format("S{:03d}", ++shooter_seq);
      corpus.shooter_multiplier[id] = std::exp(shooter_skill(rng));
      handedness[id] = left_handed(rng) ? Handedness::Left : Handedness::Right;
      team_shooters[static_cast<std::size_t>(t)].push_back(id);
    }
    for (int k = 0; k < params.goalies_per_team; ++k) {
      const std::string id = fmt::format("G{:03d}", ++goalie_seq);
      corpus.goalie_multiplier[id] = std::exp(goalie_skill(rng));
      team_goalies[static_cast<std::size_t>(t)].push_back(id);
    }
    corpus.arena_x_bias[arenas[static_cast<std::size_t>(t)]] = arena_bias(rng);
  }

  std::poisson_distribution<int> shots_per_game(params.mean_shots_per_game);
  std::uniform_int_distribution<int> period_dist(1, 3);
  std::uniform_int_distribution<int> period_time_dist(1, 1199);
  std::bernoulli_distribution home_shot(0.5);
  std::bernoulli_distribution starter_plays(0.85);
  std::bernoulli_distribution even_strength(0.93);
  std::bernoulli_distribution shot_has_fields(0.98);
  std::bernoulli_distribution filler_has_coords(0.8);
  std::normal_distribution<double> dist_sample(34.0, 16.0);
  std::normal_distribution<double> angle_sample(0.0, 0.55);
  const std::vector<double> filler_weights = {0.35, 0.2, 0.2, 0.1, 0.1, 0.05};
  std::discrete_distribution<int> filler_type(filler_weights.begin(),
                                              filler_weights.end());
  static const EventType kFillerTypes[] = {EventType::Miss, EventType::Hit,
                                           EventType::Block,
                                           EventType::Giveaway,
                                           EventType::Takeaway,
                                           EventType::Faceoff};

  // usage gradient: lower roster slots shoot less and churn more
  std::vector<double> shot_share(
      static_cast<std::size_t>(params.shooters_per_team));
  for (std::size_t k = 0; k < shot_share.size(); ++k)
    shot_share[k] = std::pow(params.shot_share_decay, double(k));
  std::discrete_distribution<std::size_t> shooter_slot(shot_share.begin(),
                                                       shot_share.end());
  auto churn_scale = [](std::size_t slot, std::size_t roster) {
    const double frac = roster > 1 ? double(slot) / double(roster - 1) : 0.0;
    return 0.4 + 1.2 * frac;
  };

  for (int season_i = 0; season_i < params.n_seasons; ++season_i) {
    const int season = params.first_season + season_i;
    if (season_i > 0) {
      // offseason roster churn: retirees are replaced by fresh players
      for (int t = 0; t < params.n_teams; ++t) {
        auto& shooters = team_shooters[static_cast<std::size_t>(t)];
        for (std::size_t k = 0; k < shooters.size(); ++k) {
          const double p = std::min(
              0.95, params.shooter_turnover * churn_scale(k, shooters.size()));
          if (!std::bernoulli_distribution(p)(rng)) continue;
          shooters[k] = fmt::format("S{:03d}", ++shooter_seq);
          corpus.shooter_multiplier[shooters[k]] = std::exp(shooter_skill(rng));
          handedness[shooters[k]] =
              left_handed(rng) ? Handedness::Left : Handedness::Right;
        }
        auto& goalies = team_goalies[static_cast<std::size_t>(t)];
        for (std::size_t k = 0; k < goalies.size(); ++k) {
          const double p = std::min(
              0.95, params.goalie_turnover * churn_scale(k, goalies.size()));
          if (!std::bernoulli_distribution(p)(rng)) continue;
          goalies[k] = fmt::format("G{:03d}", ++goalie_seq);
          corpus.goalie_multiplier[goalies[k]] = std::exp(goalie_skill(rng));
        }
      }
    }
    for (int g = 0; g < params.games_per_season; ++g) {
      const int home = g % params.n_teams;
      const int away =
          (home + 1 + (g / params.n_teams) % (params.n_teams - 1)) %
          params.n_teams;
      const std::string game_id = fmt::format("{:04d}02{:04d}", season, g + 1);
      const std::string game_date = date_string(
          season, g * 180 / params.games_per_season);
      const std::string& home_team = teams[static_cast<std::size_t>(home)];
      const std::string& away_team = teams[static_cast<std::size_t>(away)];
      const std::string& arena = arenas[static_cast<std::size_t>(home)];
      const double bias = corpus.arena_x_bias[arena];

      // home attacks +x in odd periods, away in the even period
      for (int p = 1; p <= 3; ++p) {
        corpus.directions.set(game_id, p, home_team, p % 2 == 1);
        corpus.directions.set(game_id, p, away_team, p % 2 == 0);
      }

      const std::string& home_goalie =
          team_goalies[static_cast<std::size_t>(home)]
                      [starter_plays(rng) ? 0 : 1];
      const std::string& away_goalie =
          team_goalies[static_cast<std::size_t>(away)]
                      [starter_plays(rng) ? 0 : 1];

      std::vector<PendingEvent> pending;
      int order = 0;

      for (int p = 1; p <= 3; ++p) {
        PendingEvent faceoff;
        faceoff.game_time_s = (p - 1) * 1200;
        faceoff.order = order++;
        faceoff.event.event_type = EventType::Faceoff;
        faceoff.event.period = p;
        faceoff.event.period_time_s = 0;
        faceoff.event.game_time_s = faceoff.game_time_s;
        faceoff.event.team = home_team;
        faceoff.event.x = 0.0;
        faceoff.event.y = 0.0;
        faceoff.event.strength = "5v5";
        pending.push_back(std::move(faceoff));
      }

      const int n_shots = std::max(2, shots_per_game(rng));
      for (int s = 0; s < n_shots; ++s) {
        const bool is_home = home_shot(rng);
        const int shooting = is_home ? home : away;
        const std::string& shooter =
            team_shooters[static_cast<std::size_t>(shooting)]
                         [shooter_slot(rng)];
        const std::string& goalie = is_home ? away_goalie : home_goalie;

        const double dist =
            std::clamp(std::abs(dist_sample(rng)), 2.0, 72.0);
        const double theta = std::clamp(angle_sample(rng), -1.25, 1.25);
        const int shot_type = type_dist(rng);

        double logit = base_logit(dist, theta, shot_type);
        logit *= corpus.shooter_multiplier.at(shooter);
        logit *= corpus.goalie_multiplier.at(goalie);
        const bool goal =
            std::bernoulli_distribution(sigmoid(logit))(rng);

        // attack-frame location; a slice lands below the goal line
        const double x_attack =
            std::clamp(rink::kGoalLineX - dist * std::cos(theta), 25.2, 98.5);
        const double y_attack =
            std::clamp(dist * std::sin(theta), -42.0, 42.0);

        PendingEvent shot;
        shot.is_goal = goal;
        shot.home_side = is_home;
        const int period = period_dist(rng);
        shot.game_time_s = (period - 1) * 1200 + period_time_dist(rng);
        shot.order = order++;
        RawEvent& e = shot.event;
        e.event_type = goal ? EventType::Goal : EventType::Shot;
        e.period = period;
        e.period_time_s = shot.game_time_s - (period - 1) * 1200;
        e.game_time_s = shot.game_time_s;
        e.team = is_home ? home_team : away_team;
        e.strength = even_strength(rng) ? "5v5" : (is_home ? "5v4" : "4v5");

        // rink-frame coordinates, then the arena's recorded-x drift
        const bool attacks_positive = period % 2 == (is_home ? 1 : 0);
        double x_rink = attacks_positive ? x_attack : -x_attack;
        double y_rink = attacks_positive ? y_attack : -y_attack;
        x_rink += bias * (x_rink >= 0.0 ? 1.0 : -1.0);
        x_rink = std::clamp(x_rink, -99.5, 99.5);
        e.x = x_rink;
        e.y = y_rink;

        if (shot_has_fields(rng)) {
          e.shot_type = kShotTypes[shot_type];
          e.shooter_id = shooter;
          e.goalie_id = goalie;
          e.shooter_handedness = handedness.at(shooter);
        }
        pending.push_back(std::move(shot));
      }

      const int n_filler = std::poisson_distribution<int>(
          params.offgoal_event_rate * n_shots)(rng);
      for (int f = 0; f < n_filler; ++f) {
        PendingEvent filler;
        const int period = period_dist(rng);
        filler.game_time_s = (period - 1) * 1200 + period_time_dist(rng);
        filler.order = order++;
        RawEvent& e = filler.event;
        e.event_type = kFillerTypes[filler_type(rng)];
        e.period = period;
        e.period_time_s = filler.game_time_s - (period - 1) * 1200;
        e.game_time_s = filler.game_time_s;
        e.team = home_shot(rng) ? home_team : away_team;
        e.strength = "5v5";
        if (filler_has_coords(rng)) {
          e.x = std::uniform_real_distribution<double>(-98.0, 98.0)(rng);
          e.y = std::uniform_real_distribution<double>(-42.0, 42.0)(rng);
        }
        pending.push_back(std::move(filler));
      }

      std::sort(pending.begin(), pending.end(),
                [](const PendingEvent& a, const PendingEvent& b) {
                  if (a.game_time_s != b.game_time_s)
                    return a.game_time_s < b.game_time_s;
                  return a.order < b.order;
                });

      int score_home = 0;
      int score_away = 0;
      int event_index = 0;
      for (PendingEvent& p : pending) {
        RawEvent& e = p.event;
        e.season = season;
        e.game_id = game_id;
        e.game_date = game_date;
        e.event_index = ++event_index;
        e.home_team = home_team;
        e.arena_id = arena;
        e.score_home = score_home;
        e.score_away = score_away;
        if (p.is_goal) (p.home_side ? score_home : score_away) += 1;
        corpus.events.push_back(std::move(e));
      }
    }
  }
  return corpus;
}

}  // namespace xg::synth
