#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xg/ingest.hpp"
#include "xg/types.hpp"

namespace xg::synth {

// Seeded planted-skill corpus generator. Shots carry a location-dependent
// base goal probability; every shooter and goalie gets a persistent
// multiplier m ~ LogNormal(0, sigma) applied on the log-odds scale. Recorded
// coordinates optionally drift per arena to exercise the venue adjustments.
struct SynthParams {
  int n_seasons = 3;
  int first_season = 2018;
  int games_per_season = 400;
  int n_teams = 12;
  int shooters_per_team = 10;
  int goalies_per_team = 2;
  double mean_shots_per_game = 50.0;  // on-goal 5v5 shots
  double shooter_sigma = 0.25;        // LogNormal(0, sigma) multipliers
  double goalie_sigma = 0.25;
  double shooter_turnover = 0.12;     // mean per-season replacement rates;
  double goalie_turnover = 0.08;      // depth slots churn more than stars
  double shot_share_decay = 0.87;     // usage gradient across roster slots
  double arena_x_bias_sigma = 1.5;  // feet, per-arena recorded-x shift
  double offgoal_event_rate = 1.2;  // non-shot events per shot
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  std::vector<RawEvent> events;  // chronological, all games
  DirectionTable directions;
  // planted LogNormal multipliers, applied to the shot's log-odds; m < 1
  // raises scoring odds on typical (negative-logit) shots
  std::map<std::string, double> shooter_multiplier;
  std::map<std::string, double> goalie_multiplier;
  std::map<std::string, double> arena_x_bias;
};

SynthCorpus generate(const SynthParams& params);

}  // namespace xg::synth
