#pragma once

#include "spg/game.hpp"

namespace spg {

enum class AblationMode {
  // Adds c * L_i(a_{-i}) with L_i independent of agent i's own action. The
  // base potential still certifies the game.
  kNoncoopPotential,
  // Adds a cyclic coupling -c * a_i[0] * sin(a_{i+1}[0]) that admits no
  // potential; checks against the base potential are expected to fail.
  kNonPotential,
};

struct AblationConfig {
  AblationMode mode = AblationMode::kNoncoopPotential;
  double c = 0.0;  // c = 0 reproduces the base game exactly
};

AblationMode ablation_mode_from_name(const std::string& name);
std::string ablation_mode_name(AblationMode mode);

GameSpec ablate(const GameSpec& base, const AblationConfig& cfg);

// Team variant: every agent is paid the base game's potential, which is then
// trivially the exact potential. Reward derivatives fall back to central
// finite differences of the potential.
GameSpec team_game(const GameSpec& base);

}  // namespace spg
