#pragma once

#include "latentga/attack.hpp"
#include "latentga/models.hpp"

#include <vector>

namespace latentga {

/// Single-step sign-gradient baseline.
struct FgsmConfig {
    double epsilon = 0.1;  // per-pixel step
    AttackMode mode = AttackMode::Untargeted;
    int target_class = 0;

    void validate() const;
};

/// Untargeted: clip(x + eps * sign(dL(x, y)/dx), 0, 1).
/// Targeted:   clip(x - eps * sign(dL(x, target)/dx), 0, 1).
Tensor fgsm(const Classifier& clf, const Tensor& x, int true_label, const FgsmConfig& cfg);

/// Attack one seed and package the outcome in the shared result record
/// (ps here is the pixel-space L2 against the original; sd stays 0).
AttackResult run_fgsm(const Classifier& clf, const Tensor& x, int true_label,
                      const FgsmConfig& cfg);

/// Epsilon selection for the comparison protocol: the smallest value in
/// `sweep` whose success rate reaches `target_success_rate`, or the
/// highest-success epsilon when none does.
struct SweepPick {
    double epsilon = 0.0;
    double success_rate = 0.0;
    bool reached_target = false;
};
SweepPick pick_epsilon(const std::vector<double>& sweep, const std::vector<double>& success_rates,
                       double target_success_rate);

/// Standard sweep grid used by the comparison runs.
std::vector<double> default_epsilon_sweep();

} // namespace latentga
