#include "latentga/fgsm.hpp"

#include "latentga/errors.hpp"

#include <chrono>
#include <cmath>

namespace latentga {

void FgsmConfig::validate() const {
    if (epsilon < 0.0) throw ConfigError("fgsm: epsilon must be >= 0");
    if (mode == AttackMode::Targeted && (target_class < 0 || target_class > 9))
        throw ConfigError("fgsm: target_class must be in 0..9");
}

Tensor fgsm(const Classifier& clf, const Tensor& x, int true_label, const FgsmConfig& cfg) {
    cfg.validate();
    const bool targeted = cfg.mode == AttackMode::Targeted;
    const std::size_t label = targeted ? static_cast<std::size_t>(cfg.target_class)
                                       : static_cast<std::size_t>(true_label);
    const Tensor grad = nn::input_gradient(clf.net, x, label);
    const double step = targeted ? -cfg.epsilon : cfg.epsilon;
    Tensor out = x;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double g = grad.data[i];
        const double sign = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        out.data[i] = std::min(1.0, std::max(0.0, out.data[i] + step * sign));
    }
    return out;
}

AttackResult run_fgsm(const Classifier& clf, const Tensor& x, int true_label,
                      const FgsmConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    AttackResult r;
    r.seed_image = x;
    r.true_label = true_label;
    r.attack_image = fgsm(clf, x, true_label, cfg);
    r.confidence = predict_proba(clf, r.attack_image);
    r.predicted_label = predict_label(clf, r.attack_image);
    r.success = cfg.mode == AttackMode::Untargeted ? r.predicted_label != true_label
                                                   : r.predicted_label == cfg.target_class;
    r.ps = l2_norm(sub(r.attack_image, x));
    r.sd = 0.0;
    r.ap = cfg.mode == AttackMode::Untargeted
               ? attack_performance_untargeted(true_label, r.confidence)
               : attack_performance_targeted(cfg.target_class, r.confidence);
    r.fitness = r.ap;
    r.generations_used = 0;
    const auto t1 = std::chrono::steady_clock::now();
    r.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return r;
}

SweepPick pick_epsilon(const std::vector<double>& sweep, const std::vector<double>& success_rates,
                       double target_success_rate) {
    if (sweep.empty() || sweep.size() != success_rates.size())
        throw ConfigError("pick_epsilon: sweep and success rates must be non-empty and aligned");
    SweepPick pick;
    std::size_t fallback = 0;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (success_rates[i] >= target_success_rate) {
            pick.epsilon = sweep[i];
            pick.success_rate = success_rates[i];
            pick.reached_target = true;
            return pick;
        }
        if (success_rates[i] > success_rates[fallback]) fallback = i;
    }
    pick.epsilon = sweep[fallback];
    pick.success_rate = success_rates[fallback];
    pick.reached_target = false;
    return pick;
}

std::vector<double> default_epsilon_sweep() { return {0.05, 0.1, 0.15, 0.2, 0.25, 0.3}; }

} // namespace latentga
