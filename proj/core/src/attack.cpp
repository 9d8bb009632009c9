#include "latentga/attack.hpp"

#include "latentga/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace latentga {

const char* attack_mode_name(AttackMode m) {
    return m == AttackMode::Untargeted ? "untargeted" : "targeted";
}

AttackMode attack_mode_from_name(const std::string& name) {
    if (name == "untargeted") return AttackMode::Untargeted;
    if (name == "targeted") return AttackMode::Targeted;
    throw ConfigError("unknown attack mode '" + name + "' (use untargeted|targeted)");
}

void AttackConfig::validate() const {
    if (population < 1) throw ConfigError("population must be >= 1");
    if (elitists >= population)
        throw ConfigError("elitists (" + std::to_string(elitists) + ") must be < population (" +
                          std::to_string(population) + ")");
    if (crossover_rate < 0.0 || crossover_rate > 1.0) throw ConfigError("crossover_rate must be in [0,1]");
    if (mutation_rate < 0.0 || mutation_rate > 1.0) throw ConfigError("mutation_rate must be in [0,1]");
    if (init_max < 0.0) throw ConfigError("init_max must be >= 0");
    if (step_size <= 0.0) throw ConfigError("step_size must be > 0");
    if (generations < 1) throw ConfigError("generations must be >= 1");
    if (mode == AttackMode::Targeted && (target_class < 0 || target_class > 9))
        throw ConfigError("target_class must be in 0..9");
    if (alpha < 0.0 || beta < 0.0) throw ConfigError("alpha and beta must be >= 0");
}

namespace {

std::size_t argmax_lowest(const double* p, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

double second_max(const double* p, std::size_t n, std::size_t max_index) {
    double second = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == max_index) continue;
        if (p[i] > second) second = p[i];
    }
    return second;
}

double ap_from_probs(const double* p, std::size_t n, AttackMode mode, int true_label,
                     int target_class, int* predicted_out, bool* success_out) {
    const std::size_t top = argmax_lowest(p, n);
    const double margin = p[top] - second_max(p, n, top);
    const int predicted = static_cast<int>(top);
    if (predicted_out) *predicted_out = predicted;
    if (mode == AttackMode::Untargeted) {
        const bool wrong = predicted != true_label;
        if (success_out) *success_out = wrong;
        return wrong ? margin : -margin;
    }
    const bool hit = predicted == target_class;
    if (success_out) *success_out = hit;
    return hit ? margin : -(p[top] - p[static_cast<std::size_t>(target_class)]);
}

/// Per-seed evaluation state: the latent code and the decoded seed are
/// fixed for the whole run.
struct SeedContext {
    const Autoencoder* ae;
    const TargetQuery* target;
    Tensor latent;          // h = encode(x)
    Tensor reconstruction;  // decode(h)
    int true_label;
    AttackConfig config;

    SeedContext(const Autoencoder& a, const TargetQuery& t, const Tensor& x, int y,
                const AttackConfig& cfg)
        : ae(&a), target(&t), latent(encode(a, x)), reconstruction(decode(a, latent)),
          true_label(y), config(cfg) {}

    Evaluation evaluate_decoded(const Tensor& genes, const Tensor& decoded,
                                const Tensor& probs) const {
        Evaluation e;
        e.confidence = probs;
        e.ap = ap_from_probs(probs.data.data(), probs.size(), config.mode, true_label,
                             config.target_class, &e.predicted, &e.success);
        e.ps = l2_norm(sub(decoded, reconstruction));
        e.sd = l2_norm(genes);
        e.fitness = e.success ? e.ap - e.ps * config.alpha - e.sd * config.beta : e.ap;
        return e;
    }

    Evaluation evaluate(const Tensor& genes) const {
        const Tensor decoded = decode(*ae, add(latent, genes));
        return evaluate_decoded(genes, decoded, target->probabilities(decoded));
    }

    /// Fill caches for every chromosome that lacks one. All pending rows
    /// are decoded and queried as one batch; per-row arithmetic is
    /// identical to the single-sample path, so results match it bitwise
    /// and merge in population index order by construction.
    void evaluate_population(std::vector<Chromosome>& pop) const {
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < pop.size(); ++i)
            if (!pop[i].cached) pending.push_back(i);
        if (pending.empty()) return;

        Tensor codes = Tensor::zeros(pending.size(), latent.size());
        for (std::size_t r = 0; r < pending.size(); ++r) {
            const Tensor& genes = pop[pending[r]].genes;
            if (genes.size() != latent.size())
                throw ShapeError("chromosome has " + std::to_string(genes.size()) +
                                 " genes, latent dimension is " + std::to_string(latent.size()));
            double* row = codes.row(r);
            for (std::size_t j = 0; j < latent.size(); ++j) row[j] = latent.data[j] + genes.data[j];
        }
        const Tensor decoded = decode(*ae, codes);
        const Tensor probs = target->probabilities(decoded);

        Tensor one_image = Tensor::zeros(decoded.shape[1]);
        Tensor one_probs = Tensor::zeros(probs.shape[1]);
        for (std::size_t r = 0; r < pending.size(); ++r) {
            std::copy(decoded.row(r), decoded.row(r) + decoded.shape[1], one_image.data.begin());
            std::copy(probs.row(r), probs.row(r) + probs.shape[1], one_probs.data.begin());
            pop[pending[r]].cached = evaluate_decoded(pop[pending[r]].genes, one_image, one_probs);
        }
    }
};

std::size_t roulette_draw(const std::vector<double>& weights, double total, Rng& rng) {
    const double u = rng.next_double() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (u < cum) return i;
    }
    return weights.size() - 1;
}

std::vector<std::size_t> fitness_ranking(const std::vector<Chromosome>& population) {
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double fa = population[a].cached->fitness;
        const double fb = population[b].cached->fitness;
        if (fa != fb) return fa > fb;
        return a < b;
    });
    return order;
}

} // namespace

Tensor build_attack(const Autoencoder& ae, const Tensor& x, const Chromosome& c) {
    return decode(ae, add(encode(ae, x), c.genes));
}

double perturbation_size(const Autoencoder& ae, const Tensor& x, const Chromosome& c) {
    const Tensor h = encode(ae, x);
    return l2_norm(sub(decode(ae, add(h, c.genes)), decode(ae, h)));
}

double semantic_distance(const Chromosome& c) { return l2_norm(c.genes); }

double attack_performance_untargeted(int true_label, const Tensor& p) {
    return ap_from_probs(p.data.data(), p.size(), AttackMode::Untargeted, true_label, 0, nullptr,
                         nullptr);
}

double attack_performance_targeted(int target_class, const Tensor& p) {
    return ap_from_probs(p.data.data(), p.size(), AttackMode::Targeted, -1, target_class, nullptr,
                         nullptr);
}

double fitness(const Autoencoder& ae, const TargetQuery& target, const Tensor& x, int true_label,
               Chromosome& c, const AttackConfig& config) {
    config.validate();
    const SeedContext ctx(ae, target, x, true_label, config);
    c.cached = ctx.evaluate(c.genes);
    return c.cached->fitness;
}

std::vector<Chromosome> init_population(const AttackConfig& config, std::size_t latent_dim, Rng& rng) {
    std::vector<Chromosome> pop(config.population);
    for (auto& c : pop) {
        c.genes = Tensor::zeros(latent_dim);
        for (auto& g : c.genes.data) {
            g = rng.uniform(0.0, config.init_max);
            if (config.signed_init && rng.bernoulli(0.5)) g = -g;
        }
    }
    return pop;
}

Selection select(const std::vector<Chromosome>& population, const AttackConfig& config, Rng& rng) {
    if (population.empty()) throw ConfigError("select: empty population");
    for (const auto& c : population)
        if (!c.cached) throw ContractError("select: population must be evaluated first");

    Selection sel;
    const std::vector<std::size_t> order = fitness_ranking(population);
    sel.elite.assign(order.begin(), order.begin() + std::min(config.elitists, order.size()));

    double min_fit = population[order.back()].cached->fitness;
    std::vector<double> weights(population.size());
    double total = 0.0;
    for (std::size_t i = 0; i < population.size(); ++i) {
        weights[i] = population[i].cached->fitness - min_fit + 1e-6;
        total += weights[i];
    }

    const std::size_t children_needed = config.population - sel.elite.size();
    const std::size_t pairs = (children_needed + 1) / 2;
    sel.parents.reserve(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::size_t a = roulette_draw(weights, total, rng);
        const std::size_t b = roulette_draw(weights, total, rng);
        sel.parents.emplace_back(a, b);
    }
    return sel;
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b,
                                            const AttackConfig& config, Rng& rng) {
    if (a.genes.size() != b.genes.size())
        throw ShapeError("crossover: gene lengths disagree, " + std::to_string(a.genes.size()) +
                         " vs " + std::to_string(b.genes.size()));
    Chromosome c1{a.genes, std::nullopt};
    Chromosome c2{b.genes, std::nullopt};
    const std::size_t len = a.genes.size();
    if (len >= 2 && rng.bernoulli(config.crossover_rate)) {
        const std::size_t cut = 1 + rng.next_below(len - 1);
        for (std::size_t i = cut; i < len; ++i) std::swap(c1.genes.data[i], c2.genes.data[i]);
    }
    return {std::move(c1), std::move(c2)};
}

Chromosome mutate(const Chromosome& c, const AttackConfig& config, Rng& rng) {
    Chromosome out{c.genes, c.cached};
    bool changed = false;
    for (auto& g : out.genes.data) {
        if (rng.bernoulli(config.mutation_rate)) {
            g += rng.bernoulli(0.5) ? -config.step_size : config.step_size;
            changed = true;
        }
    }
    if (changed) out.cached.reset();
    return out;
}

std::vector<Chromosome> next_generation(const std::vector<Chromosome>& population,
                                        const AttackConfig& config, Rng& rng) {
    const Selection sel = select(population, config, rng);
    std::vector<Chromosome> next;
    next.reserve(config.population);
    for (std::size_t idx : sel.elite) next.push_back(population[idx]);
    for (const auto& [pa, pb] : sel.parents) {
        auto [c1, c2] = crossover(population[pa], population[pb], config, rng);
        if (next.size() < config.population) next.push_back(mutate(c1, config, rng));
        if (next.size() < config.population) next.push_back(mutate(c2, config, rng));
    }
    return next;
}

AttackResult run_attack(const Autoencoder& ae, const TargetQuery& target, const Tensor& x,
                        int true_label, const AttackConfig& config) {
    config.validate();
    if (config.mode == AttackMode::Targeted &&
        static_cast<std::size_t>(config.target_class) >= 10)
        throw ConfigError("target_class out of range");

    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(config.rng_seed);
    const SeedContext ctx(ae, target, x, true_label, config);

    std::vector<Chromosome> pop = init_population(config, ctx.latent.size(), rng);

    AttackResult result;
    result.seed_image = x;
    result.true_label = true_label;
    result.reconstruction = ctx.reconstruction;

    Chromosome best_overall;
    Chromosome best_success;
    bool have_success = false;
    std::size_t stale = 0;

    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        ctx.evaluate_population(pop);

        const double prev_success_fitness =
            have_success ? best_success.cached->fitness : -std::numeric_limits<double>::infinity();
        double gen_best = pop[0].cached->fitness;
        for (const auto& c : pop) {
            const Evaluation& e = *c.cached;
            gen_best = std::max(gen_best, e.fitness);
            if (!best_overall.cached || e.fitness > best_overall.cached->fitness) best_overall = c;
            if (e.success && (!have_success || e.fitness > best_success.cached->fitness)) {
                best_success = c;
                have_success = true;
            }
        }
        result.fitness_trace.push_back(gen_best);
        result.generations_used = gen;

        if (config.early_stop_patience > 0 && have_success) {
            stale = best_success.cached->fitness > prev_success_fitness ? 0 : stale + 1;
            if (stale >= config.early_stop_patience) break;
        }

        if (gen < config.generations) pop = next_generation(pop, config, rng);
    }

    const Chromosome& winner = have_success ? best_success : best_overall;
    result.genes = winner.genes;
    result.attack_image = decode(ae, add(ctx.latent, winner.genes));

    // Success is re-verified with a fresh query, independent of caches.
    const Tensor probs = target->probabilities(result.attack_image);
    Evaluation final_eval = ctx.evaluate_decoded(winner.genes, result.attack_image, probs);
    result.predicted_label = final_eval.predicted;
    result.confidence = std::move(final_eval.confidence);
    result.ps = final_eval.ps;
    result.sd = final_eval.sd;
    result.ap = final_eval.ap;
    result.fitness = final_eval.fitness;
    result.success = final_eval.success;

    const auto t1 = std::chrono::steady_clock::now();
    result.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return result;
}

AttackResult run_attack(const Autoencoder& ae, const Classifier& clf, const Tensor& x,
                        int true_label, const AttackConfig& config) {
    const TargetQuery target(clf);
    return run_attack(ae, target, x, true_label, config);
}

namespace {
void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}
} // namespace

std::string attack_results_csv_header() {
    return "method,seed_index,true_label,predicted_label,success,ps,sd,ap,fitness,"
           "generations_used,wall_time_ms";
}

std::string attack_result_csv_row(const AttackResult& r, const std::string& method) {
    std::string row = method;
    row += ',' + std::to_string(r.seed_index);
    row += ',' + std::to_string(r.true_label);
    row += ',' + std::to_string(r.predicted_label);
    row += ',';
    row += r.success ? '1' : '0';
    row += ',';
    append_double(row, r.ps);
    row += ',';
    append_double(row, r.sd);
    row += ',';
    append_double(row, r.ap);
    row += ',';
    append_double(row, r.fitness);
    row += ',' + std::to_string(r.generations_used);
    row += ',';
    append_double(row, r.wall_time_ms);
    return row;
}

} // namespace latentga
