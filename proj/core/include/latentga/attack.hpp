#pragma once

#include "latentga/models.hpp"
#include "latentga/rng.hpp"
#include "latentga/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace latentga {

enum class AttackMode { Untargeted, Targeted };

const char* attack_mode_name(AttackMode m);
AttackMode attack_mode_from_name(const std::string& name);

/// Genetic-algorithm hyperparameters. Defaults follow the tuned MNIST
/// setup; validate() throws ConfigError before any compute starts.
struct AttackConfig {
    double alpha = 0.2;          // perturbation-size weight in the fitness
    double beta = 1.0;           // semantic-distance weight in the fitness
    std::size_t population = 50;
    std::size_t elitists = 5;
    double crossover_rate = 0.2;
    double mutation_rate = 0.1;  // per-gene
    double init_max = 0.04;      // max |gene| at initialization
    double step_size = 0.02;     // mutation step
    std::size_t generations = 150;
    AttackMode mode = AttackMode::Untargeted;
    int target_class = 0;        // used when mode == Targeted
    std::uint64_t rng_seed = 0;
    /// Initial genes get a random sign by default; set false for strictly
    /// non-negative initialization.
    bool signed_init = true;
    /// Stop once a success exists and the best fitness has been flat for
    /// this many generations; 0 runs the full generation budget.
    std::size_t early_stop_patience = 0;

    void validate() const;
};

/// Everything one fitness evaluation produces.
struct Evaluation {
    double fitness = 0.0;
    double ap = 0.0;  // attack performance (confidence margin term)
    double ps = 0.0;  // L2 between the decoded attack and the decoded seed
    double sd = 0.0;  // L2 of the latent noise itself
    int predicted = -1;
    Tensor confidence;    // class probability vector
    bool success = false; // the mode's success condition held
};

/// Latent-space noise vector plus its evaluation, when current. Any gene
/// change must drop the cache.
struct Chromosome {
    Tensor genes;
    std::optional<Evaluation> cached;
};

/// Probability-only view of the target model. The attack engine accepts
/// nothing else, so every query it can make is a black-box query.
class TargetQuery {
public:
    explicit TargetQuery(const Classifier& clf) : clf_(&clf) {}

    /// Class probabilities for one image (rank-1) or a batch (rank-2).
    Tensor probabilities(const Tensor& images) const { return predict_proba(*clf_, images); }

private:
    const Classifier* clf_;
};

/// decode(encode(x) + genes).
Tensor build_attack(const Autoencoder& ae, const Tensor& x, const Chromosome& c);

/// L2 distance between decode(h + genes) and decode(h); the decoded seed
/// stands in for x so the search does not chase autoencoder error.
double perturbation_size(const Autoencoder& ae, const Tensor& x, const Chromosome& c);

/// L2 norm of the genes.
double semantic_distance(const Chromosome& c);

/// Confidence-margin score steering the untargeted search; positive once
/// the sample is misclassified. Ties in argmax/second-max resolve to the
/// lowest class index.
double attack_performance_untargeted(int true_label, const Tensor& p);

/// Targeted variant: rewards probability mass on the target class.
double attack_performance_targeted(int target_class, const Tensor& p);

/// Full fitness evaluation; caches the breakdown on the chromosome and
/// returns the fitness value.
double fitness(const Autoencoder& ae, const TargetQuery& target, const Tensor& x, int true_label,
               Chromosome& c, const AttackConfig& config);

std::vector<Chromosome> init_population(const AttackConfig& config, std::size_t latent_dim, Rng& rng);

/// Elitist carry plus roulette-drawn parent pairs. Roulette weights are
/// fitness - min(fitness) + 1e-6, so negative fitness is handled and
/// ranking is preserved; elitists stay eligible as parents.
struct Selection {
    std::vector<std::size_t> elite;                          // indices, best first
    std::vector<std::pair<std::size_t, std::size_t>> parents; // one pair per two children
};

Selection select(const std::vector<Chromosome>& population, const AttackConfig& config, Rng& rng);

/// One-point crossover with probability crossover_rate; otherwise copies.
std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b,
                                            const AttackConfig& config, Rng& rng);

/// Each gene moves by +-step_size with probability mutation_rate.
Chromosome mutate(const Chromosome& c, const AttackConfig& config, Rng& rng);

/// select + crossover + mutate; returns exactly config.population
/// chromosomes with elitists carried verbatim.
std::vector<Chromosome> next_generation(const std::vector<Chromosome>& population,
                                        const AttackConfig& config, Rng& rng);

struct AttackResult {
    std::size_t seed_index = 0;  // dataset index, set by the caller
    Tensor seed_image;
    int true_label = -1;
    Tensor reconstruction;       // decode(encode(seed))
    Tensor attack_image;         // decode(encode(seed) + genes)
    Tensor genes;                // winning latent noise
    int predicted_label = -1;
    Tensor confidence;
    double ps = 0.0;
    double sd = 0.0;
    double ap = 0.0;
    double fitness = 0.0;
    std::vector<double> fitness_trace; // best fitness per generation
    bool success = false;
    std::size_t generations_used = 0;
    double wall_time_ms = 0.0;
};

/// Run the full GA. Returns the best-ever chromosome satisfying the
/// mode's success condition if one was found, otherwise the best-ever
/// overall with success = false. The success flag is re-verified with a
/// fresh model query on the returned image.
AttackResult run_attack(const Autoencoder& ae, const TargetQuery& target, const Tensor& x,
                        int true_label, const AttackConfig& config);
AttackResult run_attack(const Autoencoder& ae, const Classifier& clf, const Tensor& x,
                        int true_label, const AttackConfig& config);

/// Line-oriented record of one attack.
std::string attack_results_csv_header();
std::string attack_result_csv_row(const AttackResult& r, const std::string& method);

} // namespace latentga
