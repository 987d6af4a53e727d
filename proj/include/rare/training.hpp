#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rare/image.hpp"
#include "rare/priors.hpp"

namespace rare {

// One training example: two reconstructions of the same object from
// different acquisitions (input -> target).
struct TrainPair {
    ComplexImage input;
    ComplexImage target;
    int object_id = 0;
    int acq_input = 0;
    int acq_target = 0;
};

struct ObjectAcquisitions {
    int object_id = 0;
    std::vector<int> acquisition_ids;
    std::vector<ComplexImage> images; // aligned with acquisition_ids
};

struct PairBuildResult {
    std::vector<TrainPair> pairs;
    int skipped_objects = 0; // objects with fewer than 2 acquisitions
};

// All ordered pairs (i, i') with i != i' within each object, in deterministic
// (object, input, target) order. Never pairs across objects.
PairBuildResult build_pairs(const std::vector<ObjectAcquisitions>& dataset);

struct TrainConfig {
    double alpha = 0.5; // l1 weight in the mixed loss, in (0, 1]
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch = 2;
    int epochs = 10;
    std::uint64_t seed = 1;
    void validate() const;
};

// alpha * mean(|residual|) + (1 - alpha) * mean(residual^2), both means over
// the 2n real/imag entries.
double mixed_loss(const ComplexImage& pred, const ComplexImage& target, double alpha);

// Weight/bias-shaped gradient container aligned with a NetWeights layout.
struct NetGrads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    static NetGrads zeros_like(const NetWeights& net);
    void accumulate(const NetGrads& other, double scale);
    void scale(double s);
};

// Mean mixed loss over the batch and its exact gradient with respect to every
// kernel and bias (l1 subgradient at 0 taken as 0). Internals run in double.
std::pair<double, NetGrads> loss_gradient(const NetWeights& net,
                                          const std::vector<const TrainPair*>& batch,
                                          double alpha);

struct AdamState {
    long t = 0;
    NetGrads m;
    NetGrads v;

    static AdamState zeros_like(const NetWeights& net);
};

// Standard bias-corrected ADAM update; increments the timestep.
void adam_step(NetWeights& net, AdamState& state, const NetGrads& grads, const TrainConfig& cfg);

struct TrainResult {
    NetWeights weights;
    std::vector<double> epoch_loss; // mean training loss per epoch
};

// Seeded mini-batch ADAM over the given pairs. Weights start from `init` when
// provided, otherwise from a Glorot initialization seeded by cfg.seed. Throws
// std::runtime_error naming the epoch if the loss turns non-finite.
TrainResult train_on_pairs(const std::vector<TrainPair>& pairs, const NetArch& arch,
                           const TrainConfig& cfg,
                           const std::optional<NetWeights>& init = std::nullopt);

// Builds same-object pairs from the dataset and trains on them.
TrainResult train(const std::vector<ObjectAcquisitions>& dataset, const NetArch& arch,
                  const TrainConfig& cfg);

} // namespace rare
