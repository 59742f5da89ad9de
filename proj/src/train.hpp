#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adam.hpp"
#include "io.hpp"
#include "loss.hpp"
#include "model.hpp"

namespace must {

struct TrainParams {
  int32_t epochs = 300;
  int32_t batch_size = 128;
  double lr = 5e-5;
  int32_t eval_every = 1;   // in epochs
  int32_t patience = 50;    // evaluations without val-AUC improvement
  uint64_t seed = 1;
  int32_t embed_dim = 64;
  bool focal_composition = false;  // baseline harness: focal loss on the pair head
};

struct HistoryRow {
  int32_t epoch = 0;
  double l_pair = 0.0;
  double l_state = 0.0;
  double l_object = 0.0;
  std::optional<double> val_auc;
  std::optional<double> val_hm;
};

struct TrainResult {
  MustModel model;  // the checkpoint maximizing validation AUC
  std::vector<HistoryRow> history;
  double best_val_auc = 0.0;
  int32_t best_epoch = 0;
};

// Seeded mini-batch loop over the train split with MUST-inference validation
// sweeps for model selection. Fully deterministic given (bundle, params).
TrainResult train(const DatasetBundle& bundle, const TrainParams& params, const LossConfig& loss_cfg);

std::string history_csv(const std::vector<HistoryRow>& history);

}  // namespace must
