// trainer.hpp: Adam training loop over trajectory datasets.
//
// Copyright 2026 The tdb authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef TDB_MODEL_TRAINER_HPP_
#define TDB_MODEL_TRAINER_HPP_

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdb/adam.hpp"
#include "tdb/model/model.hpp"

namespace tdb {

// Raised when the training loss turns non-finite; the CLI maps this to its
// NaN-abort exit code.
struct NanAbort : std::runtime_error {
  int step;
  explicit NanAbort(int s)
      : std::runtime_error("non-finite loss at training step " +
                           std::to_string(s)),
        step(s) {}
};

struct TrainLogRow {
  int step;
  double train_acc, loss_obs, loss_bott, loss_enc;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  int above98_step = -1;  // first logged step with batch accuracy >= 98%
};

// Trains in place; returns the training curve. When `curve_path` is set,
// rows are appended there as JSON lines while training runs.
template <typename SC>
TrainLog Train(Model<SC> &model, const std::vector<Trajectory> &data,
               const TrainConfig &tc,
               const std::string &curve_path = std::string(),
               bool verbose = false) {
  tc.Validate();
  Check(!data.empty(), "Train: empty dataset");
  Rng rng(tc.seed, /*stream=*/17);
  Rng dropout_rng = rng.Split(1);

  std::optional<Model<SC>> teacher;
  if (model.cfg.arch == Arch::kTdb && model.cfg.use_enc_loss) teacher = model;

  Adam<SC> opt;
  opt.lr = tc.lr;
  TrainLog log;
  std::ofstream curve;
  if (!curve_path.empty()) {
    curve.open(curve_path);
    Check(curve.good(), "Train: cannot open curve file " + curve_path);
  }

  std::vector<Tensor<SC>> grads(static_cast<size_t>(model.params.size()));
  const double inv_b = 1.0 / tc.batch_size;

  for (int step = 1; step <= tc.steps; ++step) {
    for (auto &g : grads) g = Tensor<SC>();
    double sum_obs = 0, sum_bott = 0, sum_enc = 0;
    int64_t correct = 0, predictions = 0;
    bool has_bott = false, has_enc = false;

    for (int b = 0; b < tc.batch_size; ++b) {
      const Trajectory &traj =
          data[rng.UniformInt(static_cast<uint32_t>(data.size()))];
      Tape<SC> tape;
      tape.training = true;
      tape.rng = &dropout_rng;
      auto leaves = MakeLeaves(tape, model.params);
      ForwardResult<SC> r;
      try {
        r = Forward(tape, model, leaves, traj, teacher ? &*teacher : nullptr);
      } catch (const std::runtime_error &e) {
        // Ops guard against non-finite activations mid-forward; surface those
        // as the NaN abort so callers see the failing step.
        if (std::string(e.what()).find("non-finite") != std::string::npos)
          throw NanAbort(step);
        throw;
      }
      double loss = static_cast<double>(r.total.Val()[0]);
      if (!std::isfinite(loss)) throw NanAbort(step);
      sum_obs += static_cast<double>(r.loss_obs.Val()[0]);
      if (r.loss_bott.valid()) {
        sum_bott += static_cast<double>(r.loss_bott.Val()[0]);
        has_bott = true;
      }
      if (r.loss_enc.valid()) {
        sum_enc += static_cast<double>(r.loss_enc.Val()[0]);
        has_enc = true;
      }
      correct += r.correct;
      predictions += r.predictions;

      tape.Backward(r.total);
      for (int pi = 0; pi < model.params.size(); ++pi) {
        if (!tape.HasGrad(leaves[static_cast<size_t>(pi)].id)) continue;
        const Tensor<SC> &g = tape.grad(leaves[static_cast<size_t>(pi)].id);
        Check(g.AllFinite(), "Train: non-finite gradient");
        Tensor<SC> &acc = grads[static_cast<size_t>(pi)];
        if (acc.data.empty()) acc = Tensor<SC>::Zeros(g.shape);
        kernels::Axpy(static_cast<SC>(inv_b), g.ptr(), acc.ptr(), g.size());
      }
    }

    opt.Step(model.params, grads);
    if (teacher) EmaUpdate(teacher->params, model.params, model.cfg.ema_alpha);

    if (step % tc.eval_interval == 0 || step == tc.steps) {
      TrainLogRow row;
      row.step = step;
      row.train_acc =
          predictions ? static_cast<double>(correct) / predictions : 0.0;
      row.loss_obs = sum_obs / tc.batch_size;
      row.loss_bott = has_bott ? sum_bott / tc.batch_size : 0.0;
      row.loss_enc = has_enc ? sum_enc / tc.batch_size : 0.0;
      log.rows.push_back(row);
      if (log.above98_step < 0 && row.train_acc >= 0.98)
        log.above98_step = step;
      if (curve.is_open()) {
        nlohmann::json j;
        j["step"] = row.step;
        j["train_acc"] = row.train_acc;
        j["loss_obs"] = row.loss_obs;
        j["loss_bott"] = row.loss_bott;
        j["loss_enc"] = row.loss_enc;
        curve << j.dump() << "\n";
        curve.flush();
      }
      if (verbose)
        std::fprintf(stderr,
                     "step %6d  acc %.4f  obs %.4f  bott %.4f  enc %.4f\n",
                     row.step, row.train_acc, row.loss_obs, row.loss_bott,
                     row.loss_enc);
    }
  }
  return log;
}

}  // namespace tdb

#endif  // TDB_MODEL_TRAINER_HPP_
