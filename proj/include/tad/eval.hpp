#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace tad {

struct GroundTruthEvent {
  std::string video_id;
  double true_time = 0.0;
};

struct PredictionEvent {
  std::string video_id;
  double pred_time = 0.0;
  double confidence = 0.0;
};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> tp;  // (prediction index, ground-truth index)
  std::vector<std::size_t> fp;                          // prediction indices
  std::vector<std::size_t> fn;                          // ground-truth indices
};

/// Ground truths are visited in ascending time. Each one takes the most preferred
/// available prediction within `window` seconds (higher confidence, then smaller
/// error, then earlier time); when all candidates are taken, an augmenting path
/// reassigns earlier matches so that the number of TPs is maximal.
MatchResult match(const std::vector<PredictionEvent>& preds, const std::vector<GroundTruthEvent>& gts,
                  double window = 10.0);

/// TP / (TP + (FP + FN) / 2). All-zero counts give 0 and set *undefined.
double f1_score(std::size_t tp, std::size_t fp, std::size_t fn, bool* undefined = nullptr);

/// min(rmse, cap) / cap over the TP time errors; no TPs gives 1 and sets *no_tp.
double nrmse(const std::vector<double>& errors, double cap = 300.0, bool* no_tp = nullptr, double* rmse = nullptr);

double s4(double f1, double nrmse);

struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0;
  double f1 = 0.0;
  double rmse = 0.0;
  double nrmse = 1.0;
  double s4 = 0.0;
  bool f1_undefined = false;
  bool no_true_positives = false;
  double nrmse_cap = 300.0;
};

EvalReport evaluate(const std::vector<PredictionEvent>& preds, const std::vector<GroundTruthEvent>& gts,
                    double window = 10.0, double nrmse_cap = 300.0);

/// `video_id time confidence` per line (whitespace separated).
std::vector<PredictionEvent> read_predictions(const std::filesystem::path& path);
std::vector<PredictionEvent> parse_predictions(std::istream& in);
void write_predictions(std::ostream& out, const std::vector<PredictionEvent>& preds);

/// `video_id time` per line.
std::vector<GroundTruthEvent> read_ground_truth(const std::filesystem::path& path);
std::vector<GroundTruthEvent> parse_ground_truth(std::istream& in);
void write_ground_truth(std::ostream& out, const std::vector<GroundTruthEvent>& gts);

/// Human-readable summary followed by a key=value block.
void write_report(std::ostream& out, const EvalReport& r);

}  // namespace tad
