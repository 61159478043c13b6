#include "tad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "tad/frame_io.hpp"

namespace tad {

namespace {

struct VideoMatcher {
  const std::vector<PredictionEvent>& preds;
  const std::vector<GroundTruthEvent>& gts;
  std::vector<std::vector<std::size_t>> cand;  // per gt, preference-ordered prediction indices
  std::map<std::size_t, std::size_t> pred_owner;
  std::map<std::size_t, std::size_t> gt_pred;
  std::vector<char> seen;

  bool augment(std::size_t g, std::map<std::size_t, std::size_t>& slot) {
    for (std::size_t p : cand[slot[g]]) {
      if (seen[p]) continue;
      seen[p] = 1;
      auto it = pred_owner.find(p);
      if (it == pred_owner.end() || augment(it->second, slot)) {
        pred_owner[p] = g;
        gt_pred[g] = p;
        return true;
      }
    }
    return false;
  }
};

}  // namespace

MatchResult match(const std::vector<PredictionEvent>& preds, const std::vector<GroundTruthEvent>& gts, double window) {
  MatchResult res;
  std::map<std::string, std::vector<std::size_t>> vp, vg;
  for (std::size_t i = 0; i < preds.size(); ++i) vp[preds[i].video_id].push_back(i);
  for (std::size_t i = 0; i < gts.size(); ++i) vg[gts[i].video_id].push_back(i);
  std::vector<char> pred_used(preds.size(), 0), gt_used(gts.size(), 0);

  for (auto& [vid, gidx] : vg) {
    std::stable_sort(gidx.begin(), gidx.end(), [&](std::size_t a, std::size_t b) { return gts[a].true_time < gts[b].true_time; });
    const auto pit = vp.find(vid);
    if (pit == vp.end()) continue;
    const auto& pidx = pit->second;
    VideoMatcher m{preds, gts, {}, {}, {}, std::vector<char>(preds.size(), 0)};
    std::map<std::size_t, std::size_t> slot;  // gt index -> position in cand
    for (std::size_t k = 0; k < gidx.size(); ++k) {
      const std::size_t g = gidx[k];
      slot[g] = k;
      std::vector<std::size_t> c;
      for (std::size_t p : pidx)
        if (std::abs(preds[p].pred_time - gts[g].true_time) <= window) c.push_back(p);
      std::stable_sort(c.begin(), c.end(), [&](std::size_t a, std::size_t b) {
        const auto &pa = preds[a], &pb = preds[b];
        if (pa.confidence != pb.confidence) return pa.confidence > pb.confidence;
        double ea = std::abs(pa.pred_time - gts[g].true_time), eb = std::abs(pb.pred_time - gts[g].true_time);
        if (ea != eb) return ea < eb;
        return pa.pred_time < pb.pred_time;
      });
      m.cand.push_back(std::move(c));
    }
    for (std::size_t g : gidx) {
      std::fill(m.seen.begin(), m.seen.end(), 0);
      m.augment(g, slot);
    }
    for (std::size_t g : gidx) {
      auto it = m.gt_pred.find(g);
      if (it == m.gt_pred.end()) continue;
      res.tp.emplace_back(it->second, g);
      pred_used[it->second] = 1;
      gt_used[g] = 1;
    }
  }
  std::sort(res.tp.begin(), res.tp.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (!pred_used[i]) res.fp.push_back(i);
  for (std::size_t i = 0; i < gts.size(); ++i)
    if (!gt_used[i]) res.fn.push_back(i);
  return res;
}

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn, bool* undefined) {
  if (undefined) *undefined = tp == 0 && fp == 0 && fn == 0;
  if (tp == 0) return 0.0;
  return double(tp) / (double(tp) + 0.5 * double(fp + fn));
}

double nrmse(const std::vector<double>& errors, double cap, bool* no_tp, double* rmse_out) {
  if (cap <= 0) throw std::invalid_argument("nrmse: cap must be positive");
  if (no_tp) *no_tp = errors.empty();
  if (errors.empty()) {
    if (rmse_out) *rmse_out = 0.0;
    return 1.0;
  }
  double ss = 0;
  for (double e : errors) ss += e * e;
  double rmse = std::sqrt(ss / double(errors.size()));
  if (rmse_out) *rmse_out = rmse;
  return std::min(rmse, cap) / cap;
}

double s4(double f1, double nrmse_v) { return f1 * (1.0 - nrmse_v); }

EvalReport evaluate(const std::vector<PredictionEvent>& preds, const std::vector<GroundTruthEvent>& gts, double window,
                    double cap) {
  EvalReport r;
  r.nrmse_cap = cap;
  MatchResult m = match(preds, gts, window);
  r.tp = m.tp.size();
  r.fp = m.fp.size();
  r.fn = m.fn.size();
  r.f1 = f1_score(r.tp, r.fp, r.fn, &r.f1_undefined);
  std::vector<double> err;
  for (auto [p, g] : m.tp) err.push_back(preds[p].pred_time - gts[g].true_time);
  r.nrmse = nrmse(err, cap, &r.no_true_positives, &r.rmse);
  r.s4 = s4(r.f1, r.nrmse);
  return r;
}

namespace {

std::vector<std::vector<std::string>> tokenize(std::istream& in, std::size_t fields, const char* what) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() != fields)
      throw ParseError(std::string(what) + ": expected " + std::to_string(fields) + " fields, got " +
                           std::to_string(tok.size()),
                       ln);
    tok.push_back(std::to_string(ln));
    rows.push_back(std::move(tok));
  }
  return rows;
}

double to_num(const std::string& s, std::size_t ln, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string(what) + ": bad number '" + s + "'", ln);
  }
}

std::string fmt(double v, int prec) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*f", prec, v);
  return b;
}

}  // namespace

std::vector<PredictionEvent> parse_predictions(std::istream& in) {
  std::vector<PredictionEvent> out;
  for (auto& t : tokenize(in, 3, "predictions")) {
    std::size_t ln = std::stoul(t[3]);
    PredictionEvent p{t[0], to_num(t[1], ln, "predictions"), to_num(t[2], ln, "predictions")};
    if (p.pred_time < 0) throw ParseError("predictions: negative time", ln);
    if (p.confidence < 0 || p.confidence > 1) throw ParseError("predictions: confidence outside [0,1]", ln);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<GroundTruthEvent> parse_ground_truth(std::istream& in) {
  std::vector<GroundTruthEvent> out;
  for (auto& t : tokenize(in, 2, "ground truth")) {
    std::size_t ln = std::stoul(t[2]);
    GroundTruthEvent g{t[0], to_num(t[1], ln, "ground truth")};
    if (g.true_time < 0) throw ParseError("ground truth: negative time", ln);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<PredictionEvent> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_predictions(in);
}

std::vector<GroundTruthEvent> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_ground_truth(in);
}

void write_predictions(std::ostream& out, const std::vector<PredictionEvent>& preds) {
  for (const auto& p : preds) out << p.video_id << ' ' << fmt(p.pred_time, 3) << ' ' << fmt(p.confidence, 4) << '\n';
}

void write_ground_truth(std::ostream& out, const std::vector<GroundTruthEvent>& gts) {
  for (const auto& g : gts) out << g.video_id << ' ' << fmt(g.true_time, 3) << '\n';
}

void write_report(std::ostream& out, const EvalReport& r) {
  out << "Evaluation\n"
      << "  true positives : " << r.tp << '\n'
      << "  false positives: " << r.fp << '\n'
      << "  false negatives: " << r.fn << '\n'
      << "  F1             : " << fmt(r.f1, 4) << (r.f1_undefined ? "  (no events at all; defined as 0)" : "") << '\n'
      << "  RMSE (s)       : " << fmt(r.rmse, 4) << '\n'
      << "  NRMSE (cap " << fmt(r.nrmse_cap, 0) << "): " << fmt(r.nrmse, 6)
      << (r.no_true_positives ? "  (no true positives; defined as 1)" : "") << '\n'
      << "  S4             : " << fmt(r.s4, 4) << "\n\n";
  out << "[metrics]\n"
      << "tp=" << r.tp << "\nfp=" << r.fp << "\nfn=" << r.fn << "\nf1=" << fmt(r.f1, 6) << "\nrmse=" << fmt(r.rmse, 6)
      << "\nnrmse=" << fmt(r.nrmse, 6) << "\nnrmse_cap=" << fmt(r.nrmse_cap, 3) << "\ns4=" << fmt(r.s4, 6)
      << "\nf1_undefined=" << (r.f1_undefined ? 1 : 0) << "\nno_true_positives=" << (r.no_true_positives ? 1 : 0)
      << '\n';
}

}  // namespace tad
