/* Copyright 2026 The OmniPT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Acceptance checks, one per criterion. Each run prints a single
// "criterion N: PASS|FAIL ..." line followed by the measurements behind it.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "data/dataset.hpp"
#include "eval/evaluation.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "trainer/trainer.hpp"

using namespace omnipt;
namespace ot = omnipt::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "  ok    " : "  FAIL  ") + what);
  }
  void note(const std::string& what) { notes.push_back("        " + what); }
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof buffer, format, args);
  va_end(args);
  return buffer;
}

struct Context {
  std::filesystem::path work;
  std::string cli;
};

// ---------------------------------------------------------------------------

Outcome gradient_integrity(const Context&) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  auto config = ot::toy_config();
  out.note(fmt("toy model: d_h=%d layers=%d heads=%d decoder_layers=%d, 64-bit, h=1e-5", config.d_h,
               config.n_layers, config.n_heads, config.decoder_layers));
  auto model = OptModel<double>::create(config, 2024);
  for (std::size_t t = 0; t < kLossTermCount; ++t) {
    const auto term = static_cast<LossTerm>(t);
    const auto r = ot::loss_term_gradient_check(model, term, 4, 120, 500 + t);
    out.expect(r.checked >= 100 && r.max_relative < 1e-4,
               fmt("%-8s %zu params, max rel err %.3e (%s)", loss_term_name(term), r.checked, r.max_relative,
                   r.worst.c_str()));
    out.expect(r.max_zero_abs < 1e-8,
               fmt("%-8s %zu zero-gradient params, max |fd| %.3e", loss_term_name(term), r.zero_checked,
                   r.max_zero_abs));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.expect(seconds < 300.0, fmt("runtime %.1f s (< 300 s)", seconds));
  return out;
}

// ---------------------------------------------------------------------------

Outcome analytic_losses(const Context&) {
  Outcome out;
  auto model = OptModel<double>::create(ot::toy_config(), 7);
  auto zero = [](Tensor<double>& t) {
    for (auto& v : t.data_mut()) v = 0.0;
  };
  for (auto* t : {&model.heads.mlm_w, &model.heads.mlm_b, &model.heads.mrc_w, &model.heads.mrc_b,
                  &model.heads.mam_w, &model.heads.mam_b, &model.heads.sm_w, &model.heads.sm_b,
                  &model.text_decoder.out_w, &model.text_decoder.out_b, &model.image_decoder.out_w,
                  &model.image_decoder.out_b}) {
    zero(*t);
  }
  const auto record = ot::make_records(1, 3).front();
  const auto ctx = ForwardContext::eval();
  const auto enc = encode_sample(model, sample_from_record(record), {}, ctx);

  auto check = [&](const char* name, double value, double expected, double tol) {
    out.expect(std::abs(value - expected) < tol, fmt("%-8s %.9f vs %.9f (tol %.0e)", name, value, expected, tol));
  };
  const double vocab = model.config.vocab_size, classes = model.config.n_classes,
               codebook = model.config.codebook_size;

  TokenMaskPlan text_plan{Modality::kText, record.token_ids.size(), 0.15, {0, 2}};
  const std::vector<int> text_targets{record.token_ids[0], record.token_ids[2]};
  check("mlm", mlm_loss(enc.encoded, enc.sequence, text_plan, text_targets, model.heads).item(), std::log(vocab),
        1e-5);
  TokenMaskPlan region_plan{Modality::kVision, record.regions.count(), 0.15, {0}};
  check("mrc", mrc_loss(enc.encoded, enc.sequence, region_plan, record.regions.pseudo_labels, model.heads).item(),
        std::log(classes), 1e-5);
  check("dtr", dtr_loss(model.text_decoder, enc.memory(), record.token_ids, ctx).item(), std::log(vocab), 1e-5);
  const std::vector<int> codes{0, 5, 9, 15};
  check("dir", dir_loss(model.image_decoder, enc.memory(), codes, ctx).item(), std::log(codebook), 1e-5);

  // Zero projections make every cosine similarity 0: k negatives + 1 positive.
  const std::size_t frames = record.audio.count();
  for (std::size_t m : {std::size_t{1}, std::size_t{2}}) {
    TokenMaskPlan audio_plan{Modality::kAudio, frames, 0.15, {}};
    for (std::size_t i = 0; i < m; ++i) audio_plan.masked.push_back(i * 3);
    const auto nce = mam_nce_loss(enc.encoded, enc.sequence, audio_plan, record.audio.features, model.heads);
    check(fmt("nce k=%zu", frames - 1).c_str(), nce ? nce->item() : -1.0, std::log(static_cast<double>(frames)),
          1e-5);
  }
  for (int c = 0; c < kMatchCases; ++c) {
    MatchLabel label{};
    label[static_cast<std::size_t>(c)] = 1.0f;
    check(fmt("sm case%d", c + 1).c_str(), sm_loss(cls_state(enc.encoded), label, model.heads).item(), 0.6931, 1e-4);
  }
  return out;
}

// ---------------------------------------------------------------------------

// Survival function of the chi-square distribution with even degrees of freedom.
double chi_square_sf_even(double x, int df) {
  double term = 1.0, sum = 1.0;
  for (int i = 1; i < df / 2; ++i) {
    term *= (x / 2.0) / i;
    sum += term;
  }
  return std::exp(-x / 2.0) * sum;
}

Outcome masking_statistics(const Context&) {
  Outcome out;
  std::mt19937_64 rng(31);

  // Token masking: 10^5 draws over a 40-token sequence (6 masked per draw).
  const std::size_t length = 40, draws = 100000;
  std::vector<std::size_t> hits(length, 0);
  std::size_t masked = 0;
  for (std::size_t d = 0; d < draws; ++d) {
    for (auto p : sample_token_mask(Modality::kText, length, 0.15, rng).masked) {
      ++hits[p];
      ++masked;
    }
  }
  const double rate = static_cast<double>(masked) / static_cast<double>(draws * length);
  out.expect(std::abs(rate - 0.15) <= 0.01, fmt("overall token mask rate %.5f", rate));
  double lo = 1.0, hi = 0.0;
  for (auto h : hits) {
    const double f = static_cast<double>(h) / static_cast<double>(draws);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  out.expect(lo >= 0.14 && hi <= 0.16, fmt("per-position mask frequency in [%.5f, %.5f]", lo, hi));

  // Modality patterns: chi-square against Bernoulli(0.3)^3 given not all dropped.
  const double p = 0.3;
  const std::size_t trials = 1000000;
  std::array<std::size_t, 8> counts{};
  for (std::size_t i = 0; i < trials; ++i) ++counts[static_cast<std::size_t>(sample_modality_mask(p, rng).pattern())];
  double chi2 = 0.0;
  for (int bits = 0; bits < 7; ++bits) {
    const int k = __builtin_popcount(static_cast<unsigned>(bits));
    const double expected = trials * std::pow(p, k) * std::pow(1 - p, 3 - k) / (1 - p * p * p);
    const double diff = static_cast<double>(counts[static_cast<std::size_t>(bits)]) - expected;
    chi2 += diff * diff / expected;
  }
  const double p_value = chi_square_sf_even(chi2, 6);
  out.expect(p_value > 0.01, fmt("pattern chi-square %.3f (df 6), p = %.4f", chi2, p_value));
  out.expect(counts[7] == 0, fmt("all-dropped pattern %zu times in %zu draws", counts[7], trials));
  return out;
}

// ---------------------------------------------------------------------------

// Independent statement of the five cases, keyed by (text, vision, audio)
// belonging to the reference triplet.
int table_case(bool t, bool v, bool a) {
  static const std::map<std::array<bool, 3>, int> table{
      {{true, true, true}, 0},    {{false, true, true}, 1},  {{true, true, false}, 2},
      {{true, false, true}, 3},   {{false, false, true}, 4}, {{false, true, false}, 4},
      {{true, false, false}, 4},  {{false, false, false}, 4}};
  return table.at({t, v, a});
}

Outcome sample_oracle(const Context&) {
  Outcome out;
  std::size_t agree = 0;
  for (int bits = 0; bits < 8; ++bits) {
    const bool t = bits & 1, v = bits & 2, a = bits & 4;
    const auto label = case_label(t, v, a);
    bool ok = case_index(t, v, a) == table_case(t, v, a);
    for (int c = 0; c < kMatchCases; ++c) ok = ok && label[static_cast<std::size_t>(c)] == (c == table_case(t, v, a));
    agree += ok;
  }
  out.expect(agree == 8, fmt("case_label matches the truth table on %zu/8 patterns", agree));

  std::mt19937_64 rng(41);
  std::size_t plans = 0, mismatches = 0;
  for (int b = 0; b < 10000; ++b) {
    const std::size_t batch = 3 + static_cast<std::size_t>(b % 14);
    const auto corruption = sample_corruption(batch, rng);
    for (std::size_t i = 0; i < batch; ++i, ++plans) {
      const auto& c = corruption[i];
      // With at least three samples, replaced modalities never share a source,
      // so a modality matches exactly when it was not replaced.
      const int derived = table_case(c.text_source == i, c.vision_source == i, c.audio_source == i);
      bool ok = c.case_index == derived && (c.text_source != i) == c.replace_text &&
                (c.vision_source != i) == c.replace_vision && (c.audio_source != i) == c.replace_audio;
      for (int k = 0; k < kMatchCases; ++k) ok = ok && c.label[static_cast<std::size_t>(k)] == (k == derived);
      mismatches += !ok;
    }
  }
  out.expect(mismatches == 0, fmt("sample_corruption: %zu mismatches over %zu plans in 10^4 batches", mismatches, plans));
  return out;
}

// ---------------------------------------------------------------------------

Outcome overfit(const Context&) {
  Outcome out;
  ConfigMap map;  // desk defaults
  map.set("train.max_steps", "300");
  map.set("train.eval_every", "0");
  map.set("train.checkpoint_every", "0");
  const auto config = RunConfig::from(map);
  const auto records = ot::make_records(32, config.synth.seed);

  auto codec = ImageCodec<float>::create(config.codec);
  std::vector<Image> images;
  for (const auto& r : records) images.push_back(r.image);
  codec_train(codec, std::span<const Image>(images), config.codec_epochs);
  const auto codes = encode_records(codec, records);

  Trainer<float> trainer(config, records, records, codes, codes);
  std::vector<double> totals;
  for (int s = 0; s < config.train.max_steps; ++s) totals.push_back(trainer.step().total);
  const std::size_t window = 10;
  auto average = [&](std::size_t from) {
    double sum = 0.0;
    for (std::size_t i = from; i < from + window; ++i) sum += totals[i];
    return sum / static_cast<double>(window);
  };
  const double first = average(0), last = average(totals.size() - window);
  const double drop = (first - last) / first;
  out.expect(drop >= 0.8, fmt("total-loss moving average (window %zu) %.4f -> %.4f, fall %.1f%% (>= 80%%)", window,
                              first, last, 100.0 * drop));

  GenerationParams greedy;
  greedy.max_len = static_cast<std::size_t>(config.model.max_text_len);
  std::size_t exact = 0;
  for (const auto& r : records) {
    exact += describe(trainer.model(), r, ModalitySet::of({Modality::kVision, Modality::kAudio}), greedy) ==
             r.token_ids;
  }
  out.expect(exact * 10 >= records.size() * 9,
             fmt("greedy decoding from image+audio reproduces %zu/%zu captions (>= 90%%)", exact, records.size()));
  return out;
}

// ---------------------------------------------------------------------------

int run_cli(const Context& ctx, const std::string& args, const std::filesystem::path& log) {
  const std::string command = ctx.cli + " " + args + " >> " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, double> read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  std::map<std::string, double> out;
  for (const auto& r : parse_report(text.str())) out[r.task + " " + r.metric] = r.value;
  return out;
}

Outcome learned_alignment(const Context& ctx) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  const auto dir = ctx.work / "c6";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto log = dir / "cli.log";
  const std::string config = std::string("--config ") + OMNIPT_SOURCE_DIR + "/configs/desk.cfg --set run.root=" +
                             (dir / "runs").string() + " --set data.root=" + (dir / "data").string();
  for (const char* step : {"gen-data", "codec-train", "pretrain", "eval-retrieval", "eval-probe", "eval-wer"}) {
    const int code = run_cli(ctx, std::string(step) + " " + config, log);
    if (code != 0) {
      out.expect(false, fmt("omnipt %s exited with %d (see %s)", step, code, log.c_str()));
      return out;
    }
  }
  const auto run = dir / "runs" / "desk";
  auto r = read_report(run / "eval-retrieval.txt");
  const auto probe = read_report(run / "eval-probe.txt");
  const auto wer = read_report(run / "eval-wer.txt");
  r.insert(probe.begin(), probe.end());
  r.insert(wer.begin(), wer.end());

  const double chance = 1.0 / 64.0;
  const double t2i = r.at("retrieval:text->image R@1"), a2t = r.at("retrieval:audio->text R@1"),
               ta2i = r.at("retrieval:text+audio->image R@1");
  out.expect(t2i >= 5 * chance, fmt("text->image R@1 %.4f (>= %.4f)", t2i, 5 * chance));
  out.expect(a2t >= 5 * chance, fmt("audio->text R@1 %.4f (>= %.4f)", a2t, 5 * chance));
  out.expect(ta2i >= t2i - 0.02, fmt("text+audio->image R@1 %.4f >= text->image - 0.02", ta2i));

  const double all = r.at("probe:text+image+audio mAP");
  double best_single = 0.0;
  for (const char* m : {"text", "image", "audio"}) {
    const double v = r.at(std::string("probe:") + m + " mAP");
    best_single = std::max(best_single, v);
    out.note(fmt("probe %s mAP %.4f", m, v));
  }
  out.expect(all >= best_single - 0.02, fmt("probe text+image+audio mAP %.4f >= best single %.4f - 0.02", all,
                                            best_single));
  const double wer_audio = r.at("asr:audio WER"), wer_both = r.at("asr:image+audio WER");
  out.expect(wer_both <= wer_audio + 0.02, fmt("WER image+audio %.4f <= audio %.4f + 0.02", wer_both, wer_audio));
  out.note(fmt("caption exact match %.4f", r.at("caption:image exact_match")));
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  out.expect(minutes < 60.0, fmt("runtime %.1f min (< 60)", minutes));
  return out;
}

// ---------------------------------------------------------------------------

Outcome codec_criterion(const Context&) {
  Outcome out;
  const RunConfig config = RunConfig::from(ConfigMap{});
  const auto train = ot::make_records(static_cast<std::size_t>(config.codec_images), config.synth.seed);
  const auto heldout = ot::make_records(64, config.synth.seed, 100000);
  std::vector<Image> train_images, heldout_images;
  for (const auto& r : train) train_images.push_back(r.image);
  for (const auto& r : heldout) heldout_images.push_back(r.image);

  auto codec = ImageCodec<float>::create(config.codec);
  const auto result = codec_train(codec, std::span<const Image>(train_images), config.codec_epochs);
  out.expect(!result.diverged, fmt("trained %zu epochs on %zu images", result.epochs.size(), train_images.size()));
  const double mse = reconstruction_mse(codec, std::span<const Image>(heldout_images));
  out.expect(mse < 0.05, fmt("held-out reconstruction MSE %.5f (< 0.05)", mse));
  const double usage = codebook_usage(codec, std::span<const Image>(train_images));
  out.expect(usage > 0.10, fmt("codebook usage on the training images %.1f%% (> 10%%)", 100.0 * usage));

  bool deterministic = true;
  for (const auto& img : heldout_images) {
    const auto a = encode_to_codes(codec, img);
    deterministic = deterministic && a == encode_to_codes(codec, img) &&
                    decode_from_codes(codec, a) == decode_from_codes(codec, a);
  }
  out.expect(deterministic, "encode and decode are deterministic on every held-out image");

  // Pretraining steps with this codec's codes leave its parameters untouched.
  ConfigMap small;
  small.set_override("model.d_h=16");
  small.set_override("model.n_heads=2");
  small.set_override("train.batch=4");
  const auto run_config = RunConfig::from(small);
  const auto before = parameter_checksum(codec.params);
  const std::vector<TripletRecord> subset(train.begin(), train.begin() + 16);
  Trainer<float> trainer(run_config, subset, subset, encode_records(codec, subset), encode_records(codec, subset));
  bool frozen = true;
  for (int s = 0; s < 12; ++s) {
    trainer.step();
    frozen = frozen && parameter_checksum(codec.params) == before;
  }
  out.expect(frozen, "codec checksum identical before and after each of 12 pretraining steps");
  return out;
}

// ---------------------------------------------------------------------------

Outcome metric_oracles(const Context&) {
  Outcome out;
  std::mt19937_64 rng(81);
  std::size_t recall_bad = 0, ap_bad = 0, wer_bad = 0;
  const std::size_t cases = 2000;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t pool = 2 + rng() % 20, queries = 1 + rng() % 8;
    std::vector<std::vector<double>> scores;
    std::vector<std::size_t> gold;
    for (std::size_t q = 0; q < queries; ++q) {
      scores.push_back(ot::random_scores(rng, pool));
      gold.push_back(rng() % pool);
    }
    const std::size_t k = 1 + rng() % pool;
    recall_bad += recall_at_k(scores, gold, k) != ot::oracle_recall(scores, gold, k);

    const std::size_t n = 1 + rng() % 15;
    const auto s = ot::random_scores(rng, n);
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = rng() % 3 == 0;
    labels[rng() % n] = 1;
    ap_bad += std::abs(*average_precision(s, labels) - ot::oracle_average_precision(s, labels)) > 1e-12;

    const auto h = ot::random_words(rng, 6);
    const auto ref = ot::random_words(rng, 6, 1);
    const double expected = static_cast<double>(ot::oracle_edits(h, ref)) / static_cast<double>(ref.size());
    wer_bad += std::abs(wer(h, ref) - expected) > 1e-12;
  }
  out.expect(recall_bad == 0, fmt("recall@k: %zu/%zu disagreements", recall_bad, cases));
  out.expect(ap_bad == 0, fmt("average precision: %zu/%zu disagreements", ap_bad, cases));
  out.expect(wer_bad == 0, fmt("WER: %zu/%zu disagreements", wer_bad, cases));

  // Random scoring over a pool of 5,000 with 10^4 queries, in chunks.
  const std::size_t pool = 5000, queries = 10000, chunk = 100;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<double, 3> hits{};
  const std::array<std::size_t, 3> ks{1, 5, 10};
  for (std::size_t done = 0; done < queries; done += chunk) {
    std::vector<std::vector<double>> scores(chunk, std::vector<double>(pool));
    std::vector<std::size_t> gold(chunk);
    for (std::size_t q = 0; q < chunk; ++q) {
      for (auto& v : scores[q]) v = u(rng);
      gold[q] = rng() % pool;
    }
    for (std::size_t i = 0; i < ks.size(); ++i) hits[i] += recall_at_k(scores, gold, ks[i]) * chunk;
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double expected = static_cast<double>(ks[i]) / pool;
    const double observed = hits[i] / queries;
    const double sd = std::sqrt(expected * (1 - expected) / queries);
    out.expect(std::abs(observed - expected) <= 3 * sd,
               fmt("random R@%zu %.3f%% vs %.2f%% (3 sd = %.3f%%)", ks[i], 100 * observed, 100 * expected, 300 * sd));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility(const Context& ctx) {
  Outcome out;
  const auto dir = ctx.work / "c9";
  std::filesystem::remove_all(dir);
  ConfigMap map;
  for (const std::string s :
       {"run.precision=f64", "data.train_count=96", "data.heldout_count=16", "codec.epochs=2", "codec.images=32",
        "train.max_steps=40", "train.eval_every=10", "train.eval_samples=8", "train.checkpoint_every=20",
        "train.batch=8", "model.d_h=32", "model.n_heads=2"}) {
    map.set_override(s);
  }
  map.set("data.root", (dir / "data").string());
  map.set("run.root", (dir / "runs").string());
  auto config = RunConfig::from(map);

  generate_dataset(config.data_root, config.synth, config.train_count, config.heldout_count);
  auto codec = ImageCodec<double>::create(config.codec);
  const auto train = read_dataset(DatasetLayout{config.data_root}.train());
  std::vector<Image> images;
  for (std::size_t i = 0; i < static_cast<std::size_t>(config.codec_images); ++i) images.push_back(train[i].image);
  codec_train(codec, std::span<const Image>(images), config.codec_epochs);
  save_codec(codec, config.codec_path);

  auto run = [&](const std::string& name, const PretrainOptions& options = {}) {
    auto c = config;
    c.name = name;
    return pretrain<double>(c, options);
  };
  const auto a = run("a");
  const auto b = run("b");
  const auto log_a = slurp(dir / "runs" / "a" / "metrics.log");
  const auto log_b = slurp(dir / "runs" / "b" / "metrics.log");
  out.expect(a.steps == 40 && !log_a.empty() && log_a == log_b,
             fmt("two runs, same seed/config/data: metrics logs identical (%zu bytes, %d steps)", log_a.size(),
                 a.steps));
  const auto sum_a = parameter_checksum(load_model<double>(a.final_checkpoint).params);
  out.expect(sum_a == parameter_checksum(load_model<double>(b.final_checkpoint).params),
             "final parameters identical");

  // Resume the first run from its step-20 checkpoint under a new name.
  std::filesystem::create_directories(dir / "runs" / "r");
  std::filesystem::copy_file(dir / "runs" / "a" / "ckpt-20.bin", dir / "runs" / "r" / "start.bin");
  {
    std::ifstream in(dir / "runs" / "a" / "metrics.log");
    std::ofstream head(dir / "runs" / "r" / "metrics.log");
    std::string line;
    for (int i = 0; i < 20 && std::getline(in, line); ++i) head << line << '\n';
  }
  PretrainOptions resume;
  resume.resume_from = dir / "runs" / "r" / "start.bin";
  const auto r = run("r", resume);
  out.expect(r.steps == 40 && slurp(dir / "runs" / "r" / "metrics.log") == log_a,
             "resumed from step 20: log continues identically to step 40");
  out.expect(parameter_checksum(load_model<double>(r.final_checkpoint).params) == sum_a,
             "resumed final parameters bit-identical");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int criterion = 0;
  Context ctx;
  std::string work = "acceptance-work";
  app.add_option("--criterion", criterion, "Criterion number 1-9")->required()->check(CLI::Range(1, 9));
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--cli", ctx.cli, "Path of the omnipt executable (criterion 6)");
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;
  std::filesystem::create_directories(ctx.work);

  static const std::array<std::pair<const char*, std::function<Outcome(const Context&)>>, 9> kCriteria{{
      {"gradient integrity", gradient_integrity},
      {"analytic loss values", analytic_losses},
      {"masking statistics", masking_statistics},
      {"sample-level oracle", sample_oracle},
      {"overfit convergence", overfit},
      {"learned alignment above chance", learned_alignment},
      {"image codec", codec_criterion},
      {"metric oracles", metric_oracles},
      {"reproducibility", reproducibility},
  }};
  const auto& [name, check] = kCriteria[static_cast<std::size_t>(criterion - 1)];
  Outcome outcome;
  try {
    outcome = check(ctx);
  } catch (const std::exception& e) {
    outcome.expect(false, std::string("exception: ") + e.what());
  }
  std::printf("criterion %d: %s  %s\n", criterion, outcome.pass ? "PASS" : "FAIL", name);
  for (const auto& n : outcome.notes) std::printf("%s\n", n.c_str());
  return outcome.pass ? 0 : 1;
}
