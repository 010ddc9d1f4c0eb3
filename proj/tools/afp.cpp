// Command-line front door: extract / ingest / match / attack / spectrogram /
// gradcheck, wired to the afp library. Exit codes: 0 success, 1 failed
// check or internal error, 2 usage or file-format error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "afp/attack.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  int sample_rate = afp::kDefaultSampleRate;
  int fft_size = 1024;
  int hop = 256;
  int hann_width = 64;
  int w1 = 10;
  int w2 = 3;
  double theta = 0.01;
  double c_ratio = 0.05;
  double alpha = 1.0;
  double tau = 0.1;
  double eps = 0.05;
  int iterations = 2000;
  double lr = 2e-3;
  double lambda = 1.0;
  std::uint64_t seed = 0;

  afp::FrontendConfig frontend() const {
    return {.hann_width = hann_width, .fft_size = fft_size, .hop = hop};
  }
  afp::PeakParams peaks() const {
    return {.w1 = w1, .magnitude_floor_ratio = theta};
  }
  afp::LossParams loss() const {
    return {.w1 = w1, .w2 = w2, .margin_c = 1.0, .alpha = alpha, .lambda = lambda};
  }
};

int cmd_extract(const Options& opt, const std::string& input,
                const std::string& output, const std::string& json_path) {
  const afp::AudioSignal x = afp::load_audio(input, opt.sample_rate);
  const afp::Fingerprint fp = afp::fingerprint(x, opt.frontend(), opt.peaks());
  afp::serialize(fp, output);
  if (!json_path.empty()) {
    std::ofstream out(json_path, std::ios::trunc);
    out << afp::fingerprint_json(fp) << '\n';
    if (!out) throw std::runtime_error("failed to write " + json_path);
  }
  std::cout << "peak_count=" << fp.peaks.size() << '\n';
  return 0;
}

int cmd_ingest(const Options& opt, const std::string& dir,
               const std::string& db_dir) {
  std::vector<fs::path> wavs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") wavs.push_back(entry.path());
  }
  std::sort(wavs.begin(), wavs.end());

  afp::FingerprintDb db;
  for (const fs::path& wav : wavs) {
    const afp::AudioSignal x = afp::load_audio(wav, opt.sample_rate);
    afp::ingest(db, wav.stem().string(),
                afp::fingerprint(x, opt.frontend(), opt.peaks()));
  }
  afp::save_db(db, db_dir);
  std::cout << "ingested=" << db.entries.size() << '\n';
  return 0;
}

nlohmann::json match_to_json(const std::optional<afp::MatchResult>& m) {
  nlohmann::json j;
  j["matched"] = m.has_value();
  j["score"] = m ? m->score : 0.0;
  if (m) {
    j["track_id"] = m->track_id;
    j["offset_frames"] = m->offset_frames;
  }
  return j;
}

int cmd_match(const Options& opt, const std::string& query_wav,
              const std::string& db_dir) {
  const afp::AudioSignal x = afp::load_audio(query_wav, opt.sample_rate);
  const afp::Fingerprint q = afp::fingerprint(x, opt.frontend(), opt.peaks());
  if (q.peaks.empty()) {
    throw std::invalid_argument("query audio produced an empty fingerprint");
  }
  const afp::FingerprintDb db = afp::load_db(db_dir);
  std::cout << match_to_json(afp::query(db, q, opt.tau)).dump() << '\n';
  return 0;
}

int cmd_attack(const Options& opt, const std::string& input,
               const std::string& mode, const std::string& loss_name,
               const std::string& target, const std::string& output,
               const std::string& report_path, const std::string& db_dir) {
  const afp::AudioSignal x = afp::load_audio(input, opt.sample_rate);

  afp::AttackConfig config;
  config.epsilon = opt.eps;
  config.iterations = opt.iterations;
  config.learning_rate = opt.lr;
  config.loss = opt.loss();
  config.margin_ratio = opt.c_ratio;
  config.seed = opt.seed;
  config.mode = mode == "remix" ? afp::AttackMode::kRemix : afp::AttackMode::kDefault;
  config.objective = loss_name == "whitebox" ? afp::AttackObjective::kWhitebox
                                             : afp::AttackObjective::kRobust;

  std::pair<afp::AudioSignal, afp::AttackReport> result;
  if (config.mode == afp::AttackMode::kRemix) {
    const afp::AudioSignal y = afp::load_audio(target, opt.sample_rate);
    result = afp::remix_attack(x, y, config, opt.frontend(), opt.peaks());
  } else {
    result = afp::default_attack(x, config, opt.frontend(), opt.peaks());
  }

  if (!db_dir.empty()) {
    const afp::FingerprintDb db = afp::load_db(db_dir);
    const auto q_before = afp::fingerprint(x, opt.frontend(), opt.peaks());
    const auto q_after = afp::fingerprint(result.first, opt.frontend(), opt.peaks());
    if (!q_before.peaks.empty()) {
      result.second.match_before = afp::query(db, q_before, opt.tau);
    }
    if (!q_after.peaks.empty()) {
      result.second.match_after = afp::query(db, q_after, opt.tau);
    }
  }

  afp::save_audio(result.first, output);
  const std::string json = afp::report_json(result.second, config);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::trunc);
    out << json << '\n';
    if (!out) throw std::runtime_error("failed to write " + report_path);
  }
  std::cout << json << '\n';
  return 0;
}

int cmd_gradcheck(const Options& opt, int trials, int samples) {
  constexpr double kThreshold = 1e-4;
  const afp::FrontendConfig frontend = opt.frontend();
  const afp::PeakParams peaks = opt.peaks();

  double worst[3] = {0.0, 0.0, 0.0};
  const afp::LossKind kinds[3] = {afp::LossKind::kWhitebox,
                                  afp::LossKind::kRobust, afp::LossKind::kRemix};
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(opt.seed * 1000003ull + static_cast<std::uint64_t>(trial));
    afp::AudioSignal x;
    x.sample_rate = opt.sample_rate;
    x.samples.resize(samples);
    for (double& s : x.samples) {
      s = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    }
    const afp::Spectrogram spec = afp::features(x, frontend);
    const afp::Fingerprint psi =
        afp::extract_peaks(spec, peaks, afp::config_digest(frontend, peaks));
    afp::LossParams params = opt.loss();
    params.margin_c = opt.c_ratio * spec.global_max();

    for (int i = 0; i < 3; ++i) {
      const double err = afp::finite_diff_check(
          kinds[i], x, psi, frontend, peaks, params, 1e-4, 64,
          opt.seed + static_cast<std::uint64_t>(trial) * 7919ull);
      worst[i] = std::max(worst[i], err);
    }
  }

  const char* names[3] = {"whitebox", "robust", "remix"};
  bool ok = true;
  for (int i = 0; i < 3; ++i) {
    std::printf("%s max_rel_error=%.3e %s\n", names[i], worst[i],
                worst[i] < kThreshold ? "ok" : "FAIL");
    ok = ok && worst[i] < kThreshold;
  }
  return ok ? 0 : 1;
}

int cmd_spectrogram(const Options& opt, const std::string& input,
                    const std::string& output) {
  const afp::AudioSignal x = afp::load_audio(input, opt.sample_rate);
  const afp::Spectrogram spec = afp::features(x, opt.frontend());
  const std::string ext = fs::path(output).extension().string();
  if (ext == ".csv") {
    afp::write_spectrogram_csv(spec, output);
  } else if (ext == ".pgm") {
    afp::write_spectrogram_pgm(spec, output);
  } else {
    throw std::invalid_argument("output must end in .csv or .pgm");
  }
  std::cout << "frames=" << spec.frames << " bins=" << spec.bins << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral-peak audio fingerprinting, matching, and evasion"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "read option defaults from a key=value file");

  Options opt;
  app.add_option("--sample-rate", opt.sample_rate, "working sample rate (Hz)");
  app.add_option("--fft-size", opt.fft_size, "analysis window length");
  app.add_option("--hop", opt.hop, "samples between frames");
  app.add_option("--hann-width", opt.hann_width, "smoothing kernel width");
  app.add_option("--w1", opt.w1, "peak/pool half-width");
  app.add_option("--w2", opt.w2, "small pool half-width");
  app.add_option("--theta", opt.theta, "peak magnitude floor ratio");
  app.add_option("--c-ratio", opt.c_ratio, "hinge margin as a ratio of max phi");
  app.add_option("--alpha", opt.alpha, "smooth-max sharpness");
  app.add_option("--tau", opt.tau, "match score threshold");
  app.add_option("--eps", opt.eps, "perturbation budget on the [0,1] scale");
  app.add_option("--iterations", opt.iterations, "attack iterations");
  app.add_option("--lr", opt.lr, "Adam learning rate");
  app.add_option("--lambda", opt.lambda, "remix term weight");
  app.add_option("--seed", opt.seed, "seed for all randomness");

  std::string input, output, json_path, db_dir, target, report_path;
  std::string mode = "default", loss_name = "robust";
  int trials = 20, samples = 4096;

  auto* extract = app.add_subcommand("extract", "fingerprint a wav into a .afp");
  extract->add_option("input", input, "input wav")->required();
  extract->add_option("-o,--output", output, "output .afp path")->required();
  extract->add_option("--json", json_path, "also write a JSON mirror");

  auto* ingest = app.add_subcommand("ingest", "build a fingerprint db from wavs");
  ingest->add_option("dir", input, "directory of wav files")->required();
  ingest->add_option("--db", db_dir, "database directory")->required();

  auto* match = app.add_subcommand("match", "query a wav against a db");
  match->add_option("query", input, "query wav")->required();
  match->add_option("--db", db_dir, "database directory")->required();

  auto* attack = app.add_subcommand("attack", "craft an evasion perturbation");
  attack->add_option("input", input, "input wav")->required();
  attack->add_option("-o,--output", output, "adversarial wav path")->required();
  attack->add_option("--mode", mode, "default|remix")
      ->check(CLI::IsMember({"default", "remix"}));
  attack->add_option("--loss", loss_name, "robust|whitebox (default mode)")
      ->check(CLI::IsMember({"robust", "whitebox"}));
  attack->add_option("--target", target, "remix target wav");
  attack->add_option("--report", report_path, "write the report JSON here");
  attack->add_option("--db", db_dir, "match before/after against this db");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference audit");
  gradcheck->add_option("--trials", trials, "random signals per loss");
  gradcheck->add_option("--samples", samples, "signal length");

  auto* spect = app.add_subcommand("spectrogram", "export features as csv/pgm");
  spect->add_option("input", input, "input wav")->required();
  spect->add_option("-o,--output", output, "output .csv or .pgm")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (extract->parsed()) return cmd_extract(opt, input, output, json_path);
    if (ingest->parsed()) return cmd_ingest(opt, input, db_dir);
    if (match->parsed()) return cmd_match(opt, input, db_dir);
    if (attack->parsed()) {
      if (mode == "remix" && target.empty()) {
        std::cerr << "error: remix mode requires --target\n";
        return 2;
      }
      return cmd_attack(opt, input, mode, loss_name, target, output,
                        report_path, db_dir);
    }
    if (gradcheck->parsed()) return cmd_gradcheck(opt, trials, samples);
    if (spect->parsed()) return cmd_spectrogram(opt, input, output);
  } catch (const afp::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const afp::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
