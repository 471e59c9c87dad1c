// Copyright 2026 The gmtl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gmtl/cli.hpp"

#include <CLI11.hpp>
#include <ostream>

#include "gmtl/data.hpp"
#include "gmtl/errors.hpp"
#include "gmtl/metrics.hpp"
#include "gmtl/trainer.hpp"

namespace gmtl {

namespace {

KeyValues read_config_file(const std::string& path) {
  if (path.empty()) return {};
  return parse_key_values(read_text_file(path));
}

std::string oracle_csv(const GvOracle& o) {
  std::string s = "dim,gv_natural,gv_condmean\n";
  for (std::size_t d = 0; d < o.gv_natural.size(); ++d) {
    s += std::to_string(d) + "," + format_double(o.gv_natural[d]) + "," + format_double(o.gv_condmean[d]) + "\n";
  }
  return s;
}

// Reference acoustic frames for the split a synthesized dataset was made from,
// checked frame by frame against the hypothesis layout.
std::pair<std::vector<Tensor>, std::vector<Tensor>> aligned_frames(const Dataset& ref, const Dataset& hyp) {
  auto it = hyp.extra.find("source.split");
  const std::vector<std::size_t> idx =
      it == hyp.extra.end() ? [&] {
        std::vector<std::size_t> all(ref.utterances.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }()
                            : ref.indices(parse_split(it->second));
  if (idx.size() != hyp.utterances.size()) {
    throw ShapeError("hypothesis has " + std::to_string(hyp.utterances.size()) + " utterances, reference split has " +
                     std::to_string(idx.size()));
  }
  std::vector<Tensor> r, h;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Utterance& ru = ref.utterances[idx[k]];
    const Utterance& hu = hyp.utterances[k];
    if (ru.frames() != hu.frames() || ru.acoustic.shape() != hu.acoustic.shape()) {
      throw ShapeError("utterance " + std::to_string(idx[k]) + ": reference " + shape_str(ru.acoustic.shape()) +
                       " and hypothesis " + shape_str(hu.acoustic.shape()) + " are not aligned");
    }
    r.push_back(ru.acoustic);
    h.push_back(hu.acoustic);
  }
  return {std::move(r), std::move(h)};
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GAN-based multi-task acoustic modeling toolkit", "gmtl"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_path, ckpt_path, split = "test", ref_path, hyp_path, report_path;
  std::uint64_t seed = 0;
  bool resume = false;

  auto* gendata = app.add_subcommand("gendata", "Generate a synthetic corpus and its oracle GV table");
  gendata->add_option("--config", config_path, "corpus.* key=value file");
  gendata->add_option("--out", out_path, "output dataset path")->required();
  auto* gendata_seed = gendata->add_option("--seed", seed, "corpus seed (overrides corpus.seed)");

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config_path, "section.key=value experiment file");
  train->add_option("--data", data_path, "dataset path (overrides train.data)");
  train->add_option("--out", out_path, "output directory (overrides train.out)");
  train->add_flag("--resume", resume, "continue from <out>/checkpoint.gmtl");

  auto* synth = app.add_subcommand("synth", "Synthesize acoustic frames for one split");
  synth->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  synth->add_option("--data", data_path, "dataset path")->required();
  synth->add_option("--split", split, "train, valid or test")->check(CLI::IsMember({"train", "valid", "test"}));
  synth->add_option("--seed", seed, "noise seed");
  synth->add_option("--out", out_path, "output dataset path")->required();

  auto* eval = app.add_subcommand("eval", "Objective metrics of synthesized frames");
  eval->add_option("--ref", ref_path, "reference dataset")->required();
  eval->add_option("--hyp", hyp_path, "synthesized dataset")->required();
  eval->add_option("--report", report_path, "report path (GV table goes to <report>.gv.csv)")->required();

  auto* gv = app.add_subcommand("gv", "Per-coefficient GV table");
  gv->add_option("--ref", ref_path, "reference dataset")->required();
  gv->add_option("--hyp", hyp_path, "synthesized dataset")->required();
  gv->add_option("--out", out_path, "CSV path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gendata->parsed()) {
      CorpusConfig cfg = CorpusConfig::from_kv(read_config_file(config_path));
      if (*gendata_seed) cfg.seed = seed;
      auto [ds, gt] = generate_corpus(cfg);
      write_dataset(ds, out_path);
      write_text_file(out_path + ".gv_oracle.csv", oracle_csv(natural_gv_oracle(gt, empirical_marginal(ds, Split::kTest))));
      out << "wrote " << ds.utterances.size() << " utterances to " << out_path << "\n";
    } else if (train->parsed()) {
      KeyValues kv = read_config_file(config_path);
      if (!data_path.empty()) kv["train.data"] = data_path;
      if (!out_path.empty()) kv["train.out"] = out_path;
      const TrainConfig cfg = TrainConfig::from_kv(kv);
      if (cfg.data.empty() || cfg.out.empty()) {
        err << "train: dataset and output directory are required (--data/--out or train.data/train.out)\n";
        return kExitUsage;
      }
      const Dataset ds = read_dataset(cfg.data);
      const TrainOutcome res = run_training(cfg, ds, cfg.out, resume);
      if (res.nan_abort) {
        err << "training aborted at step " << res.log.back().step << ": " << res.abort_reason << "\n";
        return kExitRuntime;
      }
      out << "trained to step " << res.state.step << "\n";
    } else if (synth->parsed()) {
      const TrainState s = load_checkpoint(ckpt_path);
      const Dataset ds = read_dataset(data_path);
      write_dataset(synthesize_split(s, ds, parse_split(split), seed), out_path);
      out << "wrote " << split << " split predictions to " << out_path << "\n";
    } else if (eval->parsed()) {
      const Dataset ref = read_dataset(ref_path);
      const Dataset hyp = read_dataset(hyp_path);
      auto [r, h] = aligned_frames(ref, hyp);
      const MetricsReport rep = evaluate(r, h, ref.config.mcc_dims);
      write_text_file(report_path, format_report(rep));
      write_text_file(report_path + ".gv.csv", format_gv_csv(rep.gv_ref, rep.gv_hyp));
      out << format_report(rep);
    } else if (gv->parsed()) {
      const Dataset ref = read_dataset(ref_path);
      const Dataset hyp = read_dataset(hyp_path);
      auto [r, h] = aligned_frames(ref, hyp);
      const std::size_t M = ref.config.mcc_dims;
      std::vector<Tensor> rm, hm;
      for (std::size_t k = 0; k < r.size(); ++k) {
        rm.push_back(mcc_columns(r[k], M));
        hm.push_back(mcc_columns(h[k], M));
      }
      const std::string csv = format_gv_csv(global_variance(rm), global_variance(hm));
      if (out_path.empty()) {
        out << csv;
      } else {
        write_text_file(out_path, csv);
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace gmtl
