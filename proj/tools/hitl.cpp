// hitl: command-line entry points for labeling, training, evaluation,
// serving and replay.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "hitl/engine/session_log.hpp"
#include "hitl/service/config.hpp"
#include "hitl/service/runtime.hpp"
#include "hitl/service/server.hpp"
#include "hitl/weak_supervision/agreement.hpp"
#include "hitl/weak_supervision/aggregation.hpp"
#include "hitl/weak_supervision/labeling_function.hpp"
#include "hitl/weak_supervision/prefill.hpp"

#ifndef HITL_DEFAULT_CONFIG
#define HITL_DEFAULT_CONFIG "config/default.json"
#endif

using namespace hitl;
namespace fs = std::filesystem;

namespace {

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << j.dump(2) << '\n';
  else
    io::write_file(out, j.dump(2) + "\n");
}

void emit_text(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    io::write_file(out, text);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

fs::path resolve_config(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (fs::exists("config/default.json")) return "config/default.json";
  return HITL_DEFAULT_CONFIG;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::vector<nlu::LabelledText> corpus_data(const fs::path& path) {
  return nlu::labelled_from_corpus(load_corpus(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teacher-training dialogue simulator with supervisor takeover"};
  app.require_subcommand(1);
  std::string config_flag;
  app.add_option("--config", config_flag, "Config file (default: config/default.json)");
  auto config = [&] { return service::load_config(resolve_config(config_flag)); };

  // label-apply
  auto* la = app.add_subcommand("label-apply", "Apply labeling functions to a corpus; writes the vote matrix");
  std::string la_lfs, la_corpus, la_out;
  la->add_option("--lfs", la_lfs, "Labeling-function spec file (default from config)");
  la->add_option("--corpus", la_corpus, "Corpus JSONL (default from config)");
  la->add_option("-o,--out", la_out, "Output matrix JSON (default stdout)");

  // aggregate
  auto* ag = app.add_subcommand("aggregate", "Aggregate a vote matrix into labels");
  std::string ag_method, ag_matrix, ag_out, ag_corpus, ag_export;
  ag->add_option("method", ag_method, "majority | dawid-skene")
      ->required()
      ->check(CLI::IsMember({"majority", "dawid-skene"}));
  ag->add_option("--matrix", ag_matrix, "Vote matrix JSON from label-apply")->required();
  ag->add_option("-o,--out", ag_out, "Output JSON (default stdout)");
  ag->add_option("--corpus", ag_corpus, "Corpus for --export");
  ag->add_option("--export", ag_export, "Write covered items as training JSONL")->needs("--corpus");

  // train
  auto* tr = app.add_subcommand("train", "Train a model and write its checkpoint");
  std::string tr_what, tr_out, tr_corpus;
  tr->add_option("what", tr_what, "acts | relations")->required()->check(CLI::IsMember({"acts", "relations"}));
  tr->add_option("-o,--out", tr_out, "Checkpoint path (default from config)");
  tr->add_option("--corpus", tr_corpus, "Training corpus for acts (default from config)");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate the dialogue-act classifier");
  std::string ev_model, ev_corpus;
  bool ev_split = false;
  ev->add_option("--model", ev_model, "Checkpoint (default from config)");
  ev->add_option("--corpus", ev_corpus, "Labelled corpus (default from config)");
  ev->add_flag("--split", ev_split, "Train on the seeded training split and score the held-out part");

  // serve
  auto* sv = app.add_subcommand("serve", "Run the websocket/HTTP service");
  std::string sv_host;
  int sv_port = -1;
  sv->add_option("--host", sv_host, "Bind address");
  sv->add_option("--port", sv_port, "Port (0 picks a free one)");

  // simulate
  auto* sm = app.add_subcommand("simulate", "Replay a script of trainee utterances; writes the session log");
  std::string sm_script, sm_out, sm_session;
  std::optional<std::uint64_t> sm_seed;
  sm->add_option("script", sm_script, "One utterance per line")->required()->check(CLI::ExistingFile);
  sm->add_option("-o,--out", sm_out, "Session log path (default stdout)");
  sm->add_option("--seed", sm_seed, "Session seed (default from config)");
  sm->add_option("--session-id", sm_session, "Session id (default from config)");

  // report
  auto* rp = app.add_subcommand("report", "Reports over annotations and session logs");
  rp->require_subcommand(1);
  auto* rp_ag = rp->add_subcommand("agreement", "Annotator accuracy, kappa and timing");
  std::string rp_ann, rp_gold, rp_group_a, rp_group_b, rp_out;
  rp_ag->add_option("--annotations", rp_ann, "Annotation JSONL")->required()->check(CLI::ExistingFile);
  rp_ag->add_option("--gold", rp_gold, "Corpus JSONL with gold_label")->required()->check(CLI::ExistingFile);
  rp_ag->add_option("--group-a", rp_group_a, "Comma-separated annotators of group A");
  rp_ag->add_option("--group-b", rp_group_b, "Comma-separated annotators of group B");
  rp_ag->add_option("-o,--out", rp_out, "Output JSON (default stdout)");
  auto* rp_rs = rp->add_subcommand("routing-summary", "AI/supervisor tallies per utterance category");
  std::vector<std::string> rp_logs;
  rp_rs->add_option("logs", rp_logs, "Session logs")->required()->check(CLI::ExistingFile);
  rp_rs->add_option("-o,--out", rp_out, "Output JSON (default stdout)");
  auto* rp_iqa = rp->add_subcommand("iqa", "Question-quality feedback for one session");
  std::string rp_log;
  rp_iqa->add_option("log", rp_log, "Session log")->required()->check(CLI::ExistingFile);
  rp_iqa->add_option("-o,--out", rp_out, "Output JSON (default stdout)");

  // prefill
  auto* pf = app.add_subcommand("prefill", "Write model pre-filled annotation records for review");
  std::string pf_corpus, pf_out, pf_model;
  pf->add_option("--corpus", pf_corpus, "Unlabelled corpus JSONL")->required()->check(CLI::ExistingFile);
  pf->add_option("--model", pf_model, "Checkpoint (default from config)");
  pf->add_option("-o,--out", pf_out, "Output JSONL")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*la) {
      const auto c = config();
      const auto lfs = ws::compile_all(ws::load_lf_specs(la_lfs.empty() ? c.paths.lfs : fs::path(la_lfs)));
      const auto corpus = load_corpus(la_corpus.empty() ? c.paths.corpus : fs::path(la_corpus));
      emit(ws::to_json(ws::apply_labeling_functions(lfs, corpus)), la_out);
    } else if (*ag) {
      const auto m = ws::matrix_from_json(io::read_json(ag_matrix));
      json out;
      ws::SoftLabels labels;
      if (ag_method == "majority") {
        labels = ws::aggregate_majority(m);
        out = json{{"method", "majority"}, {"labels", ws::to_json(labels)}};
      } else {
        const auto r = ws::aggregate_dawid_skene(m);
        labels = r.labels;
        json conf = json::array();
        for (const auto& cm : r.confusions) conf.push_back(ws::to_json(cm));
        out = json{{"method", "dawid-skene"},   {"labels", ws::to_json(labels)}, {"confusions", conf},
                   {"priors", r.priors},        {"iterations", r.iterations},    {"converged", r.converged},
                   {"log_likelihood", r.log_likelihood}};
      }
      emit(out, ag_out);
      if (!ag_export.empty()) io::write_jsonl(ag_export, ws::training_export(labels, load_corpus(ag_corpus)));
    } else if (*tr) {
      const auto c = config();
      if (tr_what == "acts") {
        const auto data = corpus_data(tr_corpus.empty() ? c.paths.corpus : fs::path(tr_corpus));
        const auto model = nlu::train_act_model(data, c.acts);
        const fs::path out = tr_out.empty() ? c.paths.acts_model : fs::path(tr_out);
        ensure_parent(out);
        nlu::save_act_model(out, model);
        std::cout << json{{"model", "acts"}, {"examples", data.size()}, {"checkpoint", out.string()}}.dump() << '\n';
      } else {
        const auto patterns = nlu::load_entity_patterns(c.paths.patterns);
        const auto model = nlu::train_relation_model(patterns, c.relations);
        const fs::path out = tr_out.empty() ? c.paths.relations_model : fs::path(tr_out);
        ensure_parent(out);
        nlu::save_relation_model(out, model);
        std::cout << json{{"model", "relations"}, {"sentences", c.relations.sentences}, {"checkpoint", out.string()}}
                         .dump()
                  << '\n';
      }
    } else if (*ev) {
      const auto c = config();
      const auto data = corpus_data(ev_corpus.empty() ? c.paths.corpus : fs::path(ev_corpus));
      ml::EvaluationReport report;
      if (ev_split) {
        const auto [train, test] = nlu::split(data, c.train_fraction, c.split_seed);
        report = nlu::evaluate_act_model(nlu::train_act_model(train, c.acts), test);
      } else {
        report = nlu::evaluate_act_model(nlu::load_act_model(ev_model.empty() ? c.paths.acts_model : fs::path(ev_model)),
                                         data);
      }
      emit(ml::to_json(report), "");
    } else if (*sv) {
      auto c = config();
      if (!sv_host.empty()) c.server.host = sv_host;
      if (sv_port >= 0) c.server.port = static_cast<unsigned short>(sv_port);
      auto rt = service::make_runtime(c, service::load_models(c));
      service::Hub hub(rt, c.session, c.server.escalation_timeout_s);
      service::net::io_context ioc;
      service::Server server(ioc, hub, c);
      server.start();
      std::cout << "listening on " << c.server.host << ":" << server.port() << std::endl;
      service::net::signal_set signals(ioc, SIGINT, SIGTERM);
      signals.async_wait([&](auto, int) {
        server.stop();
        ioc.stop();
      });
      ioc.run();
    } else if (*sm) {
      const auto c = config();
      auto rt = service::make_runtime(c, service::load_models(c));
      auto cfg = c.session;
      cfg.seed = sm_seed.value_or(c.simulate.seed);
      const auto s = service::simulate(rt, cfg, sm_session.empty() ? c.simulate.session_id : sm_session,
                                       service::parse_script(io::read_file(sm_script)), c.simulate.canned_response);
      emit_text(engine::session_log_text(s), sm_out);
    } else if (*rp_ag) {
      const auto records = ws::load_annotations(rp_ann);
      std::map<std::string, DialogueAct> gold;
      for (const auto& u : load_corpus(rp_gold))
        if (u.gold) gold[u.id] = *u.gold;
      emit(ws::to_json(ws::agreement_report(records, gold, split_csv(rp_group_a), split_csv(rp_group_b))), rp_out);
    } else if (*rp_rs) {
      const auto c = config();
      std::vector<engine::Session> sessions;
      for (const auto& p : rp_logs) sessions.push_back(engine::load_session(p));
      std::vector<const engine::Session*> ptrs;
      for (const auto& s : sessions) ptrs.push_back(&s);
      json rows = json::array();
      for (const auto& r : engine::routing_summary(ptrs, engine::categories_from_json(c.categories)))
        rows.push_back(engine::to_json(r));
      emit(rows, rp_out);
    } else if (*rp_iqa) {
      const auto c = config();
      const auto templates = engine::load_templates(c.paths.templates);
      emit(engine::to_json(engine::iqa_feedback(engine::load_session(rp_log), templates)), rp_out);
    } else if (*pf) {
      const auto c = config();
      const auto model = nlu::load_act_model(pf_model.empty() ? c.paths.acts_model : fs::path(pf_model));
      const auto n = ws::export_prefill(load_corpus(pf_corpus), model, pf_out);
      std::cout << json{{"records", n}, {"out", pf_out}}.dump() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
