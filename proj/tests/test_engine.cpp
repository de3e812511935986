#include <gtest/gtest.h>

#include "hitl/engine/session_log.hpp"
#include "shipped.hpp"

using namespace hitl;
using namespace hitl::engine;
using nlu::EntityKind;
using nlu::FigureSide;

namespace {

nlu::ActPrediction prediction(DialogueAct act, double normalized_entropy) {
  nlu::ActPrediction p;
  p.act = act;
  p.uncertainty.normalized_entropy = normalized_entropy;
  p.uncertainty.argmax = index_of(act);
  return p;
}

nlu::RelationCandidate relation(double probability, std::optional<double> value = 5.0) {
  nlu::RelationCandidate r;
  r.value = value;
  r.probability = probability;
  r.label = value && probability >= 0.5;
  return r;
}

const StudentTemplates& templates() {
  static const auto t = load_templates(testutil::source("templates/student.json"));
  return t;
}

std::string respond(DialogueAct act, const std::string& text, const StudentPersona& persona = {},
                    const ScenarioState& state = {}) {
  Rng rng(1);
  return generate_student_response({act, nlu::extract_entities(text), false}, state, persona, templates(), rng);
}

Turn trainee_turn(std::size_t index, DialogueAct act) {
  Turn t;
  t.index = index;
  t.speaker = Speaker::Trainee;
  t.text = "q" + std::to_string(index);
  t.act = prediction(act, 0.1);
  return t;
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

// ---------------------------------------------------------------------------
// Scenario

TEST(Scenario, DefaultBoxes) {
  const auto s = make_scenario({5, 5, 5}, 2);
  EXPECT_EQ(s.right_dims(), (Dims{10, 10, 10}));
  EXPECT_EQ(s.volume_left(), 125);
  EXPECT_EQ(s.volume_right(), 1000);
}

TEST(Scenario, IdentityScale) {
  const auto s = make_scenario({2, 3, 4}, 1);
  EXPECT_EQ(s.right_dims(), s.left_dims);
  EXPECT_EQ(s.volume_left(), s.volume_right());
}

TEST(Scenario, VolumeRatioIsCube) {
  const auto s = make_scenario({2, 3, 4}, 3);
  EXPECT_DOUBLE_EQ(s.volume_right() / s.volume_left(), 27.0);
}

TEST(Scenario, ScalingLawOverSeededDraws) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const Dims d{uniform(rng, 0.1, 20), uniform(rng, 0.1, 20), uniform(rng, 0.1, 20)};
    const double k = uniform(rng, 0.1, 5);
    const auto s = make_scenario(d, k);
    const double expect = k * k * k * s.volume_left();
    ASSERT_LE(std::abs(s.volume_right() - expect), 1e-9 * expect) << "draw " << i;
    for (int j = 0; j < 3; ++j) ASSERT_EQ(s.right_dims()[j], k * d[j]);
    const auto one = make_scenario(d, 1);
    ASSERT_EQ(one.volume_right(), one.volume_left());
  }
}

TEST(Scenario, RejectsNonPositive) {
  EXPECT_THROW(make_scenario({0, 5, 5}, 2), ValidationError);
  EXPECT_THROW(make_scenario({5, -1, 5}, 2), ValidationError);
  EXPECT_THROW(make_scenario({5, 5, 5}, 0), ValidationError);
  EXPECT_THROW(make_scenario({5, 5, 5}, std::nan("")), ValidationError);
}

TEST(Scenario, Answers) {
  const auto s = make_scenario({5, 5, 5}, 2);
  EXPECT_EQ(scenario_answer(s, EntityKind::Volume, FigureSide::Right), 1000);
  EXPECT_EQ(scenario_answer(s, EntityKind::ScaleFactor), 2);
  EXPECT_EQ(scenario_answer(make_scenario({2, 3, 4}, 3), EntityKind::Length, FigureSide::Left), 2);
  EXPECT_EQ(scenario_answer(make_scenario({2, 3, 4}, 3), EntityKind::Height, FigureSide::Right), 12);
  EXPECT_THROW(scenario_answer(s, EntityKind::FigureRef), ValidationError);
}

TEST(Scenario, JsonRecomputesDerivedFields) {
  auto j = to_json(make_scenario({2, 3, 4}, 3));
  EXPECT_EQ(j["volume_right"], 648);
  j["volume_right"] = 1;
  const auto back = scenario_from_json(j);
  EXPECT_EQ(back.volume_right(), 648);
  EXPECT_THROW(scenario_from_json(json{{"left_dims", {1, 2}}, {"scale_factor", 2}}), ValidationError);
}

// ---------------------------------------------------------------------------
// Student responses

TEST(StudentResponse, FactualScaleFactor) {
  EXPECT_EQ(respond(DialogueAct::Factual, "What is the scale factor?"), "I think the scale factor is 2.");
}

TEST(StudentResponse, ProbingScaleFactorExplainsDivision) {
  const auto r = respond(DialogueAct::Probing, "How did you calculate the scale factor?");
  EXPECT_TRUE(contains(r, "divided the length of the right box by the length of the left box")) << r;
  EXPECT_TRUE(contains(r, "10 divided by 5 is 2")) << r;
}

TEST(StudentResponse, RightVolume) {
  EXPECT_EQ(respond(DialogueAct::Factual, "What is the right figure volume?"), "I think the volume of the right box is 1000.");
  EXPECT_EQ(respond(DialogueAct::Factual, "What is the volume of the left box?"), "I think the volume of the left box is 125.");
}

TEST(StudentResponse, MisconceptionAlwaysApplied) {
  StudentPersona p{Misconception::LinearVolumeScaling, 1.0};
  const auto r = respond(DialogueAct::Factual, "What is the volume of the right box?", p);
  EXPECT_TRUE(contains(r, "250")) << r;
  EXPECT_FALSE(contains(r, "1000")) << r;
  EXPECT_EQ(misconceived_volume_right(ScenarioState{}), 250);
  const auto why = respond(DialogueAct::Probing, "How did you get the volume of the right box?", p);
  EXPECT_TRUE(contains(why, "125 times 2 is 250")) << why;
}

TEST(StudentResponse, MisconceptionNeverAppliedAtRateZero) {
  StudentPersona p{Misconception::LinearVolumeScaling, 0.0};
  EXPECT_TRUE(contains(respond(DialogueAct::Factual, "What is the volume of the right box?", p), "1000"));
}

TEST(StudentResponse, MisconceptionLeavesOtherQuantitiesAlone) {
  StudentPersona p{Misconception::LinearVolumeScaling, 1.0};
  EXPECT_EQ(respond(DialogueAct::Factual, "What is the scale factor?", p), "I think the scale factor is 2.");
  EXPECT_TRUE(contains(respond(DialogueAct::Factual, "What is the volume of the left box?", p), "125"));
}

TEST(StudentResponse, MisconceptionRateIsRespected) {
  StudentPersona p{Misconception::LinearVolumeScaling, 0.3};
  Rng rng(5);
  int wrong = 0;
  const auto ents = nlu::extract_entities("What is the volume of the right box?");
  for (int i = 0; i < 2000; ++i)
    wrong += contains(generate_student_response({DialogueAct::Factual, ents, false}, {}, p, templates(), rng), "250");
  EXPECT_NEAR(wrong / 2000.0, 0.3, 0.04);
}

TEST(StudentResponse, DimensionAndUnknown) {
  EXPECT_EQ(respond(DialogueAct::Factual, "What is the width of the left box?"), "I think the width of the left box is 5.");
  EXPECT_TRUE(contains(respond(DialogueAct::Factual, "What is this?"), "not sure"));
}

TEST(StudentResponse, GreetingAndOther) {
  Rng rng(1);
  const auto g = generate_student_response({DialogueAct::Other, {}, true}, {}, {}, templates(), rng);
  EXPECT_TRUE(contains(g, "Hi!")) << g;
  const auto o = generate_student_response({DialogueAct::Other, {}, false}, {}, {}, templates(), rng);
  EXPECT_TRUE(o == "Okay!" || o == "Sure.") << o;
}

TEST(StudentResponse, TargetQuantityPrefersValuelessMention) {
  const auto q = target_quantity(nlu::extract_entities("If the length is 5, what is the volume of the left box?"));
  ASSERT_TRUE(q.has_value());
  EXPECT_EQ(q->kind, EntityKind::Volume);
  EXPECT_EQ(q->side, FigureSide::Left);
  EXPECT_FALSE(target_quantity(nlu::extract_entities("Sit down")).has_value());
  EXPECT_EQ(target_quantity(nlu::extract_entities("What is the volume?"))->side, FigureSide::Right);
}

TEST(Templates, RenderAndValidation) {
  EXPECT_EQ(render("{a} and {b}", {{"a", "x"}, {"b", "y"}}), "x and y");
  EXPECT_THROW(render("{missing}", {}), ValidationError);
  auto j = io::read_json(testutil::source("templates/student.json"));
  EXPECT_NO_THROW(templates_from_json(j));
  j["Factual"]["None"].erase("Volume");
  EXPECT_THROW(templates_from_json(j), ValidationError);
}

// ---------------------------------------------------------------------------
// Routing

TEST(Route, ConfidentFactualGoesToAI) {
  const auto d = route(prediction(DialogueAct::Factual, 0), {relation(0.99), relation(0.01)}, std::nullopt, {});
  EXPECT_EQ(d.handler, Handler::AI);
  EXPECT_TRUE(d.triggers.empty());
}

TEST(Route, ActUncertainty) {
  const auto d = route(prediction(DialogueAct::Probing, 0.7), {}, std::nullopt, {});
  EXPECT_EQ(d.handler, Handler::Supervisor);
  EXPECT_EQ(d.triggers, std::set{Trigger::ActUncertainty});
  EXPECT_EQ(d.scores.at(Trigger::ActUncertainty), 0.7);
  EXPECT_EQ(route(prediction(DialogueAct::Probing, 0.55), {}, std::nullopt, {}).handler, Handler::AI);
}

TEST(Route, RelationMarginIgnoresBlankCandidates) {
  EXPECT_TRUE(route(prediction(DialogueAct::Factual, 0), {relation(0.6)}, std::nullopt, {})
                  .fired(Trigger::RelationUncertainty));
  const auto blank = route(prediction(DialogueAct::Factual, 0), {relation(0.5, std::nullopt)}, std::nullopt, {});
  EXPECT_TRUE(blank.triggers.empty());
  EXPECT_FALSE(blank.scores.count(Trigger::RelationUncertainty));
  EXPECT_DOUBLE_EQ(*relation_margin({relation(0.9), relation(0.3)}), 0.2);
}

TEST(Route, TurnRepeatOnlyFlags) {
  const auto d = route(prediction(DialogueAct::Factual, 0.1), {}, 1.0, {});
  EXPECT_TRUE(d.fired(Trigger::TurnRepeat));
  EXPECT_EQ(d.handler, Handler::AI);
  EXPECT_FALSE(route(prediction(DialogueAct::Factual, 0.1), {}, 0.9, {}).fired(Trigger::TurnRepeat));
}

TEST(Route, OutOfDomainAndGreetingFastPath) {
  EXPECT_EQ(route(prediction(DialogueAct::Other, 0.45), {}, std::nullopt, {}).triggers, std::set{Trigger::OutOfDomain});
  const auto g = route(prediction(DialogueAct::Other, 0.45), {}, std::nullopt, {}, true);
  EXPECT_TRUE(g.greeting);
  EXPECT_EQ(g.handler, Handler::AI);
  const auto unsure = route(prediction(DialogueAct::Other, 0.8), {}, std::nullopt, {}, true);
  EXPECT_FALSE(unsure.greeting);
  EXPECT_EQ(unsure.handler, Handler::Supervisor);
  EXPECT_FALSE(route(prediction(DialogueAct::Factual, 0.45), {}, std::nullopt, {}).fired(Trigger::OutOfDomain));
}

TEST(Route, HandlerIffEscalatingTrigger) {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto act = act_from_index(uniform_index(rng, 4));
    const double h = uniform01(rng);
    std::optional<double> repeat;
    if (uniform01(rng) < 0.5) repeat = uniform01(rng);
    const auto d = route(prediction(act, h), {relation(uniform01(rng))}, repeat, {}, uniform01(rng) < 0.3);
    bool esc = false;
    for (auto t : d.triggers) esc = esc || escalates(t);
    ASSERT_EQ(d.handler == Handler::Supervisor, esc);
  }
}

TEST(Route, ValidatesThresholds) {
  Thresholds t;
  t.act = 1.5;
  EXPECT_THROW(route(prediction(DialogueAct::Factual, 0), {}, std::nullopt, t), ValidationError);
}

TEST(Route, JsonRoundTrip) {
  const auto d = route(prediction(DialogueAct::Other, 0.8), {relation(0.55)}, 0.95, {});
  EXPECT_EQ(routing_from_json(to_json(d)), d);
}

TEST(Pattern, BadRegexIsCompileError) {
  EXPECT_THROW(Pattern("(oops"), CompileError);
  EXPECT_TRUE(Pattern(kDefaultGreetingPattern).matches("Hello there"));
  EXPECT_FALSE(Pattern(kDefaultGreetingPattern).matches("Othello"));
}

// ---------------------------------------------------------------------------
// Sessions with the shipped models

class SessionTest : public ::testing::Test {
 protected:
  Runtime rt = shipped::runtime();
  Session s = new_session("t", shipped::session_config(3));
};

TEST_F(SessionTest, RightFigureVolumeAnsweredByAI) {
  const auto out = handle_utterance(s, rt, "What is the right figure volume?");
  ASSERT_EQ(out.handler, Handler::AI);
  EXPECT_TRUE(contains(*out.response, "1000")) << *out.response;
  ASSERT_EQ(s.transcript.size(), 2u);
  EXPECT_EQ(s.transcript[1].speaker, Speaker::StudentAI);
}

TEST_F(SessionTest, GreetingUsesGreetingTemplate) {
  const auto out = handle_utterance(s, rt, "Hi, How are you?");
  ASSERT_EQ(out.handler, Handler::AI);
  EXPECT_TRUE(out.routing.greeting);
  EXPECT_EQ(*out.response, templates().lookup(DialogueAct::Other, "None", "Greeting").front());
}

TEST_F(SessionTest, OutOfDomainQuestionsEscalate) {
  for (const char* q : {"Can you calculate it for a sphere?", "Have you seen the recent Batman movie?",
                        "What is your name?"}) {
    auto fresh = new_session("t", shipped::session_config(3));
    const auto out = handle_utterance(fresh, rt, q);
    EXPECT_EQ(out.handler, Handler::Supervisor) << q;
    ASSERT_TRUE(out.ticket_id.has_value()) << q;
    EXPECT_EQ(fresh.transcript.size(), 1u);
    EXPECT_EQ(fresh.pending_ticket()->utterance, q);
  }
}

TEST_F(SessionTest, ResolveLifecycle) {
  const auto out = handle_utterance(s, rt, "What is your name?");
  ASSERT_TRUE(out.ticket_id);
  EXPECT_THROW(handle_utterance(s, rt, "What is the scale factor?"), StateError);
  EXPECT_THROW(resolve_escalation(s, rt, *out.ticket_id, "   "), ValidationError);
  const auto ex = resolve_escalation(s, rt, *out.ticket_id, "My name is Alex!");
  EXPECT_FALSE(ex.has_value());
  ASSERT_EQ(s.transcript.size(), 2u);
  EXPECT_EQ(s.transcript[1].speaker, Speaker::StudentViaSupervisor);
  EXPECT_EQ(s.transcript[1].text, "My name is Alex!");
  EXPECT_EQ(s.tickets[0].state, TicketState::Resolved);
  EXPECT_EQ(s.tickets[0].supervisor_response, "My name is Alex!");
  EXPECT_THROW(resolve_escalation(s, rt, *out.ticket_id, "again"), StateError);
  EXPECT_THROW(resolve_escalation(s, rt, "t-99", "x"), StateError);
  EXPECT_NO_THROW(handle_utterance(s, rt, "What is the scale factor?"));
}

TEST_F(SessionTest, CorrectedActIsCaptured) {
  testutil::TempDir tmp;
  rt.capture_path = tmp / "capture.jsonl";
  const auto out = handle_utterance(s, rt, "What is your name?");
  const auto ex = resolve_escalation(s, rt, *out.ticket_id, "I am Alex.", DialogueAct::Probing);
  ASSERT_TRUE(ex.has_value());
  const auto rows = io::read_jsonl(*rt.capture_path);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0]["text"], "What is your name?");
  EXPECT_EQ(rows[0]["act"], "Probing");
  EXPECT_EQ(s.tickets[0].corrected_act, DialogueAct::Probing);
}

TEST_F(SessionTest, ExpiryApologises) {
  const auto out = handle_utterance(s, rt, "What is your name?");
  const auto reply = expire_escalation(s, rt, *out.ticket_id);
  EXPECT_EQ(reply, rt.templates->timeout.front());
  EXPECT_TRUE(s.tickets[0].timed_out);
  EXPECT_EQ(s.tickets[0].state, TicketState::Resolved);
  EXPECT_EQ(s.transcript.back().speaker, Speaker::StudentAI);
  EXPECT_THROW(expire_escalation(s, rt, *out.ticket_id), StateError);
}

TEST_F(SessionTest, ClosedSessionRejectsUtterances) {
  close_session(s);
  EXPECT_THROW(handle_utterance(s, rt, "Hi"), StateError);
}

TEST_F(SessionTest, RepeatedQuestionGetsRepeatTemplate) {
  const auto first = handle_utterance(s, rt, "What is the scale factor?");
  ASSERT_EQ(first.handler, Handler::AI);
  const auto again = handle_utterance(s, rt, "What is the scale factor?");
  ASSERT_EQ(again.handler, Handler::AI);
  EXPECT_TRUE(again.routing.fired(Trigger::TurnRepeat));
  EXPECT_NEAR(again.routing.scores.at(Trigger::TurnRepeat), 1.0, 1e-9);
  EXPECT_EQ(*again.response, "I already told you: " + *first.response);
}

TEST_F(SessionTest, TranscriptAlternatesAndIndicesIncrease) {
  for (const char* q : {"Hello", "What is the scale factor?", "What is your name?", "How did you get the volume?",
                        "Look at the left box.", "Have you seen the recent Batman movie?"}) {
    const auto out = handle_utterance(s, rt, q);
    if (out.ticket_id) resolve_escalation(s, rt, *out.ticket_id, "ok");
  }
  ASSERT_EQ(s.transcript.size() % 2, 0u);
  for (std::size_t i = 0; i < s.transcript.size(); ++i) {
    EXPECT_EQ(s.transcript[i].index, i);
    EXPECT_EQ(s.transcript[i].speaker == Speaker::Trainee, i % 2 == 0);
    if (i) {
      EXPECT_GT(s.transcript[i].timestamp_ms, s.transcript[i - 1].timestamp_ms);
    }
  }
}

TEST_F(SessionTest, IdenticalSeedsGiveIdenticalSessions) {
  const std::vector<std::string> script{"Hi", "What is the volume of the right box?", "What is your name?",
                                        "How did you calculate the scale factor?"};
  const auto a = service::simulate(rt, shipped::session_config(9), "x", script, "canned");
  const auto b = service::simulate(rt, shipped::session_config(9), "x", script, "canned");
  EXPECT_EQ(a, b);
  EXPECT_EQ(session_log_text(a), session_log_text(b));
  EXPECT_FALSE(a.open);
}

// ---------------------------------------------------------------------------
// Feedback

TEST(Feedback, CountsAndRatio) {
  Session s = new_session("f", {});
  for (auto a : {DialogueAct::Probing, DialogueAct::Probing, DialogueAct::Factual, DialogueAct::Probing})
    s.transcript.push_back(trainee_turn(s.transcript.size(), a));
  const auto r = iqa_feedback(s, templates());
  EXPECT_EQ(r.counts, (std::array<std::size_t, 4>{3, 1, 0, 0}));
  EXPECT_EQ(r.total, 4u);
  EXPECT_DOUBLE_EQ(r.probing_ratio, 0.75);
  EXPECT_TRUE(contains(r.narrative, "75%")) << r.narrative;
  EXPECT_EQ(feedback_from_json(to_json(r)).counts, r.counts);
}

TEST(Feedback, EmptySession) {
  const auto r = iqa_feedback(new_session("f", {}), templates());
  EXPECT_EQ(r.counts, (std::array<std::size_t, 4>{}));
  EXPECT_EQ(r.total, 0u);
  EXPECT_EQ(r.probing_ratio, 0.0);
  EXPECT_EQ(r.narrative, templates().feedback.at("empty"));
}

TEST(Feedback, CorrectionOverridesModelAct) {
  Session s = new_session("f", {});
  auto t = trainee_turn(0, DialogueAct::Other);
  t.ticket_id = "f-1";
  s.transcript.push_back(t);
  EscalationTicket tk;
  tk.id = "f-1";
  tk.state = TicketState::Resolved;
  tk.supervisor_response = "ok";
  tk.corrected_act = DialogueAct::Probing;
  s.tickets.push_back(tk);
  s.transcript.push_back(trainee_turn(1, DialogueAct::Factual));
  const auto r = iqa_feedback(s, templates());
  EXPECT_EQ(r.counts, (std::array<std::size_t, 4>{1, 1, 0, 0}));
  EXPECT_DOUBLE_EQ(r.probing_ratio, 0.5);
}

TEST(Feedback, Bands) {
  auto narrative = [](std::vector<DialogueAct> acts) {
    Session s = new_session("f", {});
    for (auto a : acts) s.transcript.push_back(trainee_turn(s.transcript.size(), a));
    return iqa_feedback(s, templates()).narrative;
  };
  const auto P = DialogueAct::Probing, F = DialogueAct::Factual;
  EXPECT_TRUE(contains(narrative({P, F}), "Keep pressing"));
  EXPECT_TRUE(contains(narrative({P, F, F, F}), "Try following up"));
  EXPECT_TRUE(contains(narrative({F, F, F, F, F, F}), "Only 0%"));
}

// ---------------------------------------------------------------------------
// Routing summary

namespace {

Session with_routed_turns(const std::vector<std::pair<std::string, Handler>>& turns) {
  Session s = new_session("r", {});
  for (const auto& [text, h] : turns) {
    Turn t;
    t.index = s.transcript.size();
    t.text = text;
    RoutingDecision d;
    d.handler = h;
    t.routing = d;
    s.transcript.push_back(t);
  }
  return s;
}

std::vector<Category> shipped_categories() { return categories_from_json(shipped::config().categories); }

const SummaryRow& row(const std::vector<SummaryRow>& rows, const std::string& name) {
  for (const auto& r : rows)
    if (r.category == name) return r;
  throw std::runtime_error("no row " + name);
}

}  // namespace

TEST(RoutingSummary, AllAiSession) {
  const auto s = with_routed_turns({{"Hello", Handler::AI}, {"What is the volume?", Handler::AI}, {"Great!", Handler::AI}});
  const auto rows = routing_summary({&s}, shipped_categories());
  for (const auto& r : rows) EXPECT_EQ(r.supervisor, 0u) << r.category;
  EXPECT_EQ(row(rows, "greeting").ai, 1u);
  EXPECT_EQ(row(rows, "dimension question").ai, 1u);
  EXPECT_EQ(row(rows, "acknowledgment").ai, 1u);
}

TEST(RoutingSummary, OneEscalation) {
  const auto s = with_routed_turns({{"Hello", Handler::AI}, {"What is your name?", Handler::Supervisor}});
  std::size_t sup = 0;
  for (const auto& r : routing_summary({&s}, shipped_categories())) sup += r.supervisor;
  EXPECT_EQ(sup, 1u);
}

TEST(RoutingSummary, MixedUncategorizedAndOrder) {
  const auto a = with_routed_turns({{"What is the volume?", Handler::AI}, {"zzz", Handler::AI}});
  const auto b = with_routed_turns({{"What is the width?", Handler::Supervisor}});
  const auto rows = routing_summary({&a, &b}, shipped_categories());
  EXPECT_TRUE(row(rows, "dimension question").mixed());
  EXPECT_EQ(rows.back().category, kUncategorized);
  EXPECT_EQ(rows.back().ai, 1u);
  EXPECT_TRUE(row(rows, "overly complex description").varied_based_on_turn);
  // "what is your name" matches chit-chat before anything later in the list
  const auto c = with_routed_turns({{"What is your name and the volume?", Handler::AI}});
  EXPECT_EQ(row(routing_summary({&c}, shipped_categories()), "chit-chat").ai, 1u);
}

TEST(RoutingSummary, NeedsSessions) {
  EXPECT_THROW(routing_summary({}, shipped_categories()), ValidationError);
}

// ---------------------------------------------------------------------------
// Session logs

namespace {

Session ten_turn_session() {
  const auto rt = shipped::runtime();
  auto s = new_session("log", shipped::session_config(5));
  for (const char* q : {"Hello", "What is the scale factor?", "What is your name?", "How did you get the volume?",
                        "What is the width of the left box?"}) {
    const auto out = handle_utterance(s, rt, q);
    if (out.ticket_id) resolve_escalation(s, rt, *out.ticket_id, "My name is Alex!", DialogueAct::Other);
  }
  return s;
}

}  // namespace

TEST(SessionLog, RoundTrip) {
  const auto s = ten_turn_session();
  ASSERT_EQ(s.transcript.size(), 10u);
  ASSERT_EQ(s.tickets.size(), 1u);
  EXPECT_EQ(s.tickets[0].state, TicketState::Resolved);
  testutil::TempDir tmp;
  persist_session(s, tmp / "s.jsonl");
  const auto back = load_session(tmp / "s.jsonl");
  EXPECT_EQ(back, s);
  EXPECT_EQ(session_log_text(back), session_log_text(s));
}

TEST(SessionLog, ResumedSessionContinuesIdentically) {
  auto a = ten_turn_session();
  auto b = parse_session_log(session_log_text(a));
  const auto rt = shipped::runtime();
  const auto ra = handle_utterance(a, rt, "What is the volume of the right box?");
  const auto rb = handle_utterance(b, rt, "What is the volume of the right box?");
  EXPECT_EQ(ra.response, rb.response);
  EXPECT_EQ(a.rng, b.rng);
}

TEST(SessionLog, TruncationIsParseErrorWithLine) {
  const auto text = session_log_text(ten_turn_session());
  const auto cut = text.substr(0, text.rfind("{\"record\":\"end\""));
  try {
    parse_session_log(cut);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 12u);
    EXPECT_TRUE(contains(e.what(), "truncated"));
  }
  const auto mid = text.substr(0, text.find('\n', text.find('\n') + 1) + 20);
  try {
    parse_session_log(mid);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(SessionLog, StructuralErrors) {
  const auto s = ten_turn_session();
  auto rows = session_records(s);
  auto join = [](const std::vector<json>& rs) {
    std::string t;
    for (const auto& r : rs) t += r.dump() + "\n";
    return t;
  };
  auto swapped = rows;
  std::swap(swapped[2], swapped[3]);
  EXPECT_THROW(parse_session_log(join(swapped)), ParseError);
  auto no_header = rows;
  no_header.erase(no_header.begin());
  EXPECT_THROW(parse_session_log(join(no_header)), ParseError);
  auto extra = rows;
  extra.push_back(rows[1]);
  EXPECT_THROW(parse_session_log(join(extra)), ParseError);
  auto bad_count = rows;
  bad_count.back()["turns"] = 3;
  EXPECT_THROW(parse_session_log(join(bad_count)), ParseError);
  auto unresolved = rows;
  unresolved[11].erase("supervisor_response");
  EXPECT_THROW(parse_session_log(join(unresolved)), ParseError);
  EXPECT_THROW(parse_session_log(""), ParseError);
}
