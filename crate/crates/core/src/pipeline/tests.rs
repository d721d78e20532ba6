use std::collections::BTreeSet;
use std::sync::Arc as Shared;

use proptest::prelude::*;

use super::*;
use crate::gateway::{CountingProvider, ProviderConfig, ReplayFixture, ReplayProvider};
use crate::prompt::MEDICAL_DOMAIN_HINT;

const TEXT: &str = "Chronic sleep deprivation raises cortisol levels. Elevated cortisol promotes \
insulin resistance, and insulin resistance leads to type 2 diabetes. Regular exercise lowers \
cortisol and improves insulin sensitivity.";

const TRUTH: &[(&str, &str)] = &[
    ("sleep deprivation", "cortisol levels"),
    ("cortisol levels", "insulin resistance"),
    ("insulin resistance", "type 2 diabetes"),
    ("regular exercise", "cortisol levels"),
];

fn reply() -> String {
    entity_reply(&[
        &["sleep deprivation"],
        &["cortisol levels", "Elevated cortisol"],
        &["insulin resistance"],
        &["type 2 diabetes"],
        &["Regular exercise"],
    ])
}

/// Answers from a list of (cause, effect) canonical labels.
fn oracle<'a>(truth: &'a [(&'a str, &'a str)]) -> impl FnMut(&OrientationQuestion, u32) -> String + 'a {
    move |q, _| {
        let (a, b) = (q.entity_a().canonical_label(), q.entity_b().canonical_label());
        let letter = if truth.contains(&(a, b)) {
            'A'
        } else if truth.contains(&(b, a)) {
            'B'
        } else {
            'C'
        };
        answer_reply(letter)
    }
}

fn fixture() -> ReplayFixture {
    scripted_fixture(TEXT, MEDICAL_DOMAIN_HINT, &reply(), DEFAULT_ENTITY_CAP, oracle(TRUTH)).unwrap()
}

fn numbered_text(n: usize) -> (String, Vec<String>) {
    let names: Vec<String> = (1..=n).map(|i| format!("agent{i:02}")).collect();
    (format!("{}.", names.join(" acts on ")), names)
}

fn numbered_reply(names: &[String]) -> String {
    names.iter().map(|n| format!("<Entity>{n}</Entity>")).collect()
}

#[test]
fn extraction_merges_synonyms_and_numbers_entities() {
    let x = extract_entities(TEXT, MEDICAL_DOMAIN_HINT, &Gateway::replay(fixture()), 20).unwrap();
    let labels: Vec<&str> = x.entities.iter().map(|e| e.canonical_label()).collect();
    assert_eq!(
        labels,
        ["sleep deprivation", "cortisol levels", "insulin resistance", "type 2 diabetes", "regular exercise"]
    );
    let ids: Vec<&str> = x.entities.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, ["e01", "e02", "e03", "e04", "e05"]);
    assert_eq!(x.entities[1].surface_forms().len(), 2);
    assert!(x.warnings.is_empty());
}

#[test]
fn extraction_order_does_not_depend_on_reply_order() {
    let shuffled = entity_reply(&[
        &["Regular exercise"],
        &["type 2 diabetes"],
        &["Elevated cortisol", "cortisol levels"],
        &["sleep deprivation"],
        &["insulin resistance"],
    ]);
    let run = |reply: &str| {
        let mut f = ReplayFixture::new(true);
        f.reply_for(&render_entity_prompt(TEXT, "").unwrap(), reply).unwrap();
        extract_entities(TEXT, "", &Gateway::replay(f), 20).unwrap().entities
    };
    assert_eq!(run(&reply()), run(&shuffled));
}

#[test]
fn spans_missing_from_text_are_dropped() {
    let mut f = ReplayFixture::new(true);
    let reply = "<Entity>sleep deprivation</Entity><Entity>obesity</Entity><Entity>type 2 diabetes</Entity>";
    f.reply_for(&render_entity_prompt(TEXT, "").unwrap(), reply).unwrap();
    let x = extract_entities(TEXT, "", &Gateway::replay(f), 20).unwrap();
    assert_eq!(x.entities.len(), 2);
    assert!(x.warnings[0].contains("obesity"));
}

#[test]
fn cap_keeps_earliest_entities() {
    let (text, names) = numbered_text(25);
    let mut f = ReplayFixture::new(true);
    f.reply_for(&render_entity_prompt(&text, "").unwrap(), numbered_reply(&names)).unwrap();
    let x = extract_entities(&text, "", &Gateway::replay(f), 20).unwrap();
    assert_eq!(x.entities.len(), 20);
    assert_eq!(x.entities[19].canonical_label(), "agent20");
    assert_eq!(x.warnings.len(), 1);
    assert!(x.warnings[0].contains("25 entities"));
}

#[test]
fn pairs_are_unique_and_ordered_by_mention() {
    let (text, names) = numbered_text(20);
    let entities: Vec<Entity> = names
        .iter()
        .rev()
        .enumerate()
        .map(|(i, n)| Entity::new(format!("x{i}"), n).unwrap().with_offset(text.find(n.as_str()).unwrap()))
        .collect();
    let pairs = enumerate_pairs(&entities, &text).unwrap();
    assert_eq!(pairs.len(), 190);
    let unordered: BTreeSet<_> = pairs
        .iter()
        .map(|q| {
            let (a, b) = (q.entity_a().id.clone(), q.entity_b().id.clone());
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    assert_eq!(unordered.len(), 190);
    assert!(pairs.iter().all(|q| q.entity_a().first_offset < q.entity_b().first_offset));
    assert!(matches!(enumerate_pairs(&entities[..1], &text), Err(PipelineError::TooFewEntities(1))));
}

fn one_question() -> OrientationQuestion {
    let a = Entity::new("e01", "sleep deprivation").unwrap().with_offset(8);
    let b = Entity::new("e02", "type 2 diabetes").unwrap().with_offset(TEXT.find("type 2").unwrap());
    OrientationQuestion::new(TEXT, a, b).unwrap()
}

#[test]
fn orientation_answers() {
    let q = one_question();
    let prompt = render_orientation_prompt(&q);
    for (reply, verdict) in [("<Answer>A</Answer>", Verdict::Forward), ("<Answer>C</Answer>", Verdict::NoRelation)] {
        let mut f = ReplayFixture::new(true);
        f.reply_for(&prompt, reply).unwrap();
        let out = query_orientation(&q, &Gateway::replay(f)).unwrap();
        assert_eq!(out.parsed.verdict, verdict);
        assert!(!out.reasked());
    }
}

#[test]
fn untagged_reply_is_asked_once_more() {
    let q = one_question();
    let prompt = render_orientation_prompt(&q);
    let mut f = ReplayFixture::new(true);
    f.reply_for(&prompt, "Diabetes clearly comes first.").unwrap();
    f.reply_for(&reask_prompt(&prompt), "<Answer>B</Answer>").unwrap();
    let out = query_orientation(&q, &Gateway::replay(f)).unwrap();
    assert_eq!(out.parsed.verdict, Verdict::Backward);
    assert!(out.reasked());
    assert_eq!(out.exchanges.len(), 2);

    let mut f = ReplayFixture::new(true);
    f.reply_for(&prompt, "no idea").unwrap();
    f.reply_for(&reask_prompt(&prompt), "still no idea").unwrap();
    let out = query_orientation(&q, &Gateway::replay(f)).unwrap();
    assert_eq!(out.parsed.verdict, Verdict::Unparsable);
}

#[test]
fn full_run_recovers_the_scripted_graph() {
    let run = run_pipeline(TEXT, MEDICAL_DOMAIN_HINT, &PipelineConfig::default(), &Gateway::replay(fixture())).unwrap();
    assert_eq!(run.stats.entity_count, 5);
    assert_eq!(run.stats.query_count, 10);
    assert_eq!(run.stats.abstention_count, 6);
    let label = |id: &EntityId| run.graph.entity(id).unwrap().canonical_label().to_owned();
    let arcs: BTreeSet<(String, String)> = run.graph.arcs().map(|a| (label(&a.cause), label(&a.effect))).collect();
    let expected: BTreeSet<(String, String)> = TRUTH.iter().map(|(c, e)| (c.to_string(), e.to_string())).collect();
    assert_eq!(arcs, expected);
    assert!(run.cycles.is_acyclic);
    assert!(run.transitive_candidates.is_empty());
    assert!(run.graph.arcs().all(|a| a.source_exchange.is_some()));
}

#[test]
fn report_round_trips() {
    let run = run_pipeline(TEXT, MEDICAL_DOMAIN_HINT, &PipelineConfig::default(), &Gateway::replay(fixture())).unwrap();
    let text = run.to_report();
    assert!(text.ends_with('\n'));
    let back = PipelineRun::from_report(&text).unwrap();
    assert_eq!(back, run);
    assert_eq!(back.to_report(), text);
}

/// Pseudo-random but fixed answers for every pair of a numbered text.
fn noisy_fixture(n: usize) -> (String, ReplayFixture) {
    let (text, names) = numbered_text(n);
    let fixture = scripted_fixture(&text, "", &numbered_reply(&names), 20, |q, attempt| {
        let key: usize =
            q.entity_a().canonical_label().bytes().chain(q.entity_b().canonical_label().bytes()).map(usize::from).sum();
        match (key % 7, attempt) {
            (0, 0) => "I cannot tell.".into(),
            (0, _) => answer_reply('B'),
            (1 | 2, _) => answer_reply('C'),
            (3 | 4, _) => answer_reply('B'),
            _ => answer_reply('A'),
        }
    })
    .unwrap();
    (text, fixture)
}

#[test]
fn result_is_independent_of_parallelism() {
    let (text, fixture) = noisy_fixture(10);
    let report = |p: usize| {
        let config = PipelineConfig { parallelism: p, ..PipelineConfig::default() };
        let mut run = run_pipeline(&text, "", &config, &Gateway::replay(fixture.clone())).unwrap();
        run.stats.parallelism = 0;
        run.stats.projected_wall_time_secs = 0.0;
        run.to_report()
    };
    let baseline = report(1);
    for p in [2, 8] {
        assert_eq!(report(p), baseline, "parallelism {p}");
    }
}

#[test]
fn twenty_entities_cost_one_extraction_plus_190_queries() {
    let (text, names) = numbered_text(20);
    let fixture = scripted_fixture(&text, "", &numbered_reply(&names), 20, |_, _| answer_reply('C')).unwrap();
    let provider = Shared::new(CountingProvider::new(ReplayProvider::new(fixture)));
    let gw = Gateway::new(ProviderConfig::default(), provider.clone()).unwrap();
    let config = PipelineConfig { parallelism: 4, ..PipelineConfig::default() };
    let run = run_pipeline(&text, "", &config, &gw).unwrap();
    assert_eq!(run.stats.query_count, 190);
    assert_eq!(provider.calls(), 191);
    assert_eq!(run.graph.arc_count(), 0);
}

#[test]
fn latency_statistics() {
    let mut f = fixture();
    let mut expected = Vec::new();
    for (i, entry) in f.entries.values_mut().enumerate() {
        entry.latency_secs = 0.25 * (i + 1) as f64;
    }
    let entity_fp = render_entity_prompt(TEXT, MEDICAL_DOMAIN_HINT).unwrap().fingerprint;
    for (fp, entry) in &f.entries {
        if *fp != entity_fp {
            expected.push(entry.latency_secs);
        }
    }
    let config = PipelineConfig { parallelism: 2, time_budget_secs: 1.0, ..PipelineConfig::default() };
    let run = run_pipeline(TEXT, MEDICAL_DOMAIN_HINT, &config, &Gateway::replay(f)).unwrap();
    let n = expected.len() as f64;
    let mean = expected.iter().sum::<f64>() / n;
    let var = expected.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((run.stats.mean_latency_secs - mean).abs() < 1e-12);
    assert!((run.stats.stdev_latency_secs - var.sqrt()).abs() < 1e-12);
    assert!((run.stats.projected_wall_time_secs - expected.iter().sum::<f64>() / 2.0).abs() < 1e-12);
    assert!(!run.stats.within_time_budget);
}

#[test]
fn failures_report_the_last_completed_stage() {
    let mut f = ReplayFixture::new(true);
    f.reply_for(&render_entity_prompt(TEXT, "").unwrap(), "<Entity>sleep deprivation</Entity>").unwrap();
    let err = run_pipeline(TEXT, "", &PipelineConfig::default(), &Gateway::replay(f)).unwrap_err();
    assert_eq!(err.completed_stage, Some(Stage::ExtractEntities));
    assert!(matches!(err.error, PipelineError::TooFewEntities(1)));

    let mut f = ReplayFixture::new(true);
    f.reply_for(&render_entity_prompt(TEXT, "").unwrap(), reply()).unwrap();
    let err = run_pipeline(TEXT, "", &PipelineConfig::default(), &Gateway::replay(f)).unwrap_err();
    assert_eq!(err.completed_stage, Some(Stage::EnumeratePairs));
    assert!(matches!(err.error, PipelineError::Gateway(GatewayError::FixtureMiss(_))));
    assert_eq!(err.entities.len(), 5);

    let err =
        run_pipeline(TEXT, "", &PipelineConfig::default(), &Gateway::replay(ReplayFixture::new(true))).unwrap_err();
    assert_eq!(err.completed_stage, None);
}

#[test]
fn enforcing_acyclicity_breaks_a_scripted_cycle() {
    let (text, names) = numbered_text(3);
    let cyc = [("agent01", "agent02"), ("agent02", "agent03"), ("agent03", "agent01")];
    let fixture = scripted_fixture(&text, "", &numbered_reply(&names), 20, oracle(&cyc)).unwrap();
    let config = PipelineConfig { enforce_acyclic: true, ..PipelineConfig::default() };
    let run = run_pipeline(&text, "", &config, &Gateway::replay(fixture)).unwrap();
    assert_eq!(run.cycles.cycles.len(), 1);
    assert_eq!(run.removed_arcs.len(), 1);
    assert_eq!(run.graph.arc_count(), 2);
    assert!(detect_cycles_ok(&run.graph));
}

fn detect_cycles_ok(g: &CausalGraph) -> bool {
    crate::graph::detect_cycles(g, DEFAULT_CYCLE_CAP).unwrap().is_acyclic
}

#[test]
fn cpdag_orientation() {
    let text = "Smoking damages the airways; airway damage causes chronic cough and persistent cough disturbs sleep.";
    let ents = vec![
        Entity::new("s", "smoking").unwrap(),
        Entity::new("d", "airway damage").unwrap(),
        Entity::new("c", "chronic cough").unwrap(),
        Entity::new("z", "sleep").unwrap(),
    ];
    let id = EntityId::new;
    let pdag =
        PartiallyDirectedGraph::new(ents, vec![(id("s"), id("d"))], vec![(id("c"), id("d")), (id("z"), id("c"))])
            .unwrap();

    let mut f = ReplayFixture::new(true);
    for (x, y, letter) in [("airway damage", "chronic cough", 'A'), ("chronic cough", "sleep", 'C')] {
        let off = |l: &str| text.find(l).unwrap();
        let q = OrientationQuestion::new(
            text,
            Entity::new(if x == "airway damage" { "d" } else { "c" }, x).unwrap().with_offset(off(x)),
            Entity::new(if y == "sleep" { "z" } else { "c" }, y).unwrap().with_offset(off(y)),
        )
        .unwrap();
        f.reply_for(&render_orientation_prompt(&q), answer_reply(letter)).unwrap();
    }
    let out = orient_cpdag(&pdag, text, &Gateway::replay(f), 2).unwrap();
    assert_eq!(out.queries, 2);
    assert!(out.graph.contains_arc("s", "d"));
    assert!(out.graph.contains_arc("d", "c"));
    assert_eq!(out.graph.arc_count(), 2);
    assert_eq!(out.warnings.len(), 1);

    let bad = PartiallyDirectedGraph::new(vec![], vec![(id("s"), id("d"))], vec![]);
    assert!(matches!(bad, Err(PipelineError::Pdag(_))));
}

fn verdict_strategy() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::Forward), Just(Verdict::Backward), Just(Verdict::NoRelation), Just(Verdict::Unparsable)]
}

proptest! {
    #[test]
    fn build_graph_matches_a_direct_fold(verdicts in proptest::collection::vec(verdict_strategy(), 15)) {
        let entities: Vec<Entity> = (0..6).map(|i| Entity::new(format!("n{i}"), &format!("node {i}")).unwrap()).collect();
        let mut map = BTreeMap::new();
        let mut expected = BTreeSet::new();
        let mut k = 0;
        for i in 0..6 {
            for j in i + 1..6 {
                let (a, b) = (entities[i].id.clone(), entities[j].id.clone());
                match verdicts[k] {
                    Verdict::Forward => { expected.insert((a.clone(), b.clone())); }
                    Verdict::Backward => { expected.insert((b.clone(), a.clone())); }
                    _ => {}
                }
                map.insert(EntityPair { a, b }, PairVerdict {
                    verdict: verdicts[k],
                    reasked: false,
                    exchange: Fingerprint::of("", &k.to_string()),
                    rationale: String::new(),
                });
                k += 1;
            }
        }
        let g = build_graph(&entities, &map).unwrap();
        let got: BTreeSet<_> = g.arc_keys().into_iter().collect();
        prop_assert_eq!(got, expected);
        prop_assert!(g.has_no_opposite_arcs());
    }
}
