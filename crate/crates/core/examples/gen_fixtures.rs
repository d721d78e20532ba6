//! Regenerates the bundled fixtures under `fixtures/`.
//!
//! ```text
//! cargo run -p causegraph --example gen_fixtures -- fixtures
//! ```
//!
//! Everything is derived from fixed seeds, so rerunning produces identical
//! files.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use causegraph::eval::{question_for, write_semeval, CausalOrientation, SemEvalRecord};
use causegraph::gateway::{Gateway, ReplayFixture};
use causegraph::graph::{to_structured, CausalGraph, GraphFile, GraphKind};
use causegraph::pipeline::{answer_reply, entity_reply, extract_entities, scripted_fixture};
use causegraph::prompt::{render_orientation_prompt, OrientationQuestion, MEDICAL_DOMAIN_HINT};
use rand::rngs::SmallRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub const METABOLIC_TEXT: &str = "Obesity is a major driver of chronic low-grade inflammation. Adipose tissue \
inflammation impairs insulin signalling, and the resulting insulin resistance promotes hyperglycaemia. \
Persistent hyperglycaemia damages the vascular endothelium, which increases the risk of hypertension. \
Hypertension in turn accelerates chronic kidney disease, and declining kidney function further aggravates \
endothelial dysfunction. Caloric restriction reduces body weight and lowers systemic inflammation, while \
metformin therapy improves insulin sensitivity. Smoking independently worsens endothelial dysfunction.\n";

const METABOLIC_ENTITIES: &[&[&str]] = &[
    &["Obesity"],
    &["chronic low-grade inflammation", "Adipose tissue inflammation", "systemic inflammation"],
    &["insulin resistance"],
    &["hyperglycaemia"],
    &["vascular endothelium", "endothelial dysfunction"],
    &["hypertension"],
    &["chronic kidney disease"],
    &["Caloric restriction"],
    &["metformin therapy"],
    &["Smoking"],
];

pub const METABOLIC_TRUTH: &[(&str, &str)] = &[
    ("obesity", "chronic low-grade inflammation"),
    ("chronic low-grade inflammation", "insulin resistance"),
    ("insulin resistance", "hyperglycaemia"),
    ("hyperglycaemia", "vascular endothelium"),
    ("vascular endothelium", "hypertension"),
    ("hypertension", "chronic kidney disease"),
    ("caloric restriction", "obesity"),
    ("caloric restriction", "chronic low-grade inflammation"),
    ("metformin therapy", "insulin resistance"),
    ("smoking", "vascular endothelium"),
];

/// What the scripted model answers: most of the truth, two shortcut arcs,
/// and a feedback loop through the kidneys.
const METABOLIC_MODEL: &[(&str, &str)] = &[
    ("obesity", "chronic low-grade inflammation"),
    ("chronic low-grade inflammation", "insulin resistance"),
    ("insulin resistance", "hyperglycaemia"),
    ("hyperglycaemia", "vascular endothelium"),
    ("vascular endothelium", "hypertension"),
    ("hypertension", "chronic kidney disease"),
    ("caloric restriction", "chronic low-grade inflammation"),
    ("metformin therapy", "insulin resistance"),
    ("smoking", "vascular endothelium"),
    ("obesity", "insulin resistance"),
    ("hyperglycaemia", "hypertension"),
    ("chronic kidney disease", "vascular endothelium"),
];

pub const BIOFEEDBACK_TEXT: &str = "Daily biofeedback training restored the autonomic balance of the \
participants. A restored autonomic balance kept blood glucose stable over the following weeks, and \
participants who continued biofeedback training also kept their blood glucose stable at follow-up.\n";

pub const BIOFEEDBACK_TRUTH: &[(&str, &str)] =
    &[("biofeedback training", "autonomic balance"), ("autonomic balance", "blood glucose")];

const BIOFEEDBACK_MODEL: &[(&str, &str)] = &[
    ("biofeedback training", "autonomic balance"),
    ("autonomic balance", "blood glucose"),
    ("biofeedback training", "blood glucose"),
];

const SCREENING_TERMS: [&str; 20] = [
    "hypertension",
    "dyslipidaemia",
    "obesity",
    "smoking",
    "physical inactivity",
    "poor diet",
    "alcohol misuse",
    "chronic stress",
    "sleep apnoea",
    "depression",
    "air pollution",
    "family history",
    "advanced age",
    "kidney disease",
    "diabetes",
    "atrial fibrillation",
    "heart failure",
    "stroke",
    "myocardial infarction",
    "peripheral artery disease",
];

pub fn screening_text() -> String {
    let (last, rest) = SCREENING_TERMS.split_last().unwrap();
    format!(
        "Participants were screened for {} and {last}; each condition was then related to later cardiovascular events.\n",
        rest.join(", ")
    )
}

const SCREENING_MODEL: &[(&str, &str)] = &[
    ("hypertension", "stroke"),
    ("hypertension", "heart failure"),
    ("hypertension", "kidney disease"),
    ("dyslipidaemia", "myocardial infarction"),
    ("obesity", "diabetes"),
    ("obesity", "sleep apnoea"),
    ("smoking", "peripheral artery disease"),
    ("smoking", "myocardial infarction"),
    ("physical inactivity", "obesity"),
    ("poor diet", "obesity"),
    ("alcohol misuse", "atrial fibrillation"),
    ("chronic stress", "hypertension"),
    ("sleep apnoea", "hypertension"),
    ("atrial fibrillation", "stroke"),
    ("diabetes", "kidney disease"),
    ("myocardial infarction", "heart failure"),
];

pub const AIRWAY_TEXT: &str = "Smoking damages the airways; airway damage causes chronic cough, and a \
persistent chronic cough disturbs sleep.\n";

fn oracle<'a>(arcs: &'a [(&'a str, &'a str)]) -> impl Fn(&OrientationQuestion) -> char + 'a {
    move |q| {
        let (a, b) = (q.entity_a().canonical_label(), q.entity_b().canonical_label());
        if arcs.contains(&(a, b)) {
            'A'
        } else if arcs.contains(&(b, a)) {
            'B'
        } else {
            'C'
        }
    }
}

fn latency(rng: &mut SmallRng) -> f64 {
    (rng.random_range(60..=180) as f64) / 10.0
}

fn with_latencies(mut fixture: ReplayFixture, seed: u64) -> ReplayFixture {
    let mut rng = SmallRng::seed_from_u64(seed);
    for entry in fixture.entries.values_mut() {
        entry.latency_secs = latency(&mut rng);
    }
    fixture
}

fn merge(into: &mut ReplayFixture, other: ReplayFixture) {
    for (fp, entry) in other.entries {
        into.insert(fp, entry).expect("fixtures agree");
    }
}

fn truth_graph(text: &str, reply: &str, arcs: &[(&str, &str)]) -> CausalGraph {
    let mut f = ReplayFixture::new(true);
    f.reply_for(&causegraph::prompt::render_entity_prompt(text, MEDICAL_DOMAIN_HINT).unwrap(), reply).unwrap();
    let x = extract_entities(text, MEDICAL_DOMAIN_HINT, &Gateway::replay(f), 20).unwrap();
    let labels: Vec<&str> = x.entities.iter().map(|e| e.canonical_label()).collect();
    CausalGraph::from_labels(GraphKind::GroundTruth, &labels, arcs).unwrap()
}

fn documents(dir: &Path) {
    let dir = dir.join("documents");
    fs::create_dir_all(&dir).unwrap();
    let mut fixture = ReplayFixture::new(true);

    let metabolic_reply = entity_reply(METABOLIC_ENTITIES);
    let answer = oracle(METABOLIC_MODEL);
    let f = scripted_fixture(METABOLIC_TEXT, MEDICAL_DOMAIN_HINT, &metabolic_reply, 20, |q, attempt| {
        let pair = (q.entity_a().canonical_label(), q.entity_b().canonical_label());
        match (pair, attempt) {
            (("obesity", "metformin therapy"), 0) => "Weight and this drug are linked in several ways.".into(),
            _ => answer_reply(answer(q)),
        }
    })
    .unwrap();
    merge(&mut fixture, with_latencies(f, 11));
    fs::write(dir.join("metabolic.txt"), METABOLIC_TEXT).unwrap();
    let truth = truth_graph(METABOLIC_TEXT, &metabolic_reply, METABOLIC_TRUTH);
    fs::write(dir.join("metabolic.truth.graph.json"), to_structured(&truth)).unwrap();

    let bio_reply = entity_reply(&[&["biofeedback training"], &["autonomic balance"], &["blood glucose"]]);
    let answer = oracle(BIOFEEDBACK_MODEL);
    let f = scripted_fixture(BIOFEEDBACK_TEXT, MEDICAL_DOMAIN_HINT, &bio_reply, 20, |q, _| answer_reply(answer(q)))
        .unwrap();
    merge(&mut fixture, with_latencies(f, 12));
    fs::write(dir.join("biofeedback.txt"), BIOFEEDBACK_TEXT).unwrap();
    let truth = truth_graph(BIOFEEDBACK_TEXT, &bio_reply, BIOFEEDBACK_TRUTH);
    fs::write(dir.join("biofeedback.truth.graph.json"), to_structured(&truth)).unwrap();

    let text = screening_text();
    let groups: Vec<[&str; 1]> = SCREENING_TERMS.iter().map(|t| [*t]).collect();
    let group_refs: Vec<&[&str]> = groups.iter().map(|g| g.as_slice()).collect();
    let answer = oracle(SCREENING_MODEL);
    let f =
        scripted_fixture(&text, MEDICAL_DOMAIN_HINT, &entity_reply(&group_refs), 20, |q, _| answer_reply(answer(q)))
            .unwrap();
    merge(&mut fixture, with_latencies(f, 13));
    fs::write(dir.join("screening.txt"), &text).unwrap();

    fixture.save(&dir.join("documents.replay.json")).unwrap();
}

fn graphs(dir: &Path) {
    let dir = dir.join("graphs");
    fs::create_dir_all(&dir).unwrap();
    let labels = ["chronic stress", "insomnia", "fatigue", "inactivity", "weight gain"];
    let arcs = [
        ("chronic stress", "insomnia"),
        ("insomnia", "fatigue"),
        ("fatigue", "chronic stress"),
        ("fatigue", "inactivity"),
        ("inactivity", "weight gain"),
        ("weight gain", "fatigue"),
    ];
    let g = CausalGraph::from_labels(GraphKind::Extracted, &labels, &arcs).unwrap();
    fs::write(dir.join("two_cycles.graph.json"), to_structured(&g)).unwrap();
}

fn cpdag(dir: &Path) {
    let dir = dir.join("cpdag");
    fs::create_dir_all(&dir).unwrap();
    let labels = ["smoking", "airway damage", "chronic cough", "sleep"];
    let g = CausalGraph::from_labels(GraphKind::Extracted, &labels, &[("smoking", "airway damage")]).unwrap();
    let mut value = serde_json::to_value(GraphFile::from_graph(&g)).unwrap();
    value["undirected"] = serde_json::json!([["airway damage", "chronic cough"], ["chronic cough", "sleep"]]);
    let mut text = serde_json::to_string_pretty(&value).unwrap();
    text.push('\n');
    fs::write(dir.join("airway.pdag.json"), text).unwrap();
    fs::write(dir.join("airway.txt"), AIRWAY_TEXT).unwrap();

    let pdag = causegraph::pipeline::parse_pdag(&fs::read_to_string(dir.join("airway.pdag.json")).unwrap()).unwrap();
    let mut fixture = ReplayFixture::new(true);
    let answer = oracle(&[("airway damage", "chronic cough"), ("chronic cough", "sleep")]);
    for (x, y) in &pdag.undirected_edges {
        let find = |id| {
            let e = pdag.entities.iter().find(|e| &e.id == id).unwrap().clone();
            let off = AIRWAY_TEXT.to_lowercase().find(e.canonical_label()).unwrap();
            e.with_offset(off)
        };
        let q = OrientationQuestion::in_document_order(AIRWAY_TEXT, find(x), find(y)).unwrap();
        fixture.reply_for(&render_orientation_prompt(&q), answer_reply(answer(&q))).unwrap();
    }
    fixture.save(&dir.join("airway.replay.json")).unwrap();
}

/// Tagged example sentences with their annotated orientation.
pub const TAGGED_EXAMPLES: [(&str, &str); 4] = [
    ("<e1>Zinc</e1> is essential for <e2>growth</e2> and cell division.", "Cause-Effect(e1,e2)"),
    ("The <e1>infection</e1> came from a <e2>wound</e2>.", "Cause-Effect(e2,e1)"),
    (
        "As we saw earlier, <e1>helicobacter</e1> is responsible for causing <e2>stomach ulcer</e2>.",
        "Cause-Effect(e1,e2)",
    ),
    ("The <e1>pseudolesion</e1> was caused by <e2>drainage</e2> of the paraumbilical vein.", "Cause-Effect(e2,e1)"),
];

/// Annotated sentences the model orients against the annotation, with the
/// answer it gives.
const MISORIENTED: [(&str, &str, char); 6] = [
    ("<e1>Alternators</e1> generate <e2>electricity</e2> by the same principle as DC generators.", "Cause-Effect(e1,e2)", 'B'),
    ("The <e1>movement</e1> developed from the <e2>rediscovery</e2> by European scholars of many Greek and Roman texts.", "Cause-Effect(e2,e1)", 'A'),
    ("The <e1>cow</e1> makes a <e2>sound</e2> called lowing, also known as mooing.", "Cause-Effect(e1,e2)", 'B'),
    ("Defra identified the different <e1>noises</e1> made by <e2>dogs</e2> and the meanings behind them.", "Cause-Effect(e2,e1)", 'A'),
    ("The relative <e1>calm</e1> produced by the Shia <e2>ceasefire</e2> has coincided with what the CIA is now calling the \"near strategic defeat\" of al-Qaeda in Iraq.", "Cause-Effect(e2,e1)", 'A'),
    ("The backup <e1>vocals</e1> are from a rather talented <e2>female</e2>, Stephanie Eitel.", "Cause-Effect(e2,e1)", 'A'),
];

const CAUSES: [&str; 24] = [
    "heavy rain",
    "a short circuit",
    "the earthquake",
    "poor hygiene",
    "the virus",
    "overheating",
    "a gas leak",
    "the drought",
    "excess sugar",
    "the explosion",
    "friction",
    "the storm",
    "air pollution",
    "a bacterial infection",
    "stress",
    "the fire",
    "corrosion",
    "the impact",
    "radiation",
    "the spill",
    "inflation",
    "the strike",
    "smoke",
    "vibration",
];
const EFFECTS: [&str; 24] = [
    "flooding",
    "the outage",
    "damage",
    "disease",
    "fever",
    "the failure",
    "an evacuation",
    "crop loss",
    "tooth decay",
    "panic",
    "wear",
    "delays",
    "asthma",
    "inflammation",
    "insomnia",
    "injuries",
    "leaks",
    "cracks",
    "burns",
    "contamination",
    "protests",
    "shortages",
    "coughing",
    "noise",
];
const FORWARD: [&str; 4] = [
    "<e1>{c}</e1> caused <e2>{e}</e2> in the region.",
    "Investigators confirmed that <e1>{c}</e1> led to <e2>{e}</e2>.",
    "The report links <e1>{c}</e1> directly to the <e2>{e}</e2> observed last year.",
    "<e1>{c}</e1> triggered widespread <e2>{e}</e2>.",
];
const BACKWARD: [&str; 4] = [
    "The <e1>{e}</e1> was caused by <e2>{c}</e2>.",
    "Most of the <e1>{e}</e1> resulted from <e2>{c}</e2>.",
    "Officials attributed the <e1>{e}</e1> to <e2>{c}</e2>.",
    "The <e1>{e}</e1> came from <e2>{c}</e2> according to the survey.",
];
const NON_CAUSAL: [(&str, &str); 6] = [
    ("A <e1>flock</e1> of <e2>geese</e2> crossed the field.", "Member-Collection(e2,e1)"),
    ("The <e1>jar</e1> held fresh <e2>honey</e2>.", "Content-Container(e2,e1)"),
    ("The <e1>factory</e1> produces <e2>tyres</e2> for trucks.", "Product-Producer(e2,e1)"),
    ("The <e1>letter</e1> was put into an <e2>envelope</e2>.", "Entity-Destination(e1,e2)"),
    ("The <e1>keyboard</e1> of the <e2>laptop</e2> was sticky.", "Component-Whole(e1,e2)"),
    ("The <e1>author</e1> discussed the <e2>novel</e2> at length.", "Other"),
];

fn fill(template: &str, c: &str, e: &str) -> String {
    let mut s = template.replace("{c}", c).replace("{e}", e);
    if let Some(first) = s.get(..1) {
        if first != "<" {
            return s;
        }
    }
    // capitalise a sentence that opens with a tagged span
    if let Some(pos) = s.find('>') {
        let rest = s.split_off(pos + 1);
        let mut chars = rest.chars();
        if let Some(ch) = chars.next() {
            s.push_str(&ch.to_uppercase().collect::<String>());
            s.push_str(chars.as_str());
        } else {
            s.push_str(&rest);
        }
    }
    s
}

/// `n` distinct synthetic sentences for one orientation.
fn synthetic(n: usize, forward: bool, rng: &mut SmallRng, used: &mut BTreeSet<String>) -> Vec<(String, &'static str)> {
    let (templates, label) = if forward { (FORWARD, "Cause-Effect(e1,e2)") } else { (BACKWARD, "Cause-Effect(e2,e1)") };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let c = CAUSES[rng.random_range(0..CAUSES.len())];
        let e = EFFECTS[rng.random_range(0..EFFECTS.len())];
        let t = templates[rng.random_range(0..templates.len())];
        let s = fill(t, c, e);
        if used.insert(s.clone()) {
            out.push((s, label));
        }
    }
    out
}

/// Reply letters per causal record, matching the orientation grid
/// [[335, 7], [6, 650]] plus 5 abstentions.
fn benchmark(dir: &Path) {
    let dir = dir.join("semeval");
    fs::create_dir_all(&dir).unwrap();
    let mut rng = SmallRng::seed_from_u64(2010);
    let mut used = BTreeSet::new();

    // (tagged sentence, label, answer)
    let mut items: Vec<(String, String, char)> = Vec::new();
    for (s, label, answer) in MISORIENTED {
        used.insert(s.to_owned());
        items.push((s.into(), label.into(), answer));
    }
    for (s, label) in TAGGED_EXAMPLES {
        used.insert(s.to_owned());
        let answer = if label.ends_with("(e1,e2)") { 'A' } else { 'B' };
        items.push((s.into(), label.into(), answer));
    }
    let count = |items: &[(String, String, char)], fwd: bool, ans: char| {
        items.iter().filter(|(_, l, a)| l.ends_with("(e1,e2)") == fwd && *a == ans).count()
    };
    // remaining cells of the grid, by (truth forward?, answer)
    let cells = [(true, 'A', 335), (true, 'B', 6), (false, 'A', 7), (false, 'B', 650), (true, 'C', 2), (false, 'C', 3)];
    for (fwd, ans, total) in cells {
        let have = count(&items, fwd, ans);
        for (s, label) in synthetic(total - have, fwd, &mut rng, &mut used) {
            items.push((s, label.into(), ans));
        }
    }
    for (s, label) in NON_CAUSAL {
        items.push((s.into(), label.into(), 'C'));
    }
    items.shuffle(&mut rng);

    let mut records = Vec::with_capacity(items.len());
    let mut fixture = ReplayFixture::new(true);
    for (i, (s, label, answer)) in items.iter().enumerate() {
        let r = SemEvalRecord::new(i as u32 + 1, s, label, Some("")).unwrap();
        if r.is_causal() {
            let prompt = render_orientation_prompt(&question_for(&r).unwrap());
            fixture.reply_for(&prompt, answer_reply(*answer)).unwrap();
        }
        records.push(r);
    }
    let fixture = with_latencies(fixture, 14);
    fs::write(dir.join("benchmark.txt"), write_semeval(&records)).unwrap();
    fixture.save(&dir.join("benchmark.replay.json")).unwrap();
}

fn sample100(dir: &Path) {
    let dir = dir.join("semeval");
    fs::create_dir_all(&dir).unwrap();
    let mut rng = SmallRng::seed_from_u64(8);
    let mut used = BTreeSet::new();
    let mut items: Vec<(String, String)> = Vec::new();
    for (s, l) in TAGGED_EXAMPLES.into_iter().chain(MISORIENTED.map(|(s, l, _)| (s, l))) {
        used.insert(s.to_string());
        items.push((s.to_string(), l.to_string()));
    }
    for (s, l) in synthetic(35, true, &mut rng, &mut used).into_iter().chain(synthetic(40, false, &mut rng, &mut used))
    {
        items.push((s, l.into()));
    }
    let mut k = 0;
    while items.len() < 100 {
        let (s, l) = NON_CAUSAL[k % NON_CAUSAL.len()];
        let s = if k < NON_CAUSAL.len() { s.to_owned() } else { s.replace('.', &format!(" on day {}.", k)) };
        items.push((s, l.into()));
        k += 1;
    }
    let comments = [None, Some(""), Some("checked twice")];
    let records: Vec<SemEvalRecord> = items
        .iter()
        .enumerate()
        .map(|(i, (s, l))| SemEvalRecord::new(i as u32 + 1, s, l, comments[i % 3]).unwrap())
        .collect();
    assert_eq!(records.len(), 100);
    assert!(records[..4].iter().all(|r| r.causal_orientation.is_some()));
    assert_eq!(records[1].causal_orientation, Some(CausalOrientation::E2CausesE1));
    fs::write(dir.join("sample100.txt"), write_semeval(&records)).unwrap();
}

pub fn generate(dir: &Path) {
    documents(dir);
    graphs(dir);
    cpdag(dir);
    benchmark(dir);
    sample100(dir);
}

#[allow(dead_code)]
fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    generate(Path::new(&dir));
    println!("fixtures written to {dir}");
}
