use causegraph::eval::{compute_report, parse_semeval, write_semeval, ConfusionMatrix, PairwiseReport, SemEvalRecord};
use proptest::prelude::*;

fn word() -> impl Strategy<Value = String> {
    "[a-zα-ω]{1,8}"
}

fn record() -> impl Strategy<Value = (u32, Vec<String>, usize, usize, u8, u8)> {
    (1u32..100_000, proptest::collection::vec(word(), 2..9), any::<usize>(), any::<usize>(), 0u8..3, 0u8..3)
}

proptest! {
    #[test]
    fn semeval_round_trip(raw in proptest::collection::vec(record(), 1..12)) {
        let mut records = Vec::new();
        let mut used = std::collections::BTreeSet::new();
        for (id, words, i, j, label, comment) in raw {
            if !used.insert(id) {
                continue;
            }
            let n = words.len();
            let (i, mut j) = (i % n, j % n);
            if i == j {
                j = (j + 1) % n;
            }
            let tagged: Vec<String> = words
                .iter()
                .enumerate()
                .map(|(k, w)| match k {
                    k if k == i => format!("<e1>{w}</e1>"),
                    k if k == j => format!("<e2>{w}</e2>"),
                    _ => w.clone(),
                })
                .collect();
            let label = ["Cause-Effect(e1,e2)", "Cause-Effect(e2,e1)", "Other"][label as usize];
            let comment = [None, Some(""), Some("note")][comment as usize];
            records.push(SemEvalRecord::new(id, &tagged.join(" "), label, comment).unwrap());
        }
        let text = write_semeval(&records);
        prop_assert_eq!(&parse_semeval(&text).unwrap(), &records);
        prop_assert_eq!(parse_semeval(&text.replace('\n', "\r\n")).unwrap(), records);
    }

    #[test]
    fn report_metrics_recompute_from_serialized_counts(cells in [0u64..500, 0u64..500, 0u64..500, 0u64..500], abst in 0u64..20) {
        let g = [[cells[0], cells[1]], [cells[2], cells[3]]];
        let mut c = ConfusionMatrix::from_grid(g);
        c.abstained = abst;
        prop_assume!(c.grid_total() > 0);
        let report = compute_report(c).unwrap();
        let back: PairwiseReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
        let n = back.confusion.counts;
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let f1 = |k: usize| ratio(2 * n[k][k], n[k][0] + n[k][1] + n[0][k] + n[1][k]);
        prop_assert!((back.macro_f1 - (f1(0) + f1(1)) / 2.0).abs() < 1e-12);
        let total: u64 = n.iter().flatten().sum();
        prop_assert!((back.micro_accuracy - ratio(n[0][0] + n[1][1], total)).abs() < 1e-12);
        prop_assert!((back.forward.precision - ratio(n[0][0], n[0][0] + n[0][1])).abs() < 1e-12);
        prop_assert!((back.backward.recall - ratio(n[1][1], n[0][1] + n[1][1])).abs() < 1e-12);
        prop_assert_eq!(back.confusion.record_total(), total + abst);
    }
}
