use std::collections::{BTreeMap, BTreeSet};

use ctxbench_core::baselines::{AliasTable, EmbeddingTable};
use ctxbench_core::datamodel::GraphBuilder;
use ctxbench_core::metrics::{ap_at_r, auroc, average_precision, r_squared, ContextSlices};
use ctxbench_core::rng::SeededRng;
use ctxbench_core::splits::{
    cold_split, generate_negatives, random_split, requested_negatives, stratified_split, ColdKey,
    NegativeHeuristic, NegativeSamplingConfig, SplitUnit,
};
use ctxbench_core::{
    BindingPair, Condition, ContextId, ContextSample, EntityId, ExpressionMatrix, Fold, Fractions, Label,
    PredictionRow, PredictionSet, SplitSpec,
};
use proptest::prelude::*;

fn ent(s: impl Into<String>) -> EntityId {
    EntityId::new(s).unwrap()
}

fn ctx(s: impl Into<String>) -> ContextId {
    ContextId::new(s).unwrap()
}

fn label(b: bool) -> Label {
    if b {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Scores on a coarse grid so ties are common.
fn scored(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<Label>)> {
    prop::collection::vec((0u8..8, any::<bool>()), 2..max).prop_map(|v| {
        let scores = v.iter().map(|(s, _)| *s as f64 / 7.0).collect();
        let labels = v.iter().map(|(_, l)| label(*l)).collect();
        (scores, labels)
    })
}

fn two_class(labels: &[Label]) -> bool {
    labels.iter().any(|l| l.is_positive()) && labels.iter().any(|l| !l.is_positive())
}

/// (entity, context) grid with random presence and labels.
fn sample_grid() -> impl Strategy<Value = Vec<ContextSample>> {
    prop::collection::vec((0usize..40, 0usize..5, any::<bool>()), 10..150).prop_map(|v| {
        let mut seen = BTreeSet::new();
        v.into_iter()
            .filter(|(e, c, _)| seen.insert((*e, *c)))
            .map(|(e, c, l)| ContextSample::new(ent(format!("e{e}")), ctx(format!("c{c}")), label(l)))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn auroc_is_a_probability_and_flips_under_score_negation((scores, labels) in scored(40)) {
        prop_assume!(two_class(&labels));
        let a = auroc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        let flipped: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
        let b = auroc(&flipped, &labels).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auroc_depends_only_on_order((scores, labels) in scored(40)) {
        prop_assume!(two_class(&labels));
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() / 40.0).collect();
        prop_assert_eq!(auroc(&scores, &labels).unwrap(), auroc(&warped, &labels).unwrap());
    }

    #[test]
    fn average_precision_bounds((scores, labels) in scored(40)) {
        prop_assume!(labels.iter().any(|l| l.is_positive()));
        let ap = average_precision(&scores, &labels).unwrap();
        let prevalence = labels.iter().filter(|l| l.is_positive()).count() as f64 / labels.len() as f64;
        prop_assert!(ap <= 1.0 + 1e-12);
        // a step-wise estimator never falls below the worst ranking's value, which is >= prevalence / n
        prop_assert!(ap > 0.0 && ap + 1e-12 >= prevalence / labels.len() as f64);
    }

    #[test]
    fn ap_at_r_is_bounded_and_tie_seed_stable((scores, labels) in scored(40), r in 1usize..30, seed in any::<u64>()) {
        let a = ap_at_r(&scores, &labels, r, seed).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!(a, ap_at_r(&scores, &labels, r, seed).unwrap());
        let distinct: BTreeSet<u64> = scores.iter().map(|s| s.to_bits()).collect();
        if distinct.len() == scores.len() {
            prop_assert_eq!(a, ap_at_r(&scores, &labels, r, seed ^ 1).unwrap());
        }
    }

    #[test]
    fn topk_aggregates_never_increase_with_k(samples in sample_grid(), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let rows: Vec<(ContextSample, f64)> = samples
            .iter()
            .map(|s| (s.clone(), (rng.below(1000) as f64) / 999.0))
            .collect();
        let slices = ContextSlices::from_scored(rows);
        let mut prev = f64::INFINITY;
        for k in 1..=slices.slices().len() {
            if let Ok(v) = slices.auroc_topk(k) {
                prop_assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
        let mut prev = f64::INFINITY;
        for k in 1..=slices.slices().len() {
            if let Ok(v) = slices.ap_at_r_topk(5, k, seed) {
                prop_assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn cold_split_keeps_entities_in_one_fold(samples in sample_grid(), seed in any::<u64>()) {
        let entities: BTreeSet<&EntityId> = samples.iter().map(|s| &s.entity).collect();
        prop_assume!(entities.len() >= 3);
        let spec = cold_split(&samples, Fractions::default(), seed, ColdKey::Entity).unwrap();
        let folds = [&spec.train, &spec.valid, &spec.test];
        let union: BTreeSet<&String> = folds.iter().flat_map(|f| f.iter()).collect();
        prop_assert_eq!(union.len(), spec.train.len() + spec.valid.len() + spec.test.len());
        prop_assert_eq!(union.len(), entities.len());
        for s in &samples {
            prop_assert!(spec.fold_of_sample(s).is_some());
        }
        let total: usize = [Fold::Train, Fold::Valid, Fold::Test].iter().map(|f| spec.select(&samples, *f).len()).sum();
        prop_assert_eq!(total, samples.len());
    }

    #[test]
    fn cold_split_ignores_input_order(samples in sample_grid(), seed in any::<u64>()) {
        let entities: BTreeSet<&EntityId> = samples.iter().map(|s| &s.entity).collect();
        prop_assume!(entities.len() >= 3);
        let mut reversed = samples.clone();
        reversed.reverse();
        let a = cold_split(&samples, Fractions::default(), seed, ColdKey::Entity).unwrap();
        let b = cold_split(&reversed, Fractions::default(), seed, ColdKey::Entity).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn stratified_split_tracks_class_ratio(n in 20usize..200, pos_frac in 0.05f64..0.95, seed in any::<u64>()) {
        let pos = ((n as f64 * pos_frac) as usize).clamp(1, n - 1);
        let samples: Vec<ContextSample> = (0..n)
            .map(|i| ContextSample::new(ent(format!("s{i:04}")), ctx("c"), label(i < pos)))
            .collect();
        let spec = stratified_split(&samples, 0.9, seed).unwrap();
        for fold in [Fold::Train, Fold::Test] {
            let sel = spec.select(&samples, fold);
            let p = sel.iter().filter(|s| s.label.is_positive()).count() as f64;
            let expected = sel.len() as f64 * pos as f64 / n as f64;
            prop_assert!((p - expected).abs() <= 1.0 + 1e-9, "{fold:?}: {p} vs {expected}");
        }
    }

    #[test]
    fn random_split_partitions_and_round_trips(n in 0usize..300, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("r{i}")).collect();
        let spec = random_split(&ids, Fractions::default(), seed, SplitUnit::Record);
        let sizes = Fractions::default().allocate(n);
        prop_assert_eq!([spec.train.len(), spec.valid.len(), spec.test.len()], sizes);
        let json = serde_json::to_string(&spec).unwrap();
        let back: SplitSpec = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn allocation_sums_and_stays_close(n in 0usize..10_000, a in 0u32..100, b in 0u32..100) {
        let total = (a + b + 1) as f64;
        let f = Fractions::new(a as f64 / total, b as f64 / total, 1.0 / total).unwrap();
        let sizes = f.allocate(n);
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        for (size, share) in sizes.iter().zip([f.train, f.valid, f.test]) {
            prop_assert!((*size as f64 - share * n as f64).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn negatives_avoid_positives(pairs in prop::collection::btree_set((0u8..12, 0u8..6), 1..30), ratio in 0.2f64..2.0, seed in any::<u64>(), et in any::<bool>()) {
        let positives: Vec<BindingPair> = pairs
            .iter()
            .map(|(r, l)| BindingPair::new(ent(format!("r{r}")), ent(format!("l{l}")), Label::Positive))
            .collect();
        let cfg = NegativeSamplingConfig {
            heuristic: if et { NegativeHeuristic::ET } else { NegativeHeuristic::RN },
            ratio,
            external_pool: (0..40).map(|i| ent(format!("x{i}"))).collect(),
            seed,
        };
        let want = requested_negatives(ratio, positives.len());
        match generate_negatives(&positives, &cfg) {
            Ok(neg) => {
                prop_assert_eq!(neg.len(), want);
                let pos_keys: BTreeSet<_> = positives.iter().map(|p| p.key()).collect();
                let uniq: BTreeSet<_> = neg.iter().map(|p| p.key()).collect();
                prop_assert_eq!(uniq.len(), neg.len());
                prop_assert!(neg.iter().all(|p| !pos_keys.contains(&p.key()) && !p.label.is_positive()));
            }
            // only acceptable when the candidate space is too small
            Err(e) => prop_assert!(matches!(e, ctxbench_core::SplitError::ExhaustedCandidates { .. }), "{e}"),
        }
    }

    #[test]
    fn graph_adjacency_is_symmetric(edges in prop::collection::vec((0u8..30, 0u8..30), 0..120)) {
        let mut b = GraphBuilder::new();
        for (u, v) in &edges {
            if u != v {
                b.add_edge(&ent(format!("n{u}")), &ent(format!("n{v}")), None).unwrap();
            }
        }
        let g = b.build();
        let degree_sum: usize = (0..g.node_count() as u32).map(|i| g.degree(i)).sum();
        prop_assert_eq!(degree_sum, 2 * g.edge_count());
        for (u, v, w) in g.edges() {
            prop_assert!(g.has_edge(u, v) && g.has_edge(v, u));
            prop_assert!(w > 0.0);
        }
    }

    #[test]
    fn normalized_cells_share_one_library_size(rows in prop::collection::vec(prop::collection::vec(0u32..50, 4), 2..12)) {
        let genes: Vec<EntityId> = (0..4).map(|i| ent(format!("g{i}"))).collect();
        let cells: Vec<String> = (0..rows.len()).map(|i| format!("cell{i}")).collect();
        let counts: Vec<f64> = rows.iter().flatten().map(|&c| c as f64).collect();
        let m = ExpressionMatrix::new(genes, cells, counts, Condition::Control, ctx("c")).unwrap();
        let totals: Vec<f64> = m.cell_totals();
        prop_assume!(totals.iter().any(|&t| t > 0.0));
        let n = m.normalize_counts().unwrap();
        let mut target = None;
        for c in 0..n.n_cells() {
            let back: f64 = n.normalized_row(c).unwrap().iter().map(|v| v.exp_m1()).sum();
            if totals[c] == 0.0 {
                prop_assert_eq!(back, 0.0);
            } else {
                let t = *target.get_or_insert(back);
                prop_assert!((back - t).abs() <= 1e-9 * t.max(1.0));
            }
        }
    }

    #[test]
    fn r_squared_of_exact_prediction_is_one(actual in prop::collection::vec(-10.0f64..10.0, 2..30)) {
        let spread = actual.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - actual.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-6);
        prop_assert!((r_squared(&actual, &actual).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alias_table_frequencies_follow_weights(weights in prop::collection::vec(0.0f64..5.0, 1..8), seed in any::<u64>()) {
        prop_assume!(weights.iter().sum::<f64>() > 0.1);
        let table = AliasTable::new(&weights);
        let mut rng = SeededRng::new(seed);
        let draws = 20_000;
        let mut counts = vec![0usize; weights.len()];
        for _ in 0..draws {
            counts[table.sample(&mut rng)] += 1;
        }
        let total: f64 = weights.iter().sum();
        for (c, w) in counts.iter().zip(&weights) {
            let p = w / total;
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            prop_assert!((*c as f64 / draws as f64 - p).abs() <= 6.0 * sd + 1e-9);
            if *w == 0.0 {
                prop_assert_eq!(*c, 0);
            }
        }
    }

    #[test]
    fn prediction_rows_reject_out_of_range(score in prop_oneof![-5.0f64..-1e-9, 1.0f64 + 1e-9..5.0]) {
        prop_assert!(PredictionRow::new(ent("e"), ctx("c"), score).is_err());
    }
}

#[test]
fn embedding_table_rejects_wrong_width() {
    let mut t = EmbeddingTable::new(3, "test").unwrap();
    t.insert(ent("a"), vec![0.0, 1.0, 2.0]).unwrap();
    assert!(t.insert(ent("b"), vec![0.0]).is_err());
    assert_eq!(t.len(), 1);
}

#[test]
fn duplicate_prediction_keys_are_rejected() {
    let row = || PredictionRow::new(ent("e"), ctx("c"), 0.5).unwrap();
    assert!(PredictionSet::new("d", vec![row(), row()]).is_err());
    let one = PredictionSet::new("d", vec![row()]).unwrap();
    let by_key: BTreeMap<_, _> = one.rows().iter().map(|r| ((r.entity.clone(), r.context.clone()), r.score)).collect();
    assert_eq!(by_key.len(), 1);
}
