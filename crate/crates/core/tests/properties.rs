mod support;

use std::collections::BTreeMap;

use clinote_core::adapters::{
    dequantize, lora_forward, lora_merge, lora_param_stats, quantize_blockwise, LoraAdapter, Matrix, QuantScheme,
    Vector, NF4_CODEBOOK,
};
use clinote_core::corpus::{corpus_stats, encounter_counts, Corpus, EncounterPair, Split};
use clinote_core::dialogue::{count_tokens, normalize_text, parse_dialogue, SubwordVocab, Tokenizer};
use clinote_core::instruct::{parse_records, serialize_records, InstructionRecord};
use clinote_core::metrics::{bert_score, lcs_length, rouge_lsum_tokens, rouge_n, EmbeddedSequence};
use clinote_core::report::{parse_rows_csv, render_leaderboard, Format, LeaderboardRow};
use clinote_core::soap::{canonicalize_sections, parse_note, render_note, CanonicalNote};
use proptest::prelude::*;
use support::brute_rouge_n;

fn tokens(max: usize, vocab: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..vocab, 0..=max)
}

fn sentences(vocab: u32) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(prop::collection::vec(0..vocab, 1..=8), 0..=4)
}

proptest! {
    #[test]
    fn normalize_is_idempotent(s in "\\PC{0,80}") {
        let once = normalize_text(&s);
        prop_assert_eq!(normalize_text(&once), once);
    }

    #[test]
    fn normalize_output_alphabet(s in "\\PC{0,80}") {
        let out = normalize_text(&s);
        prop_assert_eq!(out.trim(), out.as_str());
        prop_assert!(!out.contains("  "));
        prop_assert!(out.chars().all(|c| c == ' ' || c.is_alphanumeric() || ".,?!'-:;()[]/".contains(c)));
    }

    #[test]
    fn turns_equal_tags_and_render_reparses(
        turns in prop::collection::vec(("(doctor|patient|guest|nurse)", "[a-z ,.?']{0,20}"), 1..8)
    ) {
        let raw: String = turns.iter().map(|(s, t)| format!("[{s}] {t}\n")).collect();
        let d = parse_dialogue(&raw, "p").unwrap();
        prop_assert_eq!(d.turns.len(), turns.len());
        let rendered = d.render();
        // the rendering is the normalized source, modulo whitespace
        prop_assert_eq!(normalize_text(&rendered), normalize_text(&raw));
        let again = parse_dialogue(&rendered, "p").unwrap();
        prop_assert_eq!(again, d);
    }

    #[test]
    fn token_counts_add_over_concatenation(a in "[a-z ]{0,40}", b in "[a-z ]{0,40}") {
        let vocab = SubwordVocab::from_pieces(["ab", "abc", "b", "ca"]);
        for tok in [Tokenizer::Whitespace, Tokenizer::Subword(vocab.clone())] {
            let joined = format!("{a} {b}");
            prop_assert_eq!(count_tokens(&joined, &tok), count_tokens(&a, &tok) + count_tokens(&b, &tok));
        }
    }

    #[test]
    fn rouge_n_equals_enumeration(c in tokens(30, 10), r in tokens(30, 10), n in 1usize..=3) {
        let got = rouge_n(&c, &r, n).unwrap();
        let (p, rc, f) = brute_rouge_n(&c, &r, n);
        prop_assert!((got.precision - p).abs() <= 1e-9);
        prop_assert!((got.recall - rc).abs() <= 1e-9);
        prop_assert!((got.f1 - f).abs() <= 1e-9);
    }

    #[test]
    fn identical_text_scores_one(c in prop::collection::vec(0u32..10, 2..30), s in sentences(10)) {
        prop_assert_eq!(rouge_n(&c, &c, 1).unwrap().f1, 1.0);
        prop_assert_eq!(rouge_n(&c, &c, 2).unwrap().f1, 1.0);
        if !s.is_empty() {
            prop_assert_eq!(rouge_lsum_tokens(&s, &s).f1, 1.0);
        }
    }

    #[test]
    fn disjoint_vocabularies_score_zero(c in tokens(30, 5), r in tokens(30, 5)) {
        let r: Vec<u32> = r.into_iter().map(|t| t + 100).collect();
        prop_assert_eq!(rouge_n(&c, &r, 1).unwrap().f1, 0.0);
        prop_assert_eq!(rouge_n(&c, &r, 2).unwrap().f1, 0.0);
        prop_assert_eq!(rouge_lsum_tokens(std::slice::from_ref(&c), std::slice::from_ref(&r)).f1, 0.0);
    }

    #[test]
    fn relabeling_tokens_changes_nothing(c in sentences(6), r in sentences(6), shift in 1u32..50) {
        // any injective relabeling; here t -> 7t + shift
        let relabel = |s: &Vec<Vec<u32>>| -> Vec<Vec<u32>> {
            s.iter().map(|x| x.iter().map(|t| 7 * t + shift).collect()).collect()
        };
        let (c2, r2) = (relabel(&c), relabel(&r));
        prop_assert_eq!(rouge_lsum_tokens(&c, &r), rouge_lsum_tokens(&c2, &r2));
        let (fc, fr): (Vec<u32>, Vec<u32>) = (c.concat(), r.concat());
        let (fc2, fr2): (Vec<u32>, Vec<u32>) = (c2.concat(), r2.concat());
        prop_assert_eq!(rouge_n(&fc, &fr, 2).unwrap(), rouge_n(&fc2, &fr2, 2).unwrap());
    }

    #[test]
    fn lcs_is_bounded_and_symmetric(a in tokens(30, 4), b in tokens(30, 4)) {
        let l = lcs_length(&a, &b);
        prop_assert!(l <= a.len().min(b.len()));
        prop_assert_eq!(l, lcs_length(&b, &a));
        prop_assert_eq!(lcs_length(&a, &a), a.len());
    }
}

fn body() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z][a-z ,.]{0,15}[a-z.]", 0..4).prop_map(|lines| lines.join("\n"))
}

fn canonical_note() -> impl Strategy<Value = CanonicalNote> {
    (body(), body(), body(), body()).prop_map(|(s, e, r, a)| CanonicalNote {
        subjective: s,
        objective_exam: e,
        objective_results: r,
        assessment_and_plan: a,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn soap_roundtrip(note in canonical_note()) {
        prop_assert_eq!(canonicalize_sections(&parse_note(&render_note(&note))), note);
    }
}

fn record() -> impl Strategy<Value = InstructionRecord> {
    let text = "(\\PC|[\"\\\\\n\t]){0,40}";
    (text, text, text, "[a-zA-Z0-9_\\-é]{1,10}").prop_map(|(instruction, input, output, id)| InstructionRecord {
        instruction,
        input,
        output,
        encounter_id: id,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jsonl_roundtrip(records in prop::collection::vec(record(), 0..6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sft.jsonl");
        prop_assert_eq!(serialize_records(&records, &path).unwrap(), records.len());
        let text = std::fs::read_to_string(&path).unwrap();
        prop_assert_eq!(text.lines().count(), records.len());
        prop_assert_eq!(parse_records(&path).unwrap(), records);
    }
}

fn pairs() -> impl Strategy<Value = Vec<EncounterPair>> {
    let split = prop::sample::select(Split::ALL.to_vec());
    let dialogue = prop::collection::vec(("(doctor|patient)", "[a-z ]{0,12}"), 1..6)
        .prop_map(|t| t.iter().map(|(s, x)| format!("[{s}] {x}")).collect::<Vec<_>>().join(" "));
    prop::collection::vec((split, dialogue, "[a-z]{1,6}( [a-z]{1,6}){0,8}"), 0..12).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (split, d, n))| EncounterPair::new(format!("e{i:02}"), split, d, n).unwrap())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stats_are_permutation_invariant(
        (original, shuffled) in pairs().prop_flat_map(|p| (Just(p.clone()), Just(p).prop_shuffle()))
    ) {
        let a = corpus_stats(&Corpus::new(original.clone(), "a").unwrap(), &Tokenizer::Whitespace).unwrap();
        let b = corpus_stats(&Corpus::new(shuffled, "b").unwrap(), &Tokenizer::Whitespace).unwrap();
        prop_assert_eq!(&a, &b);

        let total: usize = a.iter().map(|s| s.num_encounters).sum();
        prop_assert_eq!(total, original.len());
        // per-split means against a plain float summation
        for s in &a {
            let members: Vec<_> = original.iter().filter(|p| p.split == s.split).collect();
            let sum: f64 = members
                .iter()
                .map(|p| encounter_counts(p, &Tokenizer::Whitespace).unwrap().dialogue_tokens as f64)
                .sum();
            prop_assert!((s.avg_dialogue_tokens - sum / members.len() as f64).abs() <= 1e-9);
            prop_assert!(s.num_encounters > 0 && s.avg_turns > 0.0);
        }
    }

    #[test]
    fn absmax4_error_within_half_step(
        values in prop::collection::vec(-1e3f64..1e3, 1..200),
        block in 1usize..70,
    ) {
        let q = quantize_blockwise(&values, block, QuantScheme::Absmax4).unwrap();
        prop_assert_eq!(q.codes.len(), values.len());
        prop_assert_eq!(q.scales().len(), values.len().div_ceil(block));
        prop_assert!(q.codes.iter().all(|c| (-7..=7).contains(c)));
        let back = dequantize(&q).unwrap();
        for (i, (v, b)) in values.iter().zip(&back).enumerate() {
            let scale = q.scales()[i / block];
            prop_assert!((v - b).abs() <= scale / 2.0 + 1e-12);
        }
    }

    #[test]
    fn nf4_error_within_half_widest_gap(
        values in prop::collection::vec(-1e3f64..1e3, 1..200),
        block in 1usize..70,
    ) {
        let q = quantize_blockwise(&values, block, QuantScheme::Nf4).unwrap();
        prop_assert!(q.codes.iter().all(|c| (0..=15).contains(c)));
        let widest = NF4_CODEBOOK.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let back = dequantize(&q).unwrap();
        for (i, (v, b)) in values.iter().zip(&back).enumerate() {
            let scale = q.scales()[i / block];
            prop_assert!((v - b).abs() <= widest / 2.0 * scale + 1e-12);
        }
    }

    #[test]
    fn merge_equals_forward(
        d in 1usize..=32, k in 1usize..=32, r_seed in 0usize..32, alpha in 0.01f64..10.0, seed in any::<u64>()
    ) {
        use rand::{Rng, SeedableRng};
        let r = 1 + r_seed % d.min(k);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = |rows, cols| Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let (w, a, b) = (m(d, k), m(r, k), m(d, r));
        let ad = LoraAdapter::from_parts(a, b, alpha).unwrap();
        let merged = lora_merge(&w, &ad).unwrap();
        for _ in 0..5 {
            let x = Vector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
            let diff = (&merged * &x - lora_forward(&w, &ad, &x).unwrap()).amax();
            prop_assert!(diff <= 1e-10);
        }
    }

    #[test]
    fn param_ratio_below_one_when_rank_small(d in 1usize..200, k in 1usize..200, r in 1usize..200) {
        prop_assume!(r <= d.min(k));
        let s = lora_param_stats(d, k, r).unwrap();
        if (r * (d + k)) < d * k {
            prop_assert!(s.ratio < 1.0);
        }
        prop_assert_eq!(s.lora_params, r * (d + k));
    }

    #[test]
    fn bert_score_ignores_vector_scale(
        cand in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..8),
        refs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..8),
        scales in prop::collection::vec(1e-3f64..1e3, 16),
    ) {
        let fix = |v: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            v.into_iter().map(|mut x| { x[0] += if x[0] >= 0.0 { 0.1 } else { -0.1 }; x }).collect()
        };
        let (cand, refs) = (fix(cand), fix(refs));
        let seq = |v: &Vec<Vec<f64>>| EmbeddedSequence::new(vec!["t".to_string(); v.len()], v.clone()).unwrap();
        let scaled = |v: &Vec<Vec<f64>>, off: usize| -> Vec<Vec<f64>> {
            v.iter().enumerate().map(|(i, x)| x.iter().map(|y| y * scales[(i + off) % 16]).collect()).collect()
        };
        let base = bert_score(&seq(&cand), &seq(&refs), None).unwrap();
        let moved = bert_score(&seq(&scaled(&cand, 0)), &seq(&scaled(&refs, 8)), None).unwrap();
        prop_assert!((base.precision - moved.precision).abs() <= 1e-9);
        prop_assert!((base.recall - moved.recall).abs() <= 1e-9);
        prop_assert!((base.f1 - moved.f1).abs() <= 1e-9);
        prop_assert!((bert_score(&seq(&cand), &seq(&cand), None).unwrap().f1 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn leaderboard_is_sorted_and_csv_roundtrips(
        rows in prop::collection::btree_map("[A-Za-z0-9]{1,8}", (0.0f64..100.0, 0.0f64..100.0), 1..10)
    ) {
        let rows: Vec<LeaderboardRow> = rows
            .into_iter()
            .map(|(name, (a, b))| LeaderboardRow {
                system_name: name,
                values: BTreeMap::from([("rouge1".to_string(), a), ("bleurt".to_string(), b)]),
            })
            .collect();
        let csv = render_leaderboard(rows.clone(), Format::Csv, "rouge1").unwrap();
        prop_assert_eq!(&csv, &render_leaderboard(rows.clone(), Format::Csv, "rouge1").unwrap());
        let back = parse_rows_csv(&csv).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for pair in back.windows(2) {
            prop_assert!(pair[0].values["rouge1"] >= pair[1].values["rouge1"]);
        }
        for row in &back {
            let orig = rows.iter().find(|r| r.system_name == row.system_name).unwrap();
            for (col, v) in &row.values {
                prop_assert!((v - orig.values[col]).abs() <= 0.005 + 1e-9);
            }
        }
    }
}
