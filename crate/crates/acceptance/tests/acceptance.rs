//! Runs every acceptance criterion and prints one PASS/FAIL line for each.
//! Exits nonzero when any criterion fails.

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scribe_acceptance::fixtures::{oracle_entries, random_ontology, random_term_case, random_text};
use scribe_acceptance::oracle::{self, Negation};
use scribe_core::corpus::EvalRecord;
use scribe_core::corpusgen::{expand_ontology, generate_corpus, GeneratedCorpus, GeneratorConfig};
use scribe_core::engine::{Engine, ModelSet, TrainConfig, ENGINE_NAMES};
use scribe_core::evaluation::{compare_mrr, evaluate_engine, map_score, mrr, Evaluation, Policy};
use scribe_core::extraction::{ConceptExtractor, NegationLexicon};
use scribe_core::features::{bucketize_vital, PatientContext, TfidfConfig, TfidfVocabulary, VitalValue};
use scribe_core::ontology::{ConceptType, Ontology};
use scribe_core::ranking::{
    bucket_order, linear_probe, rank_condition_terms, ConditionDataset, ConditionNetwork, ConditionRow, LassoConfig,
    NetworkConfig,
};
use scribe_core::session::{
    suggest, update_scope, CachedRankings, NoteSection, ScopeOrigin, Session, Tag, TriggerLexicon, DEFAULT_K,
};
use scribe_service::wire::SuggestRequest;
use scribe_service::AppState;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn extraction_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lexicon = NegationLexicon::default();
    let negation = Negation::shipped();
    let mut mentions = 0;
    let mut negated = 0;
    for case in 0..1000 {
        let file = random_ontology(&mut rng, 200);
        let entries = oracle_entries(&file);
        let ontology = Ontology::from_file(file).map_err(|e| format!("fixture {case}: {e}"))?;
        if ontology.synonym_count() > 200 {
            return Err(format!("fixture {case} has {} synonyms", ontology.synonym_count()));
        }
        let extractor = ConceptExtractor::new(&ontology);
        let text = random_text(&mut rng, 500);
        let got: Vec<String> = extractor
            .extract(&text, &lexicon)
            .iter()
            .map(|m| serde_json::to_string(&m.to_record(&ontology)).expect("serializes"))
            .collect();
        let want = oracle::extract_jsonl(&text, &entries, &negation);
        if got != want {
            return Err(format!("case {case}: text {text:?}\n got  {got:?}\n want {want:?}"));
        }
        mentions += want.len();
        negated += want.iter().filter(|l| l.contains("NEGATED")).count();
    }
    let elapsed = t0.elapsed();
    check(
        elapsed < Duration::from_secs(30),
        format!("1000 texts identical, {mentions} mentions ({negated} negated), {elapsed:.1?} (limit 30s)"),
    )
}

fn metric_oracles() -> Outcome {
    let mut cases = 0;
    for n in 1..=6u8 {
        let perms = oracle::permutations(n);
        for mask in 1u32..(1 << n) {
            let truth: Vec<u8> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let set: HashSet<u8> = truth.iter().copied().collect();
            for p in &perms {
                let (m, a) = (mrr(p, &truth).map_err(|e| e.to_string())?, map_score(p, &truth).map_err(|e| e.to_string())?);
                let (om, oa) = (oracle::mrr(p, &set), oracle::average_precision(p, &set));
                if m != om || a != oa {
                    return Err(format!("ranking {p:?} truth {truth:?}: mrr {m} vs {om}, map {a} vs {oa}"));
                }
                cases += 1;
            }
        }
    }
    let worked = mrr(&["a", "b", "c", "d"], &["c", "d"]).map_err(|e| e.to_string())?;
    check(worked == 0.75, format!("{cases} (ranking, truth) pairs exact; [a,b,c,d]/{{c,d}} -> {worked}"))
}

fn vital_cutoffs() -> Outcome {
    let scalar: &[(&str, f64, &str)] = &[
        ("temperature", 96.9, "LOW"),
        ("temperature", 97.0, "NORMAL"),
        ("temperature", 97.1, "NORMAL"),
        ("temperature", 100.3, "NORMAL"),
        ("temperature", 100.4, "NORMAL"),
        ("temperature", 100.5, "HIGH"),
        ("resp_rate", 11.9, "LOW"),
        ("resp_rate", 12.0, "NORMAL"),
        ("resp_rate", 12.1, "NORMAL"),
        ("resp_rate", 19.9, "NORMAL"),
        ("resp_rate", 20.0, "NORMAL"),
        ("resp_rate", 20.1, "HIGH"),
        ("spo2", 94.9, "LOW"),
        ("spo2", 95.0, "NORMAL"),
        ("spo2", 95.1, "NORMAL"),
        ("heart_rate", 59.9, "BRADYCARDIC"),
        ("heart_rate", 60.0, "NORMAL"),
        ("heart_rate", 60.1, "NORMAL"),
        ("heart_rate", 99.9, "NORMAL"),
        ("heart_rate", 100.0, "NORMAL"),
        ("heart_rate", 100.1, "TACHYCARDIC"),
        ("age", 17.9, "CHILD"),
        ("age", 18.0, "18-33"),
        ("age", 18.1, "18-33"),
        ("age", 33.9, "18-33"),
        ("age", 34.0, "34-48"),
        ("age", 34.1, "34-48"),
        ("age", 47.9, "34-48"),
        ("age", 48.0, "48-64"),
        ("age", 48.1, "48-64"),
        ("age", 63.9, "48-64"),
        ("age", 64.0, "64-77"),
        ("age", 64.1, "64-77"),
        ("age", 77.9, "64-77"),
        ("age", 78.0, "78+"),
        ("age", 78.1, "78+"),
    ];
    let pressure: &[(f64, f64, &str)] = &[
        (119.9, 79.9, "NORMAL"),
        (120.0, 79.9, "ELEVATED"),
        (120.1, 79.9, "ELEVATED"),
        (129.9, 79.9, "ELEVATED"),
        (130.0, 79.9, "STAGE_1_HYPERTENSION"),
        (130.1, 79.9, "STAGE_1_HYPERTENSION"),
        (119.9, 80.0, "STAGE_1_HYPERTENSION"),
        (119.9, 80.1, "STAGE_1_HYPERTENSION"),
        (139.9, 89.9, "STAGE_1_HYPERTENSION"),
        (140.0, 89.9, "STAGE_2_HYPERTENSION"),
        (140.1, 70.0, "STAGE_2_HYPERTENSION"),
        (110.0, 89.9, "STAGE_1_HYPERTENSION"),
        (110.0, 90.0, "STAGE_2_HYPERTENSION"),
        (110.0, 90.1, "STAGE_2_HYPERTENSION"),
    ];
    let mut wrong = Vec::new();
    for &(name, v, want) in scalar {
        let got = bucketize_vital(name, VitalValue::Scalar(v)).map_err(|e| e.to_string())?;
        if got.as_str() != want {
            wrong.push(format!("{name} {v}: {got} != {want}"));
        }
    }
    for &(s, d, want) in pressure {
        let got = bucketize_vital("blood_pressure", VitalValue::Pressure { systolic: s, diastolic: d })
            .map_err(|e| e.to_string())?;
        if got.as_str() != want {
            wrong.push(format!("{s}/{d}: {got} != {want}"));
        }
    }
    check(wrong.is_empty(), format!("{} table rows; mismatches {wrong:?}", scalar.len() + pressure.len()))
}

/// The 10k-visit corpus and models trained on it, shared by the criteria
/// that need them.
struct Trained {
    config: GeneratorConfig,
    corpus: GeneratedCorpus,
    ontology: Arc<Ontology>,
    extractor: ConceptExtractor,
    lexicon: NegationLexicon,
    models: ModelSet,
    build_time: Duration,
}

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let t0 = Instant::now();
        let config = GeneratorConfig::default();
        assert_eq!(config.visits, 10_000);
        let corpus = generate_corpus(&config, &Ontology::demo()).expect("corpus generates");
        let ontology = Arc::new(Ontology::from_file(corpus.ontology.clone()).expect("generated ontology valid"));
        let extractor = ConceptExtractor::new(&ontology);
        let lexicon = NegationLexicon::default();
        let models = ModelSet::train(&corpus.train_visits(), &ontology, &extractor, &lexicon, &TrainConfig::default())
            .expect("models train");
        Trained { config, corpus, ontology, extractor, lexicon, models, build_time: t0.elapsed() }
    })
}

fn planted_recovery() -> Outcome {
    let t0 = Instant::now();
    let tr = trained();
    let o = &tr.ontology;
    let net: &ConditionNetwork = &tr.models.network;
    let mut hits = vec![0usize; tr.config.triggers.len()];
    let mut seen = vec![0usize; tr.config.triggers.len()];
    for v in tr.corpus.test() {
        let Some(i) = v.trigger else { continue };
        let trig = &tr.config.triggers[i];
        if !v.visit.context.triage_text.to_lowercase().contains(&trig.token) {
            continue;
        }
        let bucket = o.bucket_by_id(&trig.bucket).expect("planted bucket exists").index;
        let row = ConditionRow::from_context(&v.visit.context, &net.vocab, o);
        let order = bucket_order(&net.bucket_scores(&row));
        seen[i] += 1;
        if order.iter().take(3).any(|&b| b == bucket) {
            hits[i] += 1;
        }
    }
    let total: usize = seen.iter().sum();
    let top3 = hits.iter().sum::<usize>() as f64 / total.max(1) as f64;

    let train = tr.corpus.train_visits();
    let rows = ConditionDataset::from_visits(&train, o, &tr.extractor, &tr.lexicon, Some(net.vocab.clone()))
        .map_err(|e| e.to_string())?
        .rows;
    let mut surfaced = Vec::new();
    let mut missed = Vec::new();
    for trig in &tr.config.triggers {
        let bucket = o.bucket_by_id(&trig.bucket).expect("planted bucket exists").index;
        let weights = linear_probe(net, bucket, &rows, LassoConfig::default()).map_err(|e| e.to_string())?;
        let mut positive: Vec<_> = weights.into_iter().filter(|w| w.weight > 0.0).collect();
        positive.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        if positive.iter().take(5).any(|w| w.feature == trig.token) {
            surfaced.push(trig.bucket.as_str());
        } else {
            missed.push(format!("{}:{:?}", trig.bucket, positive.iter().take(5).map(|w| &w.feature).collect::<Vec<_>>()));
        }
    }
    let cpu = tr.build_time + t0.elapsed();
    check(
        top3 >= 0.80 && surfaced.len() >= 8 && cpu < Duration::from_secs(600),
        format!(
            "planted bucket in top 3 for {:.1}% of {total} test contexts (need 80%); probe top-5 has token for {}/10 buckets (need 8), missed {missed:?}; {cpu:.1?} incl. generation and training (limit 10 min)",
            100.0 * top3,
            surfaced.len()
        ),
    )
}

struct Evaluated {
    records: usize,
    runs: HashMap<&'static str, Evaluation>,
}

fn evaluated() -> &'static Evaluated {
    static CELL: OnceLock<Evaluated> = OnceLock::new();
    CELL.get_or_init(|| {
        let tr = trained();
        let records: Vec<EvalRecord> =
            tr.corpus.test_visits().iter().map(|v| EvalRecord::new(v, &tr.extractor, &tr.lexicon)).collect();
        let triggers = TriggerLexicon::default();
        let runs = ENGINE_NAMES
            .iter()
            .map(|&name| {
                let engine = tr.models.engine(name, tr.ontology.clone()).expect("engine builds");
                let policy = if name == "none" { Policy::NoAutocomplete } else { Policy::TopK(5) };
                (name, evaluate_engine(&records, &engine, &triggers, policy).expect("evaluation runs"))
            })
            .collect();
        Evaluated { records: records.len(), runs }
    })
}

fn model_ordering() -> Outcome {
    let ev = evaluated();
    let run = |n: &str| &ev.runs[n];
    let type_mrr = |n: &str, t: ConceptType| run(n).report.per_type[&t].mrr.mean;
    let pairs = [
        ("net", "lr-delay", ConceptType::Condition),
        ("lr-delay", "lr-ehr", ConceptType::Condition),
        ("lr-ehr", "lr-text", ConceptType::Condition),
        ("table-cv", "table-c", ConceptType::Symptom),
        ("table-c", "symptom-nb", ConceptType::Symptom),
        ("symptom-nb", "symptom-lr", ConceptType::Symptom),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, b, t) in pairs {
        let d = compare_mrr(run(a), run(b), t, 1000, 7);
        ok &= d.diff >= 0.0 && d.lo >= -0.01;
        parts.push(format!("{a}-{b} {:+.4} [{:+.4},{:+.4}]", d.diff, d.lo, d.hi));
    }
    for (model, t) in [("net", ConceptType::Condition), ("table-cv", ConceptType::Symptom)] {
        for base in ["frequency", "spell"] {
            let gap = type_mrr(model, t) - type_mrr(base, t);
            ok &= gap >= 0.05;
            parts.push(format!("{model}-{base} {gap:+.4}"));
        }
    }
    check(ok, format!("{} test notes; {}", ev.records, parts.join("; ")))
}

fn gradient_check() -> Outcome {
    let texts = ["edema legs swelling", "cough fever", "edema cough", "pain chest", "fever chills rigors", "pain legs"];
    let vocab = TfidfVocabulary::fit(&texts, TfidfConfig { min_df: 1 }).map_err(|e| e.to_string())?;
    let config = NetworkConfig { hidden_text: 5, hidden_ehr: 3, seed: 2024, ..NetworkConfig::default() };
    let inputs: Vec<String> = (0..5).map(|i| format!("bucket{i}")).collect();
    let net = ConditionNetwork::init(config, vocab.clone(), inputs, (0..5).collect(), None);
    let rows: Vec<ConditionRow> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut ehr = vec![i % 5, (i * 3 + 1) % 5];
            ehr.sort_unstable();
            ehr.dedup();
            let mut targets = vec![(i + 1) % 5, (i * 2) % 5];
            targets.sort_unstable();
            targets.dedup();
            ConditionRow { text: vocab.encode(t), ehr_buckets: ehr, delays: HashMap::new(), targets }
        })
        .collect();
    let (_, grads) = net.loss_and_gradients(&rows);
    let analytic = grads.flatten();
    let theta = net.weights.flatten();
    let mut probe = net.clone();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        let mut t = theta.clone();
        t[i] = theta[i] + h;
        probe.weights.set_flat(&t);
        let up = probe.loss(&rows);
        t[i] = theta[i] - h;
        probe.weights.set_flat(&t);
        let down = probe.loss(&rows);
        let numeric = (up - down) / (2.0 * h);
        let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    check(worst <= 1e-4, format!("{} parameters, worst relative error {worst:.2e} (limit 1e-4)", theta.len()))
}

fn keystroke_dominance() -> Outcome {
    let ev = evaluated();
    let none = &ev.runs["none"];
    let mut violations = Vec::new();
    let mut terms = 0;
    for (&name, run) in &ev.runs {
        if name == "none" {
            continue;
        }
        for (n, (a, b)) in run.notes.iter().zip(&none.notes).enumerate() {
            if a.terms.len() != b.terms.len() {
                return Err(format!("{name}: note {n} replayed {} terms vs {}", a.terms.len(), b.terms.len()));
            }
            for (x, y) in a.terms.iter().zip(&b.terms) {
                terms += 1;
                if x.entry != y.entry || x.burden > y.burden {
                    violations.push(format!("{name} note {n}: {} > {}", x.burden, y.burden));
                }
            }
        }
    }
    let burden = |run: &Evaluation| run.notes.iter().flat_map(|n| &n.terms).map(|t| t.burden).sum::<usize>() as f64;
    let reduction = 1.0 - burden(&ev.runs["contextual"]) / burden(none);
    check(
        violations.is_empty() && reduction >= 0.30,
        format!(
            "{terms} (engine, term) replays, {} above no-autocomplete {:?}; contextual top5 reduction {:.1}% (need 30%)",
            violations.len(),
            violations.iter().take(3).collect::<Vec<_>>(),
            100.0 * reduction
        ),
    )
}

/// `[synonym|entry id]` marks a tagged span.
fn marked(o: &Ontology, src: &str) -> (String, Vec<Tag>) {
    let mut text = String::new();
    let mut tags = Vec::new();
    let mut rest = src;
    while let Some(open) = rest.find('[') {
        text.push_str(&rest[..open]);
        let close = rest[open..].find(']').expect("closed tag") + open;
        let (syn, id) = rest[open + 1..close].split_once('|').expect("synonym|id");
        let start = text.len();
        text.push_str(syn);
        tags.push(Tag { entry: o.find(id).expect("known entry"), start, end: text.len(), synonym: syn.to_string() });
        rest = &rest[close + 1..];
    }
    text.push_str(rest);
    (text, tags)
}

fn scope_suite() -> Outcome {
    use ConceptType::*;
    use ScopeOrigin as O;
    let o = Arc::new(Ontology::demo());
    let lex = TriggerLexicon::default();
    let hpi = Some(NoteSection::Hpi);
    // (section override, marked text, active, type order when active, origin)
    let cases: Vec<(Option<NoteSection>, &str, bool, Option<[ConceptType; 4]>, ScopeOrigin)> = vec![
        (hpi, "67M who presents with ", true, Some([Symptom, Condition, Medication, Lab]), O::TriggerPhrase),
        (hpi, "67M with history of [htn|c_hypertension], ", true, Some([Condition, Symptom, Medication, Lab]), O::Continuation),
        (hpi, "in triage we gave the patient ", false, None, O::None),
        (hpi, "history of [htn|c_hypertension] ", true, Some([Condition, Symptom, Medication, Lab]), O::TaggedConcept),
        (hpi, "history of [htn|c_hypertension], and ", true, Some([Condition, Symptom, Medication, Lab]), O::Continuation),
        (hpi, "history of [htn|c_hypertension] or ", true, Some([Condition, Symptom, Medication, Lab]), O::Continuation),
        (hpi, "history of htn ", false, None, O::None),
        (hpi, "history of [htn|c_hypertension] and the ", false, None, O::None),
        (hpi, "pt has a history ", false, None, O::None),
        (hpi, "History Of ", true, Some([Condition, Symptom, Medication, Lab]), O::TriggerPhrase),
        (hpi, "pt w/ h/o ", true, Some([Condition, Symptom, Medication, Lab]), O::TriggerPhrase),
        (hpi, "seen today, pmh: ", true, Some([Condition, Symptom, Medication, Lab]), O::TriggerPhrase),
        (hpi, "she denies ", true, Some([Symptom, Condition, Medication, Lab]), O::TriggerPhrase),
        (hpi, "c/o ", true, Some([Symptom, Condition, Medication, Lab]), O::TriggerPhrase),
        (hpi, "the patient takes ", true, Some([Medication, Condition, Symptom, Lab]), O::TriggerPhrase),
        (hpi, "was started on ", true, Some([Medication, Condition, Symptom, Lab]), O::TriggerPhrase),
        (hpi, "will check ", true, Some([Lab, Condition, Symptom, Medication]), O::TriggerPhrase),
        (hpi, "presents with [fever|s_fever] and [chills|s_chills], ", true, Some([Symptom, Condition, Medication, Lab]), O::Continuation),
        (hpi, "presents with [fever|s_fever] but ", false, None, O::None),
        (hpi, "presents with [fever|s_fever], [htn|c_hypertension], ", true, Some([Condition, Symptom, Medication, Lab]), O::Continuation),
        (hpi, "no fever. history of ", true, Some([Condition, Symptom, Medication, Lab]), O::TriggerPhrase),
        (hpi, "history of chf. gave ", false, None, O::None),
        (hpi, "in triage we gave the patient /", true, Some([Condition, Symptom, Medication, Lab]), O::Manual),
        (hpi, "/", true, Some([Condition, Symptom, Medication, Lab]), O::Manual),
        (hpi, "/ the ", false, None, O::None),
        (hpi, " , and ", false, None, O::None),
        (hpi, "", false, None, O::None),
        (None, "ROS:\nthe patient /", true, Some([Symptom, Condition, Medication, Lab]), O::Manual),
        (None, "MEDICATIONS:\n/", true, Some([Medication, Condition, Symptom, Lab]), O::Manual),
        (None, "PHYSICAL EXAM:\nnotable for ", true, Some([Symptom, Condition, Medication, Lab]), O::TriggerPhrase),
        (None, "MDM:\nconcern for ", true, Some([Condition, Symptom, Lab, Medication]), O::TriggerPhrase),
        (None, "PMH:\n/", true, Some([Condition, Symptom, Medication, Lab]), O::Manual),
        (None, "HPI: history of htn.\nMDM:\nwe ", false, None, O::None),
    ];
    let mut wrong = Vec::new();
    for (section, src, active, order, origin) in &cases {
        let (text, tags) = marked(&o, src);
        let q = update_scope(&text, text.len(), *section, &tags, &lex, &o);
        let s = q.state;
        let order_ok = order.is_none_or(|ord| s.type_order == ord);
        if s.active != *active || !order_ok || s.origin != *origin {
            wrong.push(format!("{src:?}: got {s:?}"));
        }
        // Replaying each keystroke twice reproduces the same state.
        for cut in (0..=text.len()).filter(|&c| text.is_char_boundary(c)) {
            let a = update_scope(&text[..cut], cut, *section, &tags_before(&tags, cut), &lex, &o);
            let b = update_scope(&text[..cut], cut, *section, &tags_before(&tags, cut), &lex, &o);
            if a != b {
                wrong.push(format!("{src:?}: not reproducible at {cut}"));
            }
        }
    }

    // Worked prefix and accept flow through a session.
    let frequency = Engine::baseline("frequency", o.clone()).map_err(|e| e.to_string())?;
    let rankings = CachedRankings::new(&o, frequency.rank_all(&PatientContext::default()));
    let mut session = Session::new(o.clone(), Arc::new(lex.clone()), rankings, DEFAULT_K);
    let typed = "HPI: 67M with history of ht";
    let r = session.query(typed, typed.len(), None).map_err(|e| e.to_string())?;
    let first = r.suggestions.first().map(|s| (o.entry(s.entry).id.clone(), s.synonym.clone()));
    if r.scope.state.head() != Condition || first != Some(("c_hypertension".into(), "htn".into())) {
        wrong.push(format!("typing \"ht\": head {:?}, first {first:?}", r.scope.state.head()));
    }
    session.accept(0, o.find("c_hypertension")).map_err(|e| e.to_string())?;
    let after = "HPI: 67M with history of htn";
    if session.note().text() != after {
        wrong.push(format!("accept produced {:?}", session.note().text()));
    }
    let next = format!("{after}, ");
    let r = session.query(&next, next.len(), None).map_err(|e| e.to_string())?;
    if !r.scope.state.active || r.scope.state.head() != Condition || r.scope.state.origin != O::Continuation {
        wrong.push(format!("after accept and \",\": {:?}", r.scope.state));
    }
    check(wrong.is_empty(), format!("{} sentences plus the accept flow; failures {wrong:?}", cases.len()))
}

fn tags_before(tags: &[Tag], cut: usize) -> Vec<Tag> {
    tags.iter().filter(|t| t.end <= cut).cloned().collect()
}

fn percentile_99(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let rank = (0.99 * v.len() as f64).ceil() as usize;
    v[rank.max(1) - 1]
}

fn latency() -> Outcome {
    let demo = Ontology::demo();
    let file = expand_ontology(&demo.to_file(), 10_000, &HashSet::new(), 5);
    let o = Arc::new(Ontology::from_file(file).map_err(|e| e.to_string())?);
    let lex = TriggerLexicon::default();
    let engine = Engine::baseline("frequency", o.clone()).map_err(|e| e.to_string())?;
    let context = PatientContext::default();
    let rankings = CachedRankings::new(&o, engine.rank_all(&context));

    let line = "67M with history of htn, dmii and chf who presents with chest pain and sob. Denies fever or chills.\n";
    let mut note = String::from("HPI: ");
    while note.len() < 5000 {
        note.push_str(line);
    }
    note.push_str("PMH:\n");
    let script = "history of hypertension, diabetes mellitus, copd and atrial fibrillation. presents with shortness of \
                  breath and fever";
    let steps: Vec<String> = script.char_indices().skip(1).take(100).map(|(i, _)| format!("{note}{}", &script[..i])).collect();
    assert_eq!(steps.len(), 100);

    let mut core_ms = Vec::new();
    let mut shown = 0;
    for text in &steps {
        let t0 = Instant::now();
        let q = update_scope(text, text.len(), None, &[], &lex, &o);
        let s = suggest(&o, &rankings, &q.state, &q.prefix, DEFAULT_K);
        core_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        shown += s.len();
    }

    let state = AppState::new(engine, lex.clone(), NegationLexicon::default());
    let id = state.create_session(context).map_err(|e| e.to_string())?;
    let runtime = tokio::runtime::Builder::new_current_thread().build().map_err(|e| e.to_string())?;
    let (service_ms, wall_ms) = runtime.block_on(async {
        let mut p = Vec::new();
        let mut w = Vec::new();
        for text in &steps {
            let t0 = Instant::now();
            let req = SuggestRequest { text: text.clone(), cursor: text.len(), section: None };
            let r = state.suggest(&id, req).await.map_err(|e| e.to_string())?;
            w.push(t0.elapsed().as_secs_f64() * 1e3);
            p.push(r.processing_us as f64 / 1e3);
        }
        Ok::<_, String>((p, w))
    })?;

    let core = percentile_99(core_ms);
    let service = percentile_99(service_ms);
    let wall = percentile_99(wall_ms);
    check(
        core <= 2.0 && service <= 10.0 && wall < 100.0,
        format!(
            "{} synonyms, {}-char note, 100 queries ({shown} suggestions shown): p99 scope+suggest {core:.3} ms (limit 2), service processing {service:.3} ms (limit 10), service call {wall:.3} ms (limit 100)",
            o.synonym_count(),
            note.len()
        ),
    )
}

fn term_key() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..1000 {
        let fx = random_term_case(&mut rng);
        let o = Ontology::from_file(fx.ontology.clone()).map_err(|e| format!("fixture {case}: {e}"))?;
        let ranking: Vec<usize> =
            fx.bucket_ranking.iter().map(|b| o.bucket_by_id(b).expect("declared bucket").index).collect();
        let ehr: HashSet<_> = fx.terms.iter().filter(|t| t.in_ehr).map(|t| o.find(&t.id).expect("entry")).collect();
        let got: Vec<String> =
            rank_condition_terms(&ranking, &ehr, &o).entries().map(|e| o.entry(e).id.clone()).collect();
        let want = oracle::term_order(&fx.terms, &fx.bucket_ranking);
        if got != want {
            return Err(format!("case {case}: got {got:?}, want {want:?}"));
        }
    }
    Ok("1000 fixtures equal the tuple sort".to_string())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("extraction oracle", extraction_oracle),
        ("metric oracles", metric_oracles),
        ("vital cutoffs", vital_cutoffs),
        ("planted-association recovery", planted_recovery),
        ("model ordering", model_ordering),
        ("gradient check", gradient_check),
        ("keystroke dominance", keystroke_dominance),
        ("scope state machine", scope_suite),
        ("latency", latency),
        ("term-ranking key", term_key),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = t0.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{took:.1?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{took:.1?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
