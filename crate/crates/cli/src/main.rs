use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use scribe_core::corpus::{read_visits, EvalRecord, Visit};
use scribe_core::corpusgen::{generate_corpus, GeneratorConfig};
use scribe_core::engine::{Engine, ModelSet, TrainConfig, ENGINE_NAMES};
use scribe_core::evaluation::{compare_mrr, evaluate_engine, Evaluation, Policy};
use scribe_core::extraction::{ConceptExtractor, NegationLexicon};
use scribe_core::features::{most_abnormal_vital, PatientContext};
use scribe_core::ontology::{ConceptType, Ontology};
use scribe_core::ranking::{
    linear_probe, ConditionDataset, ConditionNetwork, LassoConfig, OvrLrModel, OvrVariant,
    SymptomDataset, SymptomLr, SymptomNb, SymptomTable,
};
use scribe_core::session::TriggerLexicon;
use scribe_service::AppState;

#[derive(Parser)]
#[command(name = "scribe", version, about = "Contextual concept autocompletion for clinical notes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ontology file checks.
    Ontology {
        #[command(subcommand)]
        action: OntologyAction,
    },
    /// Print the concept mentions of a text file as JSON lines.
    Extract {
        #[arg(long)]
        ontology: PathBuf,
        /// Negation lexicon; the bundled one when absent.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        file: PathBuf,
    },
    /// Print the model inputs derived from one patient context.
    Featurize {
        #[arg(long)]
        ontology: PathBuf,
        /// Trained model directory, for text terms and vital percentiles.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Patient context JSON.
        context: PathBuf,
    },
    /// Train one model, or every model into a directory with `--model all`.
    Train {
        #[arg(long, value_enum)]
        model: ModelKind,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Training configuration JSON; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Sparse linear surrogate of one network output.
    Probe {
        /// Network model file.
        #[arg(long)]
        model: PathBuf,
        /// Condition bucket id.
        #[arg(long)]
        bucket: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, default_value_t = LassoConfig::default().lambda_ratio)]
        lambda_ratio: f64,
    },
    /// Replay a corpus through one or more engines and write a report.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, default_value = "top5")]
        policy: Policy,
        /// Comma-separated engine names; all known engines by default.
        #[arg(long, value_delimiter = ',')]
        engines: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a per-engine, per-type table.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
    },
    /// Write a synthetic corpus with planted structure.
    Generate {
        /// Generator configuration JSON; the bundled one when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP suggestion service.
    Serve {
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "contextual")]
        engine: String,
        /// Corpus whose visits are listed as demo patients.
        #[arg(long)]
        patients: Option<PathBuf>,
        #[arg(long)]
        triggers: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Directory for per-session event logs.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OntologyAction {
    Validate { path: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Net,
    Lr,
    LrEhr,
    LrDelay,
    SymptomTable,
    SymptomLr,
    SymptomNb,
    All,
}

fn load_ontology(path: &Path) -> Result<Ontology> {
    Ontology::load(path).with_context(|| format!("loading ontology {}", path.display()))
}

fn load_lexicon(path: Option<&Path>) -> Result<NegationLexicon> {
    match path {
        Some(p) => NegationLexicon::load(p).with_context(|| format!("loading lexicon {}", p.display())),
        None => Ok(NegationLexicon::default()),
    }
}

fn load_visits(path: &Path) -> Result<Vec<Visit>> {
    read_visits(path).with_context(|| format!("reading corpus {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Ontology { action: OntologyAction::Validate { path } } => {
            let o = load_ontology(&path)?;
            println!(
                "{}: {} entries, {} buckets, {} synonyms",
                path.display(),
                o.len(),
                o.bucket_count(),
                o.synonym_count()
            );
        }
        Command::Extract { ontology, lexicon, file } => {
            let o = load_ontology(&ontology)?;
            let lex = load_lexicon(lexicon.as_deref())?;
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let out = std::io::stdout();
            let mut out = out.lock();
            for m in ConceptExtractor::new(&o).extract(&text, &lex) {
                serde_json::to_writer(&mut out, &m.to_record(&o))?;
                out.write_all(b"\n")?;
            }
        }
        Command::Featurize { ontology, models, context } => featurize(&ontology, models.as_deref(), &context)?,
        Command::Train { model, corpus, ontology, out, config } => {
            let config: TrainConfig = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(&p)?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => TrainConfig::default(),
            };
            train(model, &corpus, &ontology, &out, &config)?;
        }
        Command::Probe { model, bucket, corpus, ontology, top, lambda_ratio } => {
            let o = load_ontology(&ontology)?;
            let net: ConditionNetwork = serde_json::from_str(&std::fs::read_to_string(&model)?)
                .with_context(|| format!("parsing network {}", model.display()))?;
            let b = o.bucket_by_id(&bucket).with_context(|| format!("unknown bucket {bucket:?}"))?.index;
            let visits = load_visits(&corpus)?;
            let ex = ConceptExtractor::new(&o);
            let ds =
                ConditionDataset::from_visits(&visits, &o, &ex, &NegationLexicon::default(), Some(net.vocab.clone()))?;
            let config = LassoConfig { lambda_ratio, ..LassoConfig::default() };
            for w in linear_probe(&net, b, &ds.rows, config)?.into_iter().take(top) {
                println!("{}", serde_json::to_string(&w)?);
            }
        }
        Command::Evaluate { corpus, ontology, models, policy, engines, out, csv, resamples } => {
            evaluate(&corpus, &ontology, models.as_deref(), policy, engines, &out, csv.as_deref(), resamples)?
        }
        Command::Generate { config, out } => {
            let config = match config {
                Some(p) => GeneratorConfig::from_json(&std::fs::read_to_string(&p)?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => GeneratorConfig::default(),
            };
            let corpus = generate_corpus(&config, &Ontology::demo())?;
            corpus.write(&out)?;
            log::info!(
                "{} train and {} test visits written to {}",
                corpus.train().len(),
                corpus.test().len(),
                out.display()
            );
        }
        Command::Serve { ontology, models, port, host, engine, patients, triggers, lexicon, log_dir } => {
            let o = Arc::new(load_ontology(&ontology)?);
            let engine = build_engine(&engine, models.as_deref(), o)?;
            let triggers = match triggers {
                Some(p) => TriggerLexicon::load(&p).with_context(|| format!("loading {}", p.display()))?,
                None => TriggerLexicon::default(),
            };
            let mut state = AppState::new(engine, triggers, load_lexicon(lexicon.as_deref())?);
            if let Some(p) = patients {
                state = state.with_demo_patients(load_visits(&p)?.into_iter().map(|v| v.context).collect());
            }
            if let Some(dir) = log_dir {
                std::fs::create_dir_all(&dir)?;
                state = state.with_log_dir(dir);
            }
            let addr: SocketAddr = format!("{host}:{port}").parse().context("listen address")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(scribe_service::serve(Arc::new(state), addr))?;
        }
    }
    Ok(())
}

fn build_engine(name: &str, models: Option<&Path>, o: Arc<Ontology>) -> Result<Engine> {
    match models {
        Some(dir) => Ok(ModelSet::load(dir)?.engine(name, o)?),
        None => Engine::baseline(name, o).with_context(|| format!("engine {name:?} needs --models")),
    }
}

fn featurize(ontology: &Path, models: Option<&Path>, context: &Path) -> Result<()> {
    let o = load_ontology(ontology)?;
    let ctx: PatientContext = serde_json::from_str(&std::fs::read_to_string(context)?)
        .with_context(|| format!("parsing {}", context.display()))?;
    ctx.validate(&o)?;
    let models = models.map(ModelSet::load).transpose()?;
    let mut delays: BTreeMap<usize, f64> = BTreeMap::new();
    for (e, d) in ctx.ehr_ages(&o) {
        let b = o.bucket_index(e);
        delays.entry(b).and_modify(|x| *x = x.min(d)).or_insert(d);
    }
    let ehr: Vec<(usize, f64)> = delays.into_iter().collect();
    let text: serde_json::Value = match &models {
        Some(m) => m
            .network
            .vocab
            .encode(&ctx.triage_text)
            .iter()
            .map(|(j, w)| json!({"term": m.network.vocab.term(j), "weight": w}))
            .collect(),
        None => serde_json::Value::Null,
    };
    let out = json!({
        "patient_id": ctx.patient_id,
        "chief_complaint": ctx.chief_complaint,
        "text": text,
        "ehr": ehr.iter().map(|&(b, d)| json!({"bucket": o.bucket(b).id, "delay_days": d})).collect::<Vec<_>>(),
        "vitals": ctx.vitals.buckets().iter().map(|(k, b)| json!({"vital": k.as_str(), "bucket": b.as_str()})).collect::<Vec<_>>(),
        "most_abnormal_vital": models.as_ref().map(|m| most_abnormal_vital(&ctx.vitals, &m.table.stats).key()),
        "has_history": ctx.has_history(),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn train(model: ModelKind, corpus: &Path, ontology: &Path, out: &Path, config: &TrainConfig) -> Result<()> {
    let o = load_ontology(ontology)?;
    let visits = load_visits(corpus)?;
    let ex = ConceptExtractor::new(&o);
    let lex = NegationLexicon::default();
    let conditions = || ConditionDataset::from_visits(&visits, &o, &ex, &lex, None);
    let symptoms = || SymptomDataset::from_visits(&visits, &o, &ex, &lex);
    let ovr = |v| -> Result<OvrLrModel> { Ok(OvrLrModel::train(&conditions()?, v, config.ovr)?) };
    match model {
        ModelKind::All => {
            ModelSet::train(&visits, &o, &ex, &lex, config)?.save(out)?;
            log::info!("models written to {}", out.display());
            return Ok(());
        }
        ModelKind::Net => write_json(out, &ConditionNetwork::train(&conditions()?, &o, config.network)?)?,
        ModelKind::Lr => write_json(out, &ovr(OvrVariant::TextOnly)?)?,
        ModelKind::LrEhr => write_json(out, &ovr(OvrVariant::TextEhr)?)?,
        ModelKind::LrDelay => write_json(out, &ovr(OvrVariant::TextEhrDelay)?)?,
        ModelKind::SymptomTable => write_json(out, &SymptomTable::fit(&symptoms()?, true, config.alpha))?,
        ModelKind::SymptomLr => write_json(
            out,
            &SymptomLr::train(&symptoms()?, config.symptom_lr, config.ovr.min_positives, config.ovr.epsilon, config.seed)?,
        )?,
        ModelKind::SymptomNb => write_json(out, &SymptomNb::train(&symptoms()?)?)?,
    }
    log::info!("model written to {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    corpus: &Path,
    ontology: &Path,
    models: Option<&Path>,
    policy: Policy,
    engines: Vec<String>,
    out: &Path,
    csv: Option<&Path>,
    resamples: usize,
) -> Result<()> {
    let o = Arc::new(load_ontology(ontology)?);
    let visits = load_visits(corpus)?;
    let ex = ConceptExtractor::new(&o);
    let lex = NegationLexicon::default();
    let records: Vec<EvalRecord> = visits.iter().map(|v| EvalRecord::new(v, &ex, &lex)).collect();
    let set = models.map(ModelSet::load).transpose()?;
    let names: Vec<String> = if engines.is_empty() {
        ENGINE_NAMES
            .iter()
            .filter(|n| set.is_some() || matches!(**n, "frequency" | "spell" | "none"))
            .map(|n| n.to_string())
            .collect()
    } else {
        engines
    };
    let triggers = TriggerLexicon::default();
    let mut evals: Vec<Evaluation> = Vec::new();
    for name in &names {
        let engine = match &set {
            Some(s) => s.engine(name, o.clone())?,
            None => Engine::baseline(name, o.clone()).with_context(|| format!("engine {name:?} needs --models"))?,
        };
        let p = if name == "none" { Policy::NoAutocomplete } else { policy };
        let ev = evaluate_engine(&records, &engine, &triggers, p)?;
        log::info!("{name}: reduction {:.3}", ev.report.keystrokes.reduction);
        evals.push(ev);
    }
    let index = |n: &str| names.iter().position(|x| x == n);
    let pairs = [
        ("net", "lr-delay", ConceptType::Condition),
        ("lr-delay", "lr-ehr", ConceptType::Condition),
        ("lr-ehr", "lr-text", ConceptType::Condition),
        ("table-cv", "table-c", ConceptType::Symptom),
        ("table-c", "symptom-nb", ConceptType::Symptom),
        ("symptom-nb", "symptom-lr", ConceptType::Symptom),
    ];
    let mut comparisons = Vec::new();
    for (a, b, t) in pairs {
        if let (Some(i), Some(j)) = (index(a), index(b)) {
            let d = compare_mrr(&evals[i], &evals[j], t, resamples, 1);
            comparisons.push(json!({"a": a, "b": b, "type": t, "diff": d.diff, "lo": d.lo, "hi": d.hi, "n": d.n}));
        }
    }
    if evals.is_empty() {
        bail!("no engines to evaluate");
    }
    let reports: Vec<_> = evals.iter().map(|e| &e.report).collect();
    write_json(out, &json!({"policy": policy.to_string(), "records": records.len(), "reports": reports, "comparisons": comparisons}))?;
    if let Some(path) = csv {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "engine,type,mrr,mrr_ci95,map,reciprocal_rank,mean_burden,terms")?;
        for r in &reports {
            for (t, m) in &r.per_type {
                writeln!(
                    w,
                    "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                    r.engine, t, m.mrr.mean, m.mrr.ci95, m.map.mean, m.reciprocal_rank.mean, m.burden.mean, m.terms
                )?;
            }
        }
        w.flush()?;
    }
    println!("{}", out.display());
    Ok(())
}
