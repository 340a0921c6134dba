//! Visit records: patient context plus the note written for the visit.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{ConceptExtractor, NegationLexicon, Polarity};
use crate::features::PatientContext;
use crate::ontology::{ConceptType, EntryIdx, Ontology};
use crate::session::NoteSection;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Note {
    /// Section header name → body text.
    pub sections: BTreeMap<String, String>,
}

impl Note {
    /// Sections in canonical note order; unknown names sort last by name.
    pub fn ordered_sections(&self) -> Vec<(NoteSection, &str, &str)> {
        let mut out: Vec<(NoteSection, &str, &str)> = self
            .sections
            .iter()
            .map(|(k, v)| (NoteSection::from_header(k).unwrap_or(NoteSection::Other), k.as_str(), v.as_str()))
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    /// Renders `HEADER: body` blocks separated by blank lines.
    pub fn render(&self) -> String {
        let mut text = String::new();
        for (section, name, body) in self.ordered_sections() {
            if !text.is_empty() {
                text.push_str("\n\n");
            }
            let header = if section == NoteSection::Other { name.to_ascii_uppercase() } else { section.header().into() };
            text.push_str(&header);
            text.push_str(": ");
            text.push_str(body);
        }
        text
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    #[serde(flatten)]
    pub context: PatientContext,
    pub note: Note,
}

pub fn read_visits(path: impl AsRef<Path>) -> Result<Vec<Visit>, CorpusError> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_visits(path: impl AsRef<Path>, visits: &[Visit]) -> Result<(), CorpusError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in visits {
        serde_json::to_writer(&mut w, v).map_err(|source| CorpusError::Parse { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// One concept mention in a rendered note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthMention {
    pub entry: EntryIdx,
    pub start: usize,
    pub end: usize,
    pub synonym: String,
    pub section: NoteSection,
    pub polarity: Polarity,
}

/// A visit prepared for evaluation.
#[derive(Debug, Clone)]
pub struct EvalRecord {
    pub context: PatientContext,
    pub text: String,
    /// Every mention in document order, negated ones included.
    pub mentions: Vec<TruthMention>,
}

impl EvalRecord {
    pub fn new(visit: &Visit, extractor: &ConceptExtractor, lexicon: &NegationLexicon) -> Self {
        Self::from_text(visit.context.clone(), visit.note.render(), extractor, lexicon)
    }

    /// Extracts the mentions of an already rendered note.
    pub fn from_text(
        context: PatientContext,
        text: String,
        extractor: &ConceptExtractor,
        lexicon: &NegationLexicon,
    ) -> Self {
        let sections = crate::session::split_sections(&text);
        let mentions = extractor
            .extract(&text, lexicon)
            .into_iter()
            .map(|m| {
                let section = sections
                    .iter()
                    .rev()
                    .find(|s| s.body.start <= m.start)
                    .map_or(NoteSection::Other, |s| s.section);
                TruthMention { entry: m.entry, start: m.start, end: m.end, synonym: m.synonym, section, polarity: m.polarity }
            })
            .collect();
        Self { context, text, mentions }
    }

    /// Ground truth of one type: distinct entries in order of first mention.
    pub fn truth(&self, t: ConceptType, ontology: &Ontology) -> Vec<EntryIdx> {
        let mut seen = HashSet::new();
        self.mentions
            .iter()
            .filter(|m| ontology.entry(m.entry).concept_type == t && seen.insert(m.entry))
            .map(|m| m.entry)
            .collect()
    }
}

/// Entries documented in a visit note, by type, regardless of polarity.
pub fn documented_entries(
    visit: &Visit,
    extractor: &ConceptExtractor,
    lexicon: &NegationLexicon,
) -> HashSet<EntryIdx> {
    extractor.extract(&visit.note.render(), lexicon).into_iter().map(|m| m.entry).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::EhrMention;

    fn visit() -> Visit {
        let mut sections = BTreeMap::new();
        sections.insert("MDM".to_string(), "check hct.".to_string());
        sections.insert("HPI".to_string(), "pt presents with cp. history of htn, dm. denies fever".to_string());
        sections.insert("PHYSICAL EXAM".to_string(), "tenderness in ruq".to_string());
        Visit {
            context: PatientContext {
                patient_id: "p1".into(),
                triage_text: "cp since am".into(),
                chief_complaint: "chest pain".into(),
                ehr: vec![EhrMention { entry: "c_hypertension".into(), age_days: 12.0 }],
                ..PatientContext::default()
            },
            note: Note { sections },
        }
    }

    #[test]
    fn renders_in_canonical_order() {
        let text = visit().note.render();
        assert!(text.starts_with("HPI: pt presents"));
        let pe = text.find("PHYSICAL EXAM:").unwrap();
        let mdm = text.find("MDM:").unwrap();
        assert!(pe < mdm);
    }

    #[test]
    fn json_schema_is_flat() {
        let v = visit();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["patient_id"], "p1");
        assert_eq!(json["ehr"][0]["entry"], "c_hypertension");
        assert!(json["note"]["sections"]["HPI"].is_string());
        let back: Visit = serde_json::from_value(json).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn ground_truth_by_type() {
        let o = Ontology::demo();
        let ex = ConceptExtractor::new(&o);
        let lex = NegationLexicon::default();
        let r = EvalRecord::new(&visit(), &ex, &lex);
        let ids = |t| r.truth(t, &o).iter().map(|e| o.entry(*e).id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(ConceptType::Condition), vec!["c_hypertension", "c_dm"]);
        assert_eq!(ids(ConceptType::Symptom), vec!["s_chest_pain", "s_fever", "s_tenderness"]);
        assert_eq!(ids(ConceptType::Lab), vec!["l_hct"]);
        let fever = r.mentions.iter().find(|m| m.synonym == "fever").unwrap();
        assert_eq!(fever.polarity, Polarity::Negated);
        assert_eq!(fever.section, NoteSection::Hpi);
        let t = r.mentions.iter().find(|m| m.synonym == "tenderness").unwrap();
        assert_eq!(t.section, NoteSection::PhysicalExam);
        assert_eq!(&r.text[t.start..t.end], "tenderness");
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        write_visits(&p, &[visit(), visit()]).unwrap();
        let back = read_visits(&p).unwrap();
        assert_eq!(back, vec![visit(), visit()]);
    }
}
