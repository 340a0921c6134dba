use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ontology::ConceptType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NoteSection {
    Hpi,
    Pmh,
    Medications,
    Ros,
    PhysicalExam,
    Mdm,
    Other,
}

impl NoteSection {
    /// Canonical note order; also the order sections are rendered in.
    pub const ALL: [NoteSection; 7] = [
        NoteSection::Hpi,
        NoteSection::Pmh,
        NoteSection::Medications,
        NoteSection::Ros,
        NoteSection::PhysicalExam,
        NoteSection::Mdm,
        NoteSection::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NoteSection::Hpi => "HPI",
            NoteSection::Pmh => "PMH",
            NoteSection::Medications => "MEDICATIONS",
            NoteSection::Ros => "ROS",
            NoteSection::PhysicalExam => "PHYSICAL_EXAM",
            NoteSection::Mdm => "MDM",
            NoteSection::Other => "OTHER",
        }
    }

    /// Header text written at the start of the section's first line.
    pub fn header(self) -> &'static str {
        match self {
            NoteSection::PhysicalExam => "PHYSICAL EXAM",
            NoteSection::Other => "OTHER",
            s => s.as_str(),
        }
    }

    pub fn default_type_order(self) -> [ConceptType; 4] {
        use ConceptType::*;
        match self {
            NoteSection::Hpi | NoteSection::Other => [Condition, Symptom, Medication, Lab],
            NoteSection::PhysicalExam => [Symptom, Condition, Medication, Lab],
            NoteSection::Pmh => [Condition, Symptom, Medication, Lab],
            NoteSection::Medications => [Medication, Condition, Symptom, Lab],
            NoteSection::Ros => [Symptom, Condition, Medication, Lab],
            NoteSection::Mdm => [Condition, Symptom, Lab, Medication],
        }
    }

    /// Recognizes a header name, ignoring case and treating `_` as a space.
    pub fn from_header(name: &str) -> Option<NoteSection> {
        let n = name.trim().to_ascii_uppercase().replace('_', " ");
        Some(match n.as_str() {
            "HPI" | "HISTORY OF PRESENT ILLNESS" => NoteSection::Hpi,
            "PMH" | "PAST MEDICAL HISTORY" => NoteSection::Pmh,
            "MEDICATIONS" | "MEDS" => NoteSection::Medications,
            "ROS" | "REVIEW OF SYSTEMS" => NoteSection::Ros,
            "PHYSICAL EXAM" | "PE" => NoteSection::PhysicalExam,
            "MDM" | "MEDICAL DECISION MAKING" => NoteSection::Mdm,
            "OTHER" => NoteSection::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for NoteSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoteSection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NoteSection::from_header(s).ok_or_else(|| format!("unknown note section {s:?}"))
    }
}

/// A header line: returns the section and the byte length of the header
/// including its colon. Header names are upper case words followed by `:`.
fn parse_header(line: &str) -> Option<(NoteSection, usize)> {
    let colon = line.find(':')?;
    let name = &line[..colon];
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_uppercase() || c == ' ' || c == '_') {
        return None;
    }
    Some((NoteSection::from_header(name).unwrap_or(NoteSection::Other), colon + 1))
}

/// A section of a note: its body spans `body` (after the header).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionSpan {
    pub section: NoteSection,
    pub start: usize,
    pub body: Range<usize>,
}

/// Sections in text order. Text before the first header is an OTHER section.
pub fn split_sections(text: &str) -> Vec<SectionSpan> {
    let mut out: Vec<SectionSpan> = Vec::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        if let Some((section, hlen)) = parse_header(line) {
            if let Some(last) = out.last_mut() {
                last.body.end = line_start;
            } else if line_start > 0 {
                out.push(SectionSpan { section: NoteSection::Other, start: 0, body: 0..line_start });
            }
            out.push(SectionSpan { section, start: line_start, body: line_start + hlen..text.len() });
        }
        line_start += line.len();
    }
    if out.is_empty() {
        out.push(SectionSpan { section: NoteSection::Other, start: 0, body: 0..text.len() });
    }
    out
}

/// The section containing byte offset `cursor` and where its body starts.
pub fn section_at(text: &str, cursor: usize) -> (NoteSection, usize) {
    let cursor = cursor.min(text.len());
    let mut line_start = 0;
    let mut found = (NoteSection::Other, 0);
    for line in text[..cursor].split_inclusive('\n') {
        if let Some((section, hlen)) = parse_header(&text[line_start..]) {
            if line_start + hlen <= cursor {
                found = (section, line_start + hlen);
            }
        }
        line_start += line.len();
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_orders() {
        use ConceptType::*;
        assert_eq!(NoteSection::Hpi.default_type_order(), [Condition, Symptom, Medication, Lab]);
        assert_eq!(NoteSection::PhysicalExam.default_type_order()[0], Symptom);
        assert_eq!(NoteSection::Other.default_type_order(), NoteSection::Hpi.default_type_order());
        assert_eq!(NoteSection::Mdm.default_type_order(), [Condition, Symptom, Lab, Medication]);
        for s in NoteSection::ALL {
            let mut o = s.default_type_order().to_vec();
            o.sort();
            assert_eq!(o, ConceptType::ALL.to_vec());
        }
    }

    #[test]
    fn header_names() {
        assert_eq!(NoteSection::from_header("PHYSICAL EXAM"), Some(NoteSection::PhysicalExam));
        assert_eq!(NoteSection::from_header("physical_exam"), Some(NoteSection::PhysicalExam));
        assert_eq!(NoteSection::from_header("Review of Systems"), Some(NoteSection::Ros));
        assert_eq!(NoteSection::from_header("PLAN"), None);
    }

    #[test]
    fn splits_note() {
        let text = "HPI: pt with cp\nmore text\nPMH:\nhtn\nPLAN: admit\n";
        let s = split_sections(text);
        let kinds: Vec<_> = s.iter().map(|x| x.section).collect();
        assert_eq!(kinds, vec![NoteSection::Hpi, NoteSection::Pmh, NoteSection::Other]);
        assert_eq!(&text[s[0].body.clone()], " pt with cp\nmore text\n");
        assert_eq!(&text[s[1].body.clone()], "\nhtn\n");
        assert_eq!(&text[s[2].body.clone()], " admit\n");
    }

    #[test]
    fn text_before_header_is_other() {
        let s = split_sections("hello\nHPI: x");
        assert_eq!(s[0], SectionSpan { section: NoteSection::Other, start: 0, body: 0..6 });
        assert_eq!(s[1].section, NoteSection::Hpi);
    }

    #[test]
    fn lowercase_colon_is_not_a_header() {
        assert_eq!(split_sections("pt: stable").len(), 1);
        assert_eq!(split_sections("pt: stable")[0].section, NoteSection::Other);
    }

    #[test]
    fn section_at_cursor() {
        let text = "HPI: pt with cp\nMDM: labs";
        assert_eq!(section_at(text, 8), (NoteSection::Hpi, 4));
        assert_eq!(section_at(text, text.len()), (NoteSection::Mdm, 20));
        assert_eq!(section_at(text, 2), (NoteSection::Other, 0));
        assert_eq!(section_at("free text", 4), (NoteSection::Other, 0));
    }
}
