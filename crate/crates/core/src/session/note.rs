use serde::{Deserialize, Serialize};

use crate::ontology::EntryIdx;

/// A concept bound to a span of the note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tag {
    pub entry: EntryIdx,
    pub start: usize,
    pub end: usize,
    /// Text inserted (or confirmed) for the tag.
    pub synonym: String,
}

impl Tag {
    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

/// Result of replacing the note text wholesale: the edit, located by common
/// prefix and suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextEdit {
    pub at: usize,
    pub removed: usize,
    pub inserted: String,
}

/// Note text plus its non-overlapping tags, sorted by start.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NoteState {
    text: String,
    tags: Vec<Tag>,
    /// Bumped on every change; suggestions remember the version they saw.
    version: u64,
}

impl NoteState {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Replaces the text, shifting tags after the edit and dropping tags the
    /// edit touched. Returns `None` when nothing changed.
    pub fn set_text(&mut self, new: &str) -> Option<TextEdit> {
        if new == self.text {
            return None;
        }
        let old = &self.text;
        let mut p = old.bytes().zip(new.bytes()).take_while(|(a, b)| a == b).count();
        while !old.is_char_boundary(p) || !new.is_char_boundary(p) {
            p -= 1;
        }
        let max_s = old.len().min(new.len()) - p;
        let mut s = old.bytes().rev().zip(new.bytes().rev()).take(max_s).take_while(|(a, b)| a == b).count();
        while !old.is_char_boundary(old.len() - s) || !new.is_char_boundary(new.len() - s) {
            s -= 1;
        }
        let old_end = old.len() - s;
        let delta = new.len() as isize - old.len() as isize;
        let edit = TextEdit { at: p, removed: old_end - p, inserted: new[p..new.len() - s].to_string() };
        self.tags.retain_mut(|t| {
            if t.end <= p {
                true
            } else if t.start >= old_end {
                t.start = (t.start as isize + delta) as usize;
                t.end = (t.end as isize + delta) as usize;
                true
            } else {
                false
            }
        });
        self.text = new.to_string();
        self.version += 1;
        Some(edit)
    }

    /// Replaces `start..end` with `synonym` and tags the inserted text.
    pub fn insert_tag(&mut self, start: usize, end: usize, entry: EntryIdx, synonym: &str) -> &Tag {
        let mut text = String::with_capacity(self.text.len() + synonym.len());
        text.push_str(&self.text[..start]);
        text.push_str(synonym);
        text.push_str(&self.text[end..]);
        self.set_text(&text);
        self.tags.retain(|t| !t.overlaps(start, start + synonym.len()));
        self.add_tag(Tag { entry, start, end: start + synonym.len(), synonym: synonym.to_string() })
    }

    /// Adds a tag over existing text. The caller checks overlap.
    pub fn add_tag(&mut self, tag: Tag) -> &Tag {
        let at = self.tags.partition_point(|t| t.start < tag.start);
        self.tags.insert(at, tag);
        self.version += 1;
        &self.tags[at]
    }

    pub fn overlapping(&self, start: usize, end: usize) -> Option<&Tag> {
        self.tags.iter().find(|t| t.overlaps(start, end))
    }
}
