use std::collections::HashMap;

use crate::extraction::preferred_entry;
use crate::ontology::{EntryIdx, Ontology};

struct Node {
    children: HashMap<String, u32>,
    terminal: Option<u32>,
}

/// Trie keyed by lowercase word tokens. Each terminal stores one synonym and
/// the entry it resolves to.
pub(super) struct TokenTrie {
    nodes: Vec<Node>,
    terminals: Vec<(String, EntryIdx)>,
}

impl TokenTrie {
    pub const ROOT: u32 = 0;

    pub fn build(ontology: &Ontology) -> Self {
        let mut owners: HashMap<&str, Vec<EntryIdx>> = HashMap::new();
        for (syn, entry) in ontology.all_synonyms() {
            owners.entry(syn).or_default().push(entry);
        }
        let mut synonyms: Vec<(&str, Vec<EntryIdx>)> = owners.into_iter().collect();
        synonyms.sort_by(|a, b| a.0.cmp(b.0));

        let mut trie = Self { nodes: vec![Node { children: HashMap::new(), terminal: None }], terminals: Vec::new() };
        for (syn, entries) in synonyms {
            let mut node = Self::ROOT;
            for tok in syn.split(' ') {
                node = match trie.nodes[node as usize].children.get(tok) {
                    Some(&n) => n,
                    None => {
                        let n = trie.nodes.len() as u32;
                        trie.nodes.push(Node { children: HashMap::new(), terminal: None });
                        trie.nodes[node as usize].children.insert(tok.to_string(), n);
                        n
                    }
                };
            }
            let t = trie.terminals.len() as u32;
            trie.terminals.push((syn.to_string(), preferred_entry(ontology, &entries)));
            trie.nodes[node as usize].terminal = Some(t);
        }
        trie
    }

    pub fn child(&self, node: u32, token: &str) -> Option<u32> {
        self.nodes[node as usize].children.get(token).copied()
    }

    pub fn terminal_at(&self, node: u32) -> Option<u32> {
        self.nodes[node as usize].terminal
    }

    pub fn terminal(&self, t: u32) -> (&str, EntryIdx) {
        let (s, e) = &self.terminals[t as usize];
        (s, *e)
    }
}
