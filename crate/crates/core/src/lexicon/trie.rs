use std::collections::BTreeMap;

/// Byte-keyed trie over prefix patterns. Every stored prefix that a token
/// starts with matches; there is no longest-match exclusivity.
#[derive(Debug, Clone, Default)]
pub struct PrefixTrie {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Default)]
struct Node {
    children: BTreeMap<u8, usize>,
    values: Vec<usize>,
}

impl PrefixTrie {
    pub fn new() -> Self {
        Self {
            nodes: vec![Node::default()],
        }
    }

    pub fn insert(&mut self, prefix: &str, value: usize) {
        let mut at = 0;
        for &b in prefix.as_bytes() {
            at = match self.nodes[at].children.get(&b) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[at].children.insert(b, next);
                    next
                }
            };
        }
        self.nodes[at].values.push(value);
    }

    /// Calls `f` with the values of every stored prefix of `token`, shortest
    /// prefix first.
    pub fn for_each_match(&self, token: &str, mut f: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut at = 0;
        self.nodes[at].values.iter().for_each(|&v| f(v));
        for &b in token.as_bytes() {
            match self.nodes[at].children.get(&b) {
                Some(&next) => at = next,
                None => return,
            }
            self.nodes[at].values.iter().for_each(|&v| f(v));
        }
    }

    pub fn matches(&self, token: &str) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_match(token, |v| out.push(v));
        out
    }
}
