//! Token alphabet with reserved sentence markers.

use std::collections::HashMap;

/// Integer token handle. Reserved ids are fixed: 0 = unknown, 1 = begin
/// marker, 2 = end marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u32);

pub const UNK: TokenId = TokenId(0);
pub const BOS: TokenId = TokenId(1);
pub const EOS: TokenId = TokenId(2);

pub const UNK_TOKEN: &str = "<unk>";
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";

/// Bijection between token strings and ids. Lookups of unseen strings
/// resolve to the unknown token rather than failing.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    by_name: HashMap<String, TokenId>,
    names: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary {
            by_name: HashMap::new(),
            names: Vec::new(),
        };
        for reserved in [UNK_TOKEN, BOS_TOKEN, EOS_TOKEN] {
            v.intern(reserved);
        }
        v
    }

    /// Intern a token, returning its id. Reserved spellings map to their
    /// fixed ids.
    pub fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.by_name.get(token) {
            return id;
        }
        let id = TokenId(self.names.len() as u32);
        self.by_name.insert(token.to_string(), id);
        self.names.push(token.to_string());
        id
    }

    /// Total lookup: unseen strings resolve to [`UNK`].
    pub fn get(&self, token: &str) -> TokenId {
        self.by_name.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.by_name.contains_key(token)
    }

    pub fn name(&self, id: TokenId) -> &str {
        &self.names[id.0 as usize]
    }

    /// Number of stored tokens, reserved markers included.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // reserved tokens are always present
    }

    /// Ids of every non-reserved token, in insertion order.
    pub fn real_tokens(&self) -> impl Iterator<Item = TokenId> + '_ {
        (3..self.names.len() as u32).map(TokenId)
    }

    /// The predictable alphabet: every real token plus the end marker and
    /// the unknown token. This is the event space each conditional
    /// distribution normalizes over.
    pub fn predictable_len(&self) -> usize {
        self.names.len() - 1 // everything except <s>
    }
}
