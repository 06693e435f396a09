//! String interning shared by all model components.

use std::collections::HashMap;

/// Interned symbol id. Words, POS tags, non-terminal labels and parser
/// actions all live in one table so a model component can mix them freely
/// in its conditioning context.
pub type Sym = u32;

#[derive(Debug, Default, Clone)]
pub struct SymbolTable {
    names: Vec<String>,
    ids: HashMap<String, Sym>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, s: &str) -> Sym {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as Sym;
        self.names.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    /// Lookup without inserting; `None` for symbols never seen.
    pub fn get(&self, s: &str) -> Option<Sym> {
        self.ids.get(s).copied()
    }

    pub fn name(&self, id: Sym) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intern_is_idempotent() {
        let mut t = SymbolTable::new();
        let a = t.intern("NP");
        let b = t.intern("NP");
        assert_eq!(a, b);
        assert_eq!(t.name(a), "NP");
        assert_eq!(t.get("VP"), None);
    }
}
