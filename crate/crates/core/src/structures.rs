//! Finite relational structures on `{0..n-1}`: parsing, induced substructures,
//! embeddings, automorphisms and ordered copies.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("tuple {tuple:?} of {symbol} repeats an entry")]
    LoopTuple { symbol: String, tuple: Vec<usize> },
    #[error("vertex {vertex} satisfies {count} unary symbols (exactly one required)")]
    UnaryPartition { vertex: usize, count: usize },
    #[error("vertex {vertex} out of range for a structure on {size} vertices")]
    OutOfRange { vertex: usize, size: usize },
    #[error("unknown relation symbol {0}")]
    UnknownSymbol(String),
    #[error("symbol {symbol} has arity {expected}, got a tuple of length {got}")]
    Arity { symbol: String, expected: usize, got: usize },
    #[error("structures are over different languages")]
    LanguageMismatch,
    #[error("invalid language: {0}")]
    Language(String),
}

pub type Result<T> = std::result::Result<T, StructureError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

/// A finite relational language with symbols of arity 1, 2 or 3.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Language {
    pub symbols: Vec<Symbol>,
}

impl Language {
    /// Builds a language and checks the standing conventions: unique names,
    /// arities in 1..=3, some symbol of arity at least two, and either no
    /// unary symbols or at least two of them.
    pub fn new(symbols: Vec<(String, usize)>) -> Result<Arc<Language>> {
        let lang = Language {
            symbols: symbols
                .into_iter()
                .map(|(name, arity)| Symbol { name, arity })
                .collect(),
        };
        lang.validate()?;
        Ok(Arc::new(lang))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.symbols {
            if !seen.insert(s.name.as_str()) {
                return Err(StructureError::Language(format!("duplicate symbol {}", s.name)));
            }
            if !(1..=3).contains(&s.arity) {
                return Err(StructureError::Language(format!(
                    "symbol {} has unsupported arity {}",
                    s.name, s.arity
                )));
            }
        }
        if !self.symbols.iter().any(|s| s.arity >= 2) {
            return Err(StructureError::Language(
                "at least one symbol of arity two or more is required".into(),
            ));
        }
        if self.unary_symbols().len() == 1 {
            return Err(StructureError::Language(
                "unary symbols must come in a partition of at least two".into(),
            ));
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn arity(&self, sym: usize) -> usize {
        self.symbols[sym].arity
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn unary_symbols(&self) -> Vec<usize> {
        (0..self.symbols.len()).filter(|&i| self.symbols[i].arity == 1).collect()
    }

    pub fn has_unary(&self) -> bool {
        self.symbols.iter().any(|s| s.arity == 1)
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }
}

/// A finite structure with universe `{0..size-1}`. Relations are stored as
/// sets of tuples, exactly as written; symmetry is a property of classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinStructure {
    pub language: Arc<Language>,
    pub size: usize,
    pub relations: Vec<BTreeSet<Vec<usize>>>,
}

impl FinStructure {
    pub fn empty(language: Arc<Language>, size: usize) -> FinStructure {
        let relations = vec![BTreeSet::new(); language.len()];
        FinStructure { language, size, relations }
    }

    /// Adds a tuple without validation.
    pub fn insert(&mut self, sym: usize, tuple: Vec<usize>) {
        self.relations[sym].insert(tuple);
    }

    pub fn holds(&self, sym: usize, tuple: &[usize]) -> bool {
        self.relations[sym].contains(tuple)
    }

    /// Total number of stored tuples.
    pub fn tuple_count(&self) -> usize {
        self.relations.iter().map(|r| r.len()).sum()
    }

    /// Checks distinct entries, range and the unary partition.
    pub fn validate(&self) -> Result<()> {
        for (sym, rel) in self.relations.iter().enumerate() {
            let name = &self.language.symbols[sym].name;
            for t in rel {
                if t.len() != self.language.arity(sym) {
                    return Err(StructureError::Arity {
                        symbol: name.clone(),
                        expected: self.language.arity(sym),
                        got: t.len(),
                    });
                }
                if let Some(&v) = t.iter().find(|&&v| v >= self.size) {
                    return Err(StructureError::OutOfRange { vertex: v, size: self.size });
                }
                for i in 0..t.len() {
                    for j in i + 1..t.len() {
                        if t[i] == t[j] {
                            return Err(StructureError::LoopTuple {
                                symbol: name.clone(),
                                tuple: t.clone(),
                            });
                        }
                    }
                }
            }
        }
        let unaries = self.language.unary_symbols();
        if !unaries.is_empty() {
            for v in 0..self.size {
                let count = unaries.iter().filter(|&&u| self.holds(u, &[v])).count();
                if count != 1 {
                    return Err(StructureError::UnaryPartition { vertex: v, count });
                }
            }
        }
        Ok(())
    }

    /// The unary symbol satisfied by `v`, if the language has unaries.
    pub fn unary_of(&self, v: usize) -> Option<usize> {
        self.language.unary_symbols().into_iter().find(|&u| self.holds(u, &[v]))
    }

    /// Substructure on `set`, relabelled by the increasing bijection onto
    /// `{0..|set|-1}`.
    pub fn induced(&self, set: &[usize]) -> Result<FinStructure> {
        let mut sorted: Vec<usize> = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&v) = sorted.iter().find(|&&v| v >= self.size) {
            return Err(StructureError::OutOfRange { vertex: v, size: self.size });
        }
        Ok(self.relabel_onto(&sorted))
    }

    /// Structure on `order.len()` vertices where new vertex `i` is old vertex
    /// `order[i]`. `order` must be injective and in range.
    pub fn relabel_onto(&self, order: &[usize]) -> FinStructure {
        let mut pos = vec![usize::MAX; self.size];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let mut out = FinStructure::empty(self.language.clone(), order.len());
        for (sym, rel) in self.relations.iter().enumerate() {
            for t in rel {
                if t.iter().all(|&v| pos[v] != usize::MAX) {
                    out.relations[sym].insert(t.iter().map(|&v| pos[v]).collect());
                }
            }
        }
        out
    }

    /// Structure obtained by appending one vertex (index `size`).
    pub fn with_vertex(&self) -> FinStructure {
        let mut out = self.clone();
        out.size += 1;
        out
    }

    /// Vertices related to `v` by some tuple.
    pub fn neighbours(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.size];
        for rel in &self.relations {
            for t in rel {
                for &a in t {
                    for &b in t {
                        if a != b {
                            adj[a].insert(b);
                        }
                    }
                }
            }
        }
        adj
    }

    /// Renders in the structure-file format.
    pub fn to_text(&self, name: &str) -> String {
        let mut s = format!("structure {} {{\n  vertices {}", name, self.size);
        for (sym, rel) in self.relations.iter().enumerate() {
            if rel.is_empty() {
                continue;
            }
            s.push_str(";\n  ");
            s.push_str(&self.language.symbols[sym].name);
            s.push(':');
            for t in rel {
                let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                s.push_str(&format!(" ({})", parts.join(",")));
            }
        }
        s.push_str("\n}\n");
        s
    }
}

impl fmt::Display for FinStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{n={}", self.size)?;
        for (sym, rel) in self.relations.iter().enumerate() {
            if rel.is_empty() {
                continue;
            }
            write!(f, "; {}:", self.language.symbols[sym].name)?;
            for t in rel {
                let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                write!(f, "({})", parts.join(","))?;
            }
        }
        write!(f, "}}")
    }
}

/// A structure together with an enumeration of its universe.
/// `enumeration[i]` is the vertex placed at position `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedStructure {
    pub base: FinStructure,
    pub enumeration: Vec<usize>,
}

impl OrderedStructure {
    pub fn identity(base: FinStructure) -> OrderedStructure {
        let enumeration = (0..base.size).collect();
        OrderedStructure { base, enumeration }
    }

    pub fn new(base: FinStructure, enumeration: Vec<usize>) -> Result<OrderedStructure> {
        let mut seen = vec![false; base.size];
        if enumeration.len() != base.size {
            return Err(StructureError::Language(
                "enumeration length differs from the universe size".into(),
            ));
        }
        for &v in &enumeration {
            if v >= base.size || seen[v] {
                return Err(StructureError::OutOfRange { vertex: v, size: base.size });
            }
            seen[v] = true;
        }
        Ok(OrderedStructure { base, enumeration })
    }

    /// The structure relabelled so that position `i` becomes vertex `i`.
    pub fn as_prefix(&self) -> FinStructure {
        self.base.relabel_onto(&self.enumeration)
    }

    pub fn size(&self) -> usize {
        self.base.size
    }
}

fn syntax(text: &str, offset: usize, msg: impl Into<String>) -> StructureError {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map(|p| p + 1).unwrap_or(0) + 1;
    StructureError::Syntax { line, col, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(usize),
    Punct(char),
}

/// Tokenizer shared with the class-file parser. `#` starts a comment.
pub(crate) fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            let v = text[start..i]
                .parse()
                .map_err(|_| syntax(text, start, "integer too large"))?;
            out.push((Tok::Int(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "{}();:,".contains(c) {
            out.push((Tok::Punct(c), i));
            i += 1;
        } else {
            return Err(syntax(text, i, format!("unexpected character '{}'", c)));
        }
    }
    Ok(out)
}

pub(crate) struct Cursor<'a> {
    pub text: &'a str,
    pub toks: Vec<(Tok, usize)>,
    pub pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(text: &'a str) -> Result<Cursor<'a>> {
        Ok(Cursor { text, toks: tokenize(text)?, pos: 0 })
    }
    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }
    pub fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.text.len())
    }
    pub fn err(&self, msg: impl Into<String>) -> StructureError {
        syntax(self.text, self.offset(), msg)
    }
    pub fn err_at(&self, offset: usize, msg: impl Into<String>) -> StructureError {
        syntax(self.text, offset, msg)
    }
    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }
    pub fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
    pub fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c)))
        }
    }
    pub fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }
    pub fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected '{}'", kw))),
        }
    }
    pub fn int(&mut self) -> Result<usize> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected integer")),
        }
    }
    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

/// Parses the body `vertices N (; sym: tuple+)*` and stops before a closing
/// `}` or the end of input.
pub(crate) fn parse_structure_body(cur: &mut Cursor, lang: &Arc<Language>) -> Result<FinStructure> {
    let start = cur.offset();
    cur.keyword("vertices")?;
    let n = cur.int()?;
    let mut st = FinStructure::empty(lang.clone(), n);
    while cur.eat(';') {
        if matches!(cur.peek(), Some(Tok::Punct('}')) | None) {
            break;
        }
        let name = cur.ident()?;
        let sym = lang.index_of(&name).ok_or_else(|| StructureError::UnknownSymbol(name.clone()))?;
        cur.expect(':')?;
        let mut any = false;
        while cur.eat('(') {
            any = true;
            let mut t = vec![cur.int()?];
            while cur.eat(',') {
                t.push(cur.int()?);
            }
            cur.expect(')')?;
            if t.len() != lang.arity(sym) {
                return Err(StructureError::Arity {
                    symbol: name.clone(),
                    expected: lang.arity(sym),
                    got: t.len(),
                });
            }
            st.insert(sym, t);
        }
        if !any {
            return Err(cur.err("expected at least one tuple"));
        }
    }
    let _ = start;
    st.validate()?;
    Ok(st)
}

/// Parses a structure file. Accepts both the wrapped form
/// `structure NAME { vertices N; ... }` and a bare body `vertices N; ...`.
pub fn parse_structure(text: &str, lang: &Arc<Language>) -> Result<FinStructure> {
    let mut cur = Cursor::new(text)?;
    let wrapped = matches!(cur.peek(), Some(Tok::Ident(s)) if s == "structure");
    if wrapped {
        cur.keyword("structure")?;
        cur.ident()?;
        cur.expect('{')?;
    }
    let st = parse_structure_body(&mut cur, lang)?;
    if wrapped {
        cur.expect('}')?;
    }
    if !cur.at_end() {
        return Err(cur.err("trailing input"));
    }
    Ok(st)
}

/// Per-vertex counts of tuple occurrences, per symbol and position.
fn degree_profile(s: &FinStructure) -> Vec<Vec<usize>> {
    let width: usize = s.language.symbols.iter().map(|x| x.arity).sum();
    let mut prof = vec![vec![0usize; width]; s.size];
    let mut off = 0;
    for (sym, rel) in s.relations.iter().enumerate() {
        for t in rel {
            for (p, &v) in t.iter().enumerate() {
                prof[v][off + p] += 1;
            }
        }
        off += s.language.arity(sym);
    }
    prof
}

struct EmbedSearch<'a> {
    a: &'a FinStructure,
    b: &'a FinStructure,
    prof_a: Vec<Vec<usize>>,
    prof_b: Vec<Vec<usize>>,
    /// Tuples of `a` grouped by their largest vertex.
    a_by_max: Vec<Vec<(usize, Vec<usize>)>>,
    /// Tuples of `b` grouped by symbol, for reflection checks.
    map: Vec<usize>,
    used: Vec<bool>,
}

impl<'a> EmbedSearch<'a> {
    fn new(a: &'a FinStructure, b: &'a FinStructure) -> Self {
        let mut a_by_max = vec![Vec::new(); a.size];
        for (sym, rel) in a.relations.iter().enumerate() {
            for t in rel {
                let m = *t.iter().max().unwrap();
                a_by_max[m].push((sym, t.clone()));
            }
        }
        EmbedSearch {
            a,
            b,
            prof_a: degree_profile(a),
            prof_b: degree_profile(b),
            a_by_max,
            map: Vec::with_capacity(a.size),
            used: vec![false; b.size],
        }
    }

    /// Checks that mapping vertex `i` (just pushed) keeps the partial map an
    /// embedding on `{0..=i}`.
    fn consistent(&self, i: usize) -> bool {
        let bi = self.map[i];
        if self.prof_a[i].iter().zip(&self.prof_b[bi]).any(|(x, y)| x > y) {
            return false;
        }
        // preservation of tuples whose largest vertex is i
        for (sym, t) in &self.a_by_max[i] {
            let img: Vec<usize> = t.iter().map(|&v| self.map[v]).collect();
            if !self.b.holds(*sym, &img) {
                return false;
            }
        }
        // reflection: every tuple of b over the image containing bi comes from a
        for (sym, rel) in self.b.relations.iter().enumerate() {
            let k = self.a.language.arity(sym);
            if k > i + 1 {
                continue;
            }
            for t in rel {
                if !t.contains(&bi) {
                    continue;
                }
                let mut pre = Vec::with_capacity(k);
                for &w in t {
                    match self.map.iter().position(|&m| m == w) {
                        Some(p) => pre.push(p),
                        None => break,
                    }
                }
                if pre.len() == k && !self.a.holds(sym, &pre) {
                    return false;
                }
            }
        }
        true
    }

    fn run(&mut self, out: &mut Vec<Vec<usize>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        let i = self.map.len();
        if i == self.a.size {
            out.push(self.map.clone());
            return;
        }
        for c in 0..self.b.size {
            if self.used[c] {
                continue;
            }
            self.map.push(c);
            self.used[c] = true;
            if self.consistent(i) {
                self.run(out, limit);
            }
            self.used[c] = false;
            self.map.pop();
            if out.len() >= limit {
                return;
            }
        }
    }
}

/// All embeddings of `a` into `b` (injections preserving and reflecting every
/// relation), in lexicographic order of the image tuple.
pub fn find_embeddings(a: &FinStructure, b: &FinStructure) -> Result<Vec<Vec<usize>>> {
    embeddings_limited(a, b, usize::MAX)
}

pub(crate) fn embeddings_limited(
    a: &FinStructure,
    b: &FinStructure,
    limit: usize,
) -> Result<Vec<Vec<usize>>> {
    if a.language != b.language {
        return Err(StructureError::LanguageMismatch);
    }
    let mut out = Vec::new();
    if a.size > b.size {
        return Ok(out);
    }
    let mut s = EmbedSearch::new(a, b);
    s.run(&mut out, limit);
    Ok(out)
}

pub fn embeds(a: &FinStructure, b: &FinStructure) -> Result<bool> {
    Ok(!embeddings_limited(a, b, 1)?.is_empty())
}

pub fn isomorphic(a: &FinStructure, b: &FinStructure) -> Result<bool> {
    Ok(a.size == b.size && a.tuple_count() == b.tuple_count() && embeds(a, b)?)
}

pub fn automorphisms(a: &FinStructure) -> Vec<Vec<usize>> {
    find_embeddings(a, a).expect("same language")
}

/// One representative per isomorphism class of ordered expansions of `a`.
/// Two enumerations are identified when an automorphism carries one to the
/// other, i.e. when they relabel `a` to the same concrete structure. The
/// representative kept is the lexicographically least enumeration.
pub fn ordered_copies(a: &FinStructure) -> Vec<OrderedStructure> {
    let n = a.size;
    let mut seen: HashSet<FinStructure> = HashSet::new();
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let rel = a.relabel_onto(&perm);
        if seen.insert(rel) {
            out.push(OrderedStructure { base: a.clone(), enumeration: perm.clone() });
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out
}

/// Advances to the next permutation in lexicographic order.
pub fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// True iff the enumeration-order-preserving bijection is an isomorphism.
pub fn omega_isomorphic(a: &OrderedStructure, b: &OrderedStructure) -> Result<bool> {
    if a.base.language != b.base.language {
        return Err(StructureError::LanguageMismatch);
    }
    Ok(a.size() == b.size() && a.as_prefix() == b.as_prefix())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_lang() -> Arc<Language> {
        Language::new(vec![("E".into(), 2)]).unwrap()
    }

    fn lo_lang() -> Arc<Language> {
        Language::new(vec![("lt".into(), 2)]).unwrap()
    }

    #[test]
    fn parses_bare_and_wrapped_forms() {
        let l = graph_lang();
        let a = parse_structure("vertices 2; E:(0,1)(1,0)", &l).unwrap();
        let b = parse_structure("structure K2 {\n vertices 2; # edge\n E: (0,1) (1,0)\n}", &l).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.relations[0].len(), 2);
    }

    #[test]
    fn triangle_parses_and_loops_are_rejected() {
        let l = graph_lang();
        let t = parse_structure("vertices 3; E:(0,1)(1,2)(0,2)", &l).unwrap();
        assert_eq!(t.size, 3);
        let err = parse_structure("vertices 1; E:(0,0)", &l).unwrap_err();
        assert!(matches!(err, StructureError::LoopTuple { .. }));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let l = graph_lang();
        let err = parse_structure("vertices 2;\n E (0,1)", &l).unwrap_err();
        assert_eq!(err, StructureError::Syntax { line: 2, col: 4, msg: "expected ':'".into() });
    }

    #[test]
    fn unary_partition_is_enforced() {
        let l = Language::new(vec![("P".into(), 1), ("Q".into(), 1), ("E".into(), 2)]).unwrap();
        assert!(parse_structure("vertices 2; P:(0)(1)", &l).is_ok());
        let e = parse_structure("vertices 2; P:(0)", &l).unwrap_err();
        assert_eq!(e, StructureError::UnaryPartition { vertex: 1, count: 0 });
    }

    #[test]
    fn induced_relabels_increasingly() {
        let l = graph_lang();
        let t = parse_structure("vertices 3; E:(0,1)(1,0)(1,2)(2,1)(0,2)(2,0)", &l).unwrap();
        let e = t.induced(&[0, 2]).unwrap();
        assert_eq!(e, parse_structure("vertices 2; E:(0,1)(1,0)", &l).unwrap());
        assert_eq!(t.induced(&[0, 1, 2]).unwrap(), t);
        assert!(t.induced(&[5]).is_err());
    }

    #[test]
    fn embedding_counts() {
        let l = graph_lang();
        let edge = parse_structure("vertices 2; E:(0,1)(1,0)", &l).unwrap();
        let tri = parse_structure("vertices 3; E:(0,1)(1,0)(1,2)(2,1)(0,2)(2,0)", &l).unwrap();
        let p3 = parse_structure("vertices 3; E:(0,1)(1,0)(1,2)(2,1)", &l).unwrap();
        assert_eq!(find_embeddings(&edge, &tri).unwrap().len(), 6);
        assert!(find_embeddings(&tri, &p3).unwrap().is_empty());
        assert!(find_embeddings(&p3, &p3).unwrap().contains(&vec![0, 1, 2]));
        let embs = find_embeddings(&edge, &tri).unwrap();
        let mut sorted = embs.clone();
        sorted.sort();
        assert_eq!(embs, sorted);
    }

    #[test]
    fn ordered_copy_counts() {
        let g = graph_lang();
        let edge = parse_structure("vertices 2; E:(0,1)(1,0)", &g).unwrap();
        assert_eq!(ordered_copies(&edge).len(), 1);
        let lo = lo_lang();
        let chain = parse_structure("vertices 2; lt:(0,1)", &lo).unwrap();
        assert_eq!(ordered_copies(&chain).len(), 2);
        let three = FinStructure::empty(g, 3);
        assert_eq!(ordered_copies(&three).len(), 1);
    }

    #[test]
    fn omega_isomorphism() {
        let lo = lo_lang();
        let chain = parse_structure("vertices 2; lt:(0,1)", &lo).unwrap();
        let inc = OrderedStructure::identity(chain.clone());
        let dec = OrderedStructure::new(chain, vec![1, 0]).unwrap();
        assert!(omega_isomorphic(&inc, &inc).unwrap());
        assert!(!omega_isomorphic(&inc, &dec).unwrap());
        let g = graph_lang();
        let edge = parse_structure("vertices 2; E:(0,1)(1,0)", &g).unwrap();
        let a = OrderedStructure::identity(edge.clone());
        let b = OrderedStructure::new(edge, vec![1, 0]).unwrap();
        assert!(omega_isomorphic(&a, &b).unwrap());
    }

    #[test]
    fn language_conventions() {
        assert!(Language::new(vec![("P".into(), 1)]).is_err());
        assert!(Language::new(vec![("P".into(), 1), ("E".into(), 2)]).is_err());
        assert!(Language::new(vec![("E".into(), 2), ("E".into(), 2)]).is_err());
    }
}
