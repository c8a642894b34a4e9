//! Finite presentations and everything derived from them by enumeration:
//! words in a free group, the presentation file format, Todd-Coxeter coset
//! enumeration over the trivial subgroup, the resulting Cayley table and
//! quotient map, Schreier transversals with their free basis of the
//! relation subgroup, and Reidemeister rewriting of relation words into
//! coordinates on that basis.

use std::collections::VecDeque;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Relators longer than this after exponent expansion are rejected at
/// parse time; it keeps `x^999999999` from allocating the expansion.
const MAX_RELATOR_LETTERS: i64 = 100_000;

/// A word in the free group, stored freely reduced: a run-length list of
/// (generator index, exponent) with every exponent nonzero and adjacent
/// entries on distinct generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<(usize, i64)>,
}

/// Freely reduce a raw letter sequence. Idempotent; cancellation cascades,
/// so x y y^-1 x^-1 reduces to the empty word in one call.
pub fn reduce(raw: &[(usize, i64)]) -> Word {
    let mut out: Vec<(usize, i64)> = Vec::with_capacity(raw.len());
    for &(g, e) in raw {
        if e == 0 {
            continue;
        }
        match out.last_mut() {
            Some(top) if top.0 == g => {
                top.1 += e;
                if top.1 == 0 {
                    out.pop();
                }
            }
            _ => out.push((g, e)),
        }
    }
    Word { letters: out }
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn generator(g: usize) -> Self {
        Word { letters: vec![(g, 1)] }
    }

    pub fn from_letters(raw: &[(usize, i64)]) -> Self {
        reduce(raw)
    }

    pub fn letters(&self) -> &[(usize, i64)] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of single letters after expanding exponents.
    pub fn letter_len(&self) -> i64 {
        self.letters.iter().map(|&(_, e)| e.abs()).sum()
    }

    /// Expansion into single letters; the flag is true for an inverse letter.
    pub fn flat(&self) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for &(g, e) in &self.letters {
            for _ in 0..e.abs() {
                out.push((g, e < 0));
            }
        }
        out
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut raw = self.letters.clone();
        raw.extend_from_slice(&other.letters);
        reduce(&raw)
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut raw = Vec::new();
        for _ in 0..k.abs() {
            raw.extend_from_slice(&base.letters);
        }
        reduce(&raw)
    }

    /// Largest generator index used, if any.
    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|&(g, _)| g).max()
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.letters.is_empty() {
            return "1".to_string();
        }
        self.letters
            .iter()
            .map(|&(g, e)| {
                if e == 1 {
                    names[g].clone()
                } else {
                    format!("{}^{}", names[g], e)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A finite presentation: named generators and freely reduced, nonempty
/// relators over them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    names: Vec<String>,
    relators: Vec<Word>,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Presentation {
    /// Programmatic constructor; relators are reduced here, so callers may
    /// pass raw products. Empty relators after reduction are rejected.
    pub fn new(names: Vec<String>, relators: Vec<Word>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Parse {
                line: 0,
                col: 0,
                msg: "a presentation needs at least one generator".into(),
            });
        }
        for (i, n) in names.iter().enumerate() {
            if !valid_name(n) {
                return Err(Error::Parse {
                    line: 0,
                    col: 0,
                    msg: format!("invalid generator name `{n}`"),
                });
            }
            if names[..i].contains(n) {
                return Err(Error::Parse {
                    line: 0,
                    col: 0,
                    msg: format!("duplicate generator name `{n}`"),
                });
            }
        }
        let relators: Vec<Word> = relators
            .iter()
            .map(|w| reduce(w.letters()))
            .collect();
        for w in &relators {
            if w.is_empty() {
                return Err(Error::Parse {
                    line: 0,
                    col: 0,
                    msg: "relator is trivial after free reduction".into(),
                });
            }
            if w.max_generator().unwrap() >= names.len() {
                return Err(Error::Parse {
                    line: 0,
                    col: 0,
                    msg: "relator uses a generator index out of range".into(),
                });
            }
        }
        Ok(Presentation { names, relators })
    }

    pub fn num_generators(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }
}

struct Scanner<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    base_col: usize,
    names: &'a [String],
}

impl<'a> Scanner<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line,
            col: self.base_col + self.pos,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ') | Some('\t')) {
            self.pos += 1;
        }
    }

    fn integer(&mut self) -> Result<i64> {
        let neg = self.peek() == Some('-');
        if neg {
            self.pos += 1;
        }
        let start = self.pos;
        while self.peek().map_or(false, |c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected an integer exponent");
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        let v: i64 = digits
            .parse()
            .map_err(|_| Error::Parse {
                line: self.line,
                col: self.base_col + start,
                msg: "exponent out of range".into(),
            })?;
        Ok(if neg { -v } else { v })
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self
            .peek()
            .map_or(false, |c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    /// One word: a juxtaposition of exponentiated atoms. Stops at a comma,
    /// a closing bracket, or the end of the line.
    fn word(&mut self) -> Result<Word> {
        let mut acc = Word::empty();
        let mut saw_factor = false;
        loop {
            self.skip_ws();
            let factor = match self.peek() {
                Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                    let col = self.base_col + self.pos;
                    let name = self.ident();
                    match self.names.iter().position(|n| *n == name) {
                        Some(g) => Word::generator(g),
                        None => {
                            return Err(Error::Parse {
                                line: self.line,
                                col,
                                msg: format!("unknown generator `{name}`"),
                            })
                        }
                    }
                }
                Some('(') => {
                    self.pos += 1;
                    let inner = self.word()?;
                    self.skip_ws();
                    if self.bump() != Some(')') {
                        self.pos -= 1;
                        return self.err("expected `)`");
                    }
                    inner
                }
                Some('[') => {
                    self.pos += 1;
                    let u = self.word()?;
                    self.skip_ws();
                    if self.bump() != Some(',') {
                        self.pos -= 1;
                        return self.err("expected `,` inside commutator brackets");
                    }
                    let v = self.word()?;
                    self.skip_ws();
                    if self.bump() != Some(']') {
                        self.pos -= 1;
                        return self.err("expected `]`");
                    }
                    u.inverse().concat(&v.inverse()).concat(&u).concat(&v)
                }
                _ => break,
            };
            saw_factor = true;
            self.skip_ws();
            let factor = if self.peek() == Some('^') {
                self.pos += 1;
                let caret = self.pos;
                let e = self.integer()?;
                if factor.letter_len().saturating_mul(e.abs()) > MAX_RELATOR_LETTERS {
                    return Err(Error::Parse {
                        line: self.line,
                        col: self.base_col + caret,
                        msg: format!(
                            "exponent expands the word past {MAX_RELATOR_LETTERS} letters"
                        ),
                    });
                }
                factor.pow(e)
            } else {
                factor
            };
            acc = acc.concat(&factor);
            if acc.letter_len() > MAX_RELATOR_LETTERS {
                return self.err(format!("word exceeds {MAX_RELATOR_LETTERS} letters"));
            }
        }
        if !saw_factor {
            return self.err("expected a word");
        }
        Ok(acc)
    }
}

/// Parse the two-line presentation format: a `gens:` line listing generator
/// names, then a `rels:` line listing relator words separated by commas.
/// `#` starts a comment; blank lines are skipped. Errors carry the 1-based
/// line and column of the offending character.
pub fn parse_presentation(text: &str) -> Result<Presentation> {
    let mut semantic: Vec<(usize, &str)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        };
        if !content.trim().is_empty() {
            semantic.push((i + 1, content));
        }
    }
    if semantic.len() != 2 {
        let (line, msg) = match semantic.len() {
            0 | 1 => (
                semantic.last().map_or(1, |&(l, _)| l),
                "expected a `gens:` line followed by a `rels:` line",
            ),
            _ => (semantic[2].0, "unexpected extra line"),
        };
        return Err(Error::Parse { line, col: 1, msg: msg.into() });
    }

    let (gline, gtext) = semantic[0];
    let gpayload = match gtext.trim_start().strip_prefix("gens:") {
        Some(p) => p,
        None => {
            return Err(Error::Parse {
                line: gline,
                col: 1,
                msg: "expected the line to start with `gens:`".into(),
            })
        }
    };
    let payload_col = gtext.len() - gpayload.len() + 1;
    let mut names: Vec<String> = Vec::new();
    let mut col = payload_col;
    for piece in gpayload.split(',') {
        let name = piece.trim();
        let name_col = col + (piece.len() - piece.trim_start().len());
        if name.is_empty() || !valid_name(name) {
            return Err(Error::Parse {
                line: gline,
                col: name_col,
                msg: format!("expected a generator name, found `{name}`"),
            });
        }
        if names.iter().any(|n| n == name) {
            return Err(Error::Parse {
                line: gline,
                col: name_col,
                msg: format!("duplicate generator name `{name}`"),
            });
        }
        names.push(name.to_string());
        col += piece.len() + 1;
    }

    let (rline, rtext) = semantic[1];
    let rpayload = match rtext.trim_start().strip_prefix("rels:") {
        Some(p) => p,
        None => {
            return Err(Error::Parse {
                line: rline,
                col: 1,
                msg: "expected the line to start with `rels:`".into(),
            })
        }
    };
    let mut sc = Scanner {
        chars: rpayload.chars().collect(),
        pos: 0,
        line: rline,
        base_col: rtext.len() - rpayload.len() + 1,
        names: &names,
    };
    let mut relators: Vec<Word> = Vec::new();
    sc.skip_ws();
    if sc.peek().is_some() {
        loop {
            let start_col = sc.base_col + sc.pos;
            let w = sc.word()?;
            if w.is_empty() {
                return Err(Error::Parse {
                    line: rline,
                    col: start_col,
                    msg: "relator is trivial after free reduction".into(),
                });
            }
            relators.push(w);
            sc.skip_ws();
            match sc.bump() {
                None => break,
                Some(',') => continue,
                Some(c) => {
                    sc.pos -= 1;
                    return sc.err(format!("unexpected character `{c}`"));
                }
            }
        }
    }
    Presentation::new(names, relators)
}

/// Multiplication table of a finite group on elements 0..m. Construction
/// validates the identity, that rows and columns are permutations, inverses,
/// and associativity (every triple for m <= 64, at least 10 m^2 sampled
/// triples above that).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CayleyGroup {
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
}

impl CayleyGroup {
    pub fn new(table: Vec<Vec<usize>>, identity: usize) -> Result<Self> {
        let m = table.len();
        if m == 0 {
            return Err(Error::BadGroupTable("empty table".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != m {
                return Err(Error::BadGroupTable(format!("row {i} is not length {m}")));
            }
            if let Some(&bad) = row.iter().find(|&&v| v >= m) {
                return Err(Error::BadGroupTable(format!(
                    "row {i} holds {bad}, outside 0..{m}"
                )));
            }
        }
        if identity >= m {
            return Err(Error::BadGroupTable("identity index out of range".into()));
        }
        for a in 0..m {
            if table[identity][a] != a || table[a][identity] != a {
                return Err(Error::BadGroupTable(format!(
                    "element {identity} is not an identity at {a}"
                )));
            }
        }
        for i in 0..m {
            let mut seen_row = vec![false; m];
            let mut seen_col = vec![false; m];
            for j in 0..m {
                if seen_row[table[i][j]] {
                    return Err(Error::BadGroupTable(format!("row {i} repeats a value")));
                }
                seen_row[table[i][j]] = true;
                if seen_col[table[j][i]] {
                    return Err(Error::BadGroupTable(format!("column {i} repeats a value")));
                }
                seen_col[table[j][i]] = true;
            }
        }
        let mut inverse = vec![0usize; m];
        for a in 0..m {
            let b = (0..m).find(|&b| table[a][b] == identity).unwrap();
            if table[b][a] != identity {
                return Err(Error::BadGroupTable(format!(
                    "one-sided inverse at element {a}"
                )));
            }
            inverse[a] = b;
        }
        if m <= 64 {
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        if table[table[a][b]][c] != table[a][table[b][c]] {
                            return Err(Error::BadGroupTable(format!(
                                "associativity fails at ({a}, {b}, {c})"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut rng = SplitMix64::new(0x1705_9e2c ^ m as u64);
            for _ in 0..10 * m * m {
                let a = rng.below(m);
                let b = rng.below(m);
                let c = rng.below(m);
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(Error::BadGroupTable(format!(
                        "associativity fails at ({a}, {b}, {c})"
                    )));
                }
            }
        }
        Ok(CayleyGroup { table, inverse, identity })
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Order of a single element.
    pub fn element_order(&self, a: usize) -> usize {
        let mut k = 1;
        let mut acc = a;
        while acc != self.identity {
            acc = self.mul(acc, a);
            k += 1;
        }
        k
    }
}

/// Images of the free generators in a Cayley group; the quotient map from
/// the free group. Validation checks the images generate and that every
/// relator maps to the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientMap {
    images: Vec<usize>,
}

impl QuotientMap {
    pub fn new(images: Vec<usize>, p: &Presentation, g: &CayleyGroup) -> Result<Self> {
        if images.len() != p.num_generators() {
            return Err(Error::BadQuotientMap(format!(
                "{} images for {} generators",
                images.len(),
                p.num_generators()
            )));
        }
        if let Some(&bad) = images.iter().find(|&&v| v >= g.order()) {
            return Err(Error::BadQuotientMap(format!("image {bad} out of range")));
        }
        let mut seen = vec![false; g.order()];
        seen[g.identity()] = true;
        let mut queue = VecDeque::from([g.identity()]);
        while let Some(a) = queue.pop_front() {
            for &im in &images {
                for b in [g.mul(a, im), g.mul(a, g.inv(im))] {
                    if !seen[b] {
                        seen[b] = true;
                        queue.push_back(b);
                    }
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::BadQuotientMap(
                "generator images do not generate the group".into(),
            ));
        }
        let q = QuotientMap { images };
        for (i, r) in p.relators().iter().enumerate() {
            let e = q.evaluate(g, r);
            if e != g.identity() {
                return Err(Error::BadQuotientMap(format!(
                    "relator {i} evaluates to element {e}"
                )));
            }
        }
        Ok(q)
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn image(&self, generator: usize) -> usize {
        self.images[generator]
    }

    /// Evaluate a word; exponents are reduced modulo the element order, so
    /// huge powers cost nothing.
    pub fn evaluate(&self, g: &CayleyGroup, w: &Word) -> usize {
        let mut acc = g.identity();
        for &(s, e) in w.letters() {
            let base = self.images[s];
            let ord = g.element_order(base) as i64;
            let k = e.rem_euclid(ord);
            for _ in 0..k {
                acc = g.mul(acc, base);
            }
        }
        acc
    }
}

/// Todd-Coxeter state: a coset table with 2d columns (column 2s acts by
/// generator s, column 2s+1 by its inverse) plus the union-find of
/// coincidences. p[i] == i marks a live coset; merges keep the smaller
/// index, so coset 0 never dies.
struct CosetTable {
    cols: usize,
    tbl: Vec<Vec<Option<usize>>>,
    p: Vec<usize>,
    total_defined: usize,
    limit: usize,
    queue: VecDeque<usize>,
    merges: usize,
}

impl CosetTable {
    fn new(num_generators: usize, limit: usize) -> Self {
        CosetTable {
            cols: 2 * num_generators,
            tbl: vec![vec![None; 2 * num_generators]],
            p: vec![0],
            total_defined: 1,
            limit,
            queue: VecDeque::new(),
            merges: 0,
        }
    }

    fn live(&self, a: usize) -> bool {
        self.p[a] == a
    }

    fn rep(&mut self, k: usize) -> usize {
        let mut l = k;
        while self.p[l] != l {
            l = self.p[l];
        }
        let mut m = k;
        while m != l {
            let next = self.p[m];
            self.p[m] = l;
            m = next;
        }
        l
    }

    fn define(&mut self, a: usize, x: usize) -> Result<usize> {
        if self.total_defined >= self.limit {
            return Err(Error::EnumerationLimit { limit: self.limit });
        }
        let b = self.tbl.len();
        self.tbl.push(vec![None; self.cols]);
        self.p.push(b);
        self.total_defined += 1;
        self.tbl[a][x] = Some(b);
        self.tbl[b][x ^ 1] = Some(a);
        Ok(b)
    }

    fn merge(&mut self, k: usize, l: usize) {
        let a = self.rep(k);
        let b = self.rep(l);
        if a != b {
            let (keep, drop) = if a < b { (a, b) } else { (b, a) };
            self.p[drop] = keep;
            self.merges += 1;
            self.queue.push_back(drop);
        }
    }

    /// Coincidence processing: merge two cosets and drain the queue of dead
    /// cosets, rehoming each dead row's entries onto live representatives.
    fn coincidence(&mut self, a: usize, b: usize) {
        self.merge(a, b);
        while let Some(dead) = self.queue.pop_front() {
            for x in 0..self.cols {
                let Some(d) = self.tbl[dead][x] else { continue };
                self.tbl[d][x ^ 1] = None;
                let mu = self.rep(dead);
                let nu = self.rep(d);
                if let Some(t) = self.tbl[mu][x] {
                    self.merge(nu, t);
                } else if let Some(t) = self.tbl[nu][x ^ 1] {
                    self.merge(mu, t);
                } else {
                    self.tbl[mu][x] = Some(nu);
                    self.tbl[nu][x ^ 1] = Some(mu);
                }
                self.tbl[dead][x] = None;
            }
        }
    }

    /// Scan one relator from one coset, defining cosets to fill the gap
    /// (HLT style). A scan that closes inconsistently triggers coincidence
    /// processing.
    fn scan_and_fill(&mut self, a: usize, word: &[usize]) -> Result<()> {
        let mut f = a;
        let mut i = 0;
        let mut b = a;
        let mut j = word.len();
        loop {
            while i < j {
                match self.tbl[f][word[i]] {
                    Some(t) => {
                        f = t;
                        i += 1;
                    }
                    None => break,
                }
            }
            if i == j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            while j > i {
                match self.tbl[b][word[j - 1] ^ 1] {
                    Some(t) => {
                        b = t;
                        j -= 1;
                    }
                    None => break,
                }
            }
            if j == i {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            if j == i + 1 {
                self.tbl[f][word[i]] = Some(b);
                self.tbl[b][word[i] ^ 1] = Some(f);
                return Ok(());
            }
            self.define(f, word[i])?;
        }
    }
}

/// Column sequence of a word for the coset table.
fn word_columns(w: &Word) -> Vec<usize> {
    w.flat()
        .into_iter()
        .map(|(g, invflag)| 2 * g + usize::from(invflag))
        .collect()
}

/// Enumerate the cosets of the trivial subgroup by the HLT strategy:
/// repeated passes over live cosets in increasing order, scanning every
/// relator with fill-in, then completing the row, until a pass changes
/// nothing. `limit` bounds the cosets ever defined, counting ones later
/// merged away; exceeding it reports the limit rather than running on.
/// The result is the Cayley table of the presented group (elements are the
/// surviving cosets, renumbered in increasing order) and the quotient map.
pub fn coset_enumerate(p: &Presentation, limit: usize) -> Result<(CayleyGroup, QuotientMap)> {
    let d = p.num_generators();
    let relator_cols: Vec<Vec<usize>> = p.relators().iter().map(word_columns).collect();
    let mut ct = CosetTable::new(d, limit);

    loop {
        let defs_before = ct.total_defined;
        let merges_before = ct.merges;
        let mut a = 0;
        while a < ct.tbl.len() {
            if ct.live(a) {
                for w in &relator_cols {
                    if !ct.live(a) {
                        break;
                    }
                    ct.scan_and_fill(a, w)?;
                }
                if ct.live(a) {
                    for x in 0..ct.cols {
                        if ct.tbl[a][x].is_none() {
                            ct.define(a, x)?;
                        }
                    }
                }
            }
            a += 1;
        }
        if ct.total_defined == defs_before && ct.merges == merges_before {
            break;
        }
    }

    let live: Vec<usize> = (0..ct.tbl.len()).filter(|&i| ct.live(i)).collect();
    let m = live.len();
    let mut renumber = vec![usize::MAX; ct.tbl.len()];
    for (new, &old) in live.iter().enumerate() {
        renumber[old] = new;
    }
    let mut coset_action = vec![vec![0usize; 2 * d]; m];
    for (new, &old) in live.iter().enumerate() {
        for x in 0..2 * d {
            let t = ct.tbl[old][x]
                .ok_or_else(|| Error::Internal("incomplete coset table after closure".into()))?;
            let t = ct.rep(t);
            coset_action[new][x] = renumber[t];
        }
    }

    // Cosets of the trivial subgroup are the group elements. The full
    // multiplication table comes from tracing each element's definition
    // word (breadth-first over positive generator columns, which reach
    // everything since the group is finite) from every starting element.
    let mut word_to: Vec<Option<Vec<usize>>> = vec![None; m];
    word_to[0] = Some(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(g) = queue.pop_front() {
        for s in 0..d {
            let h = coset_action[g][2 * s];
            if word_to[h].is_none() {
                let mut w = word_to[g].clone().unwrap();
                w.push(s);
                word_to[h] = Some(w);
                queue.push_back(h);
            }
        }
    }
    let mut table = vec![vec![0usize; m]; m];
    for a in 0..m {
        for b in 0..m {
            let mut acc = a;
            for &s in word_to[b].as_ref().unwrap() {
                acc = coset_action[acc][2 * s];
            }
            table[a][b] = acc;
        }
    }
    let group = CayleyGroup::new(table, 0)?;
    let images: Vec<usize> = (0..d).map(|s| coset_action[0][2 * s]).collect();
    let quotient = QuotientMap::new(images, p, &group)?;
    Ok((group, quotient))
}

/// Schreier transversal of the trivial subgroup together with the free
/// basis of the relation subgroup it induces. The transversal comes from a
/// breadth-first search over positive generator letters in generator
/// order, so it is prefix closed and exactly m - 1 pairs (element, s) are
/// tree edges. The remaining pairs index the basis in lexicographic
/// (element, generator) order; the rank is d m - m + 1.
#[derive(Clone, Debug)]
pub struct SchreierData {
    transversal: Vec<Word>,
    basis_table: Vec<Vec<Option<usize>>>,
    rank: usize,
}

pub fn schreier_transversal(g: &CayleyGroup, q: &QuotientMap) -> SchreierData {
    let m = g.order();
    let d = q.images().len();
    let mut transversal: Vec<Option<Word>> = vec![None; m];
    let mut tree_edge = vec![vec![false; d]; m];
    transversal[g.identity()] = Some(Word::empty());
    let mut queue = VecDeque::from([g.identity()]);
    while let Some(a) = queue.pop_front() {
        for s in 0..d {
            let b = g.mul(a, q.image(s));
            if transversal[b].is_none() {
                tree_edge[a][s] = true;
                let w = transversal[a].as_ref().unwrap().concat(&Word::generator(s));
                transversal[b] = Some(w);
                queue.push_back(b);
            }
        }
    }
    let transversal: Vec<Word> = transversal.into_iter().map(Option::unwrap).collect();
    let mut basis_table = vec![vec![None; d]; m];
    let mut rank = 0;
    for a in 0..m {
        for s in 0..d {
            if !tree_edge[a][s] {
                basis_table[a][s] = Some(rank);
                rank += 1;
            }
        }
    }
    assert_eq!(rank, d * m - m + 1, "Nielsen-Schreier rank is off");
    SchreierData { transversal, basis_table, rank }
}

impl SchreierData {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn transversal(&self, element: usize) -> &Word {
        &self.transversal[element]
    }

    /// Basis index of the pair (element, generator); None marks a tree edge.
    pub fn basis_index(&self, element: usize, generator: usize) -> Option<usize> {
        self.basis_table[element][generator]
    }

    /// The Schreier generator for a pair: t_a x_s (t_{a pi(s)})^-1. Tree
    /// pairs give words that reduce to the identity.
    pub fn schreier_generator(
        &self,
        g: &CayleyGroup,
        q: &QuotientMap,
        element: usize,
        generator: usize,
    ) -> Word {
        let target = g.mul(element, q.image(generator));
        self.transversal[element]
            .concat(&Word::generator(generator))
            .concat(&self.transversal[target].inverse())
    }

    /// Rewrite a relation word into coordinates on the Schreier basis of
    /// the abelianized relation subgroup: walk the word through the group,
    /// crediting +1 to the basis pair crossed by each positive letter and
    /// -1 for each inverse letter. Words not mapping to the identity are
    /// rejected.
    pub fn rewrite(
        &self,
        g: &CayleyGroup,
        q: &QuotientMap,
        w: &Word,
    ) -> Result<Vec<BigInt>> {
        let e = q.evaluate(g, w);
        if e != g.identity() {
            return Err(Error::NotARelation { element: e });
        }
        let mut coords = vec![BigInt::zero(); self.rank];
        let mut state = g.identity();
        for (s, invflag) in w.flat() {
            if invflag {
                let prev = g.mul(state, g.inv(q.image(s)));
                if let Some(b) = self.basis_table[prev][s] {
                    coords[b] -= 1;
                }
                state = prev;
            } else {
                if let Some(b) = self.basis_table[state][s] {
                    coords[b] += 1;
                }
                state = g.mul(state, q.image(s));
            }
        }
        assert_eq!(state, g.identity(), "walk of a relation word must close");
        Ok(coords)
    }
}

/// Shortest word (breadth-first, letters tried in the fixed order s, s^-1
/// for s = 0, 1, ...) mapping onto each group element. Used to present
/// group elements and to search for morphisms.
pub fn shortest_words(g: &CayleyGroup, q: &QuotientMap) -> Vec<Word> {
    let m = g.order();
    let d = q.images().len();
    let mut words: Vec<Option<Word>> = vec![None; m];
    words[g.identity()] = Some(Word::empty());
    let mut queue = VecDeque::from([g.identity()]);
    while let Some(a) = queue.pop_front() {
        for s in 0..d {
            for (target, letter) in [
                (g.mul(a, q.image(s)), Word::generator(s)),
                (g.mul(a, g.inv(q.image(s))), Word::generator(s).inverse()),
            ] {
                if words[target].is_none() {
                    words[target] = Some(words[a].as_ref().unwrap().concat(&letter));
                    queue.push_back(target);
                }
            }
        }
    }
    words.into_iter().map(Option::unwrap).collect()
}

/// A presentation with its enumeration artifacts bundled: the Cayley
/// table, the quotient map, and the Schreier data for the relation
/// subgroup. The group sits behind an Rc so module constructions
/// downstream can share one instance.
#[derive(Clone, Debug)]
pub struct EnumeratedPresentation {
    pub presentation: Presentation,
    pub group: Rc<CayleyGroup>,
    pub quotient: QuotientMap,
    pub schreier: SchreierData,
}

pub fn enumerate_presentation(
    presentation: Presentation,
    limit: usize,
) -> Result<EnumeratedPresentation> {
    let (group, quotient) = coset_enumerate(&presentation, limit)?;
    let schreier = schreier_transversal(&group, &quotient);
    Ok(EnumeratedPresentation { presentation, group: Rc::new(group), quotient, schreier })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn parse(text: &str) -> Presentation {
        parse_presentation(text).unwrap()
    }

    fn enumerate(text: &str) -> EnumeratedPresentation {
        enumerate_presentation(parse(text), 20_000).unwrap()
    }

    #[test]
    fn reduce_cancels_and_merges() {
        let e = reduce(&[(0, 1), (0, -1)]);
        assert!(e.is_empty());
        let sq = reduce(&[(0, 1), (0, 1)]);
        assert_eq!(sq.letters(), &[(0, 2)]);
        let sandwich = reduce(&[(0, 1), (1, 1), (1, -1), (0, 1)]);
        assert_eq!(sandwich.letters(), &[(0, 2)]);
    }

    #[test]
    fn word_algebra() {
        let w = Word::from_letters(&[(0, 2), (1, -1)]);
        assert!(w.concat(&w.inverse()).is_empty());
        assert_eq!(w.pow(0), Word::empty());
        assert_eq!(w.pow(-1), w.inverse());
        assert_eq!(w.pow(2), w.concat(&w));
        assert_eq!(w.letter_len(), 3);
        assert_eq!(w.flat(), vec![(0, false), (0, false), (1, true)]);
    }

    #[test]
    fn parse_single_generator() {
        let p = parse("# comment\ngens: x\nrels: x^2\n");
        assert_eq!(p.num_generators(), 1);
        assert_eq!(p.names(), &["x".to_string()]);
        assert_eq!(p.relators(), &[Word::from_letters(&[(0, 2)])]);
    }

    #[test]
    fn parse_coxeter_style() {
        let p = parse("gens: x, y\nrels: x^2, y^2, (x y)^3\n");
        assert_eq!(p.num_generators(), 2);
        assert_eq!(p.relators().len(), 3);
        assert_eq!(
            p.relators()[2],
            Word::from_letters(&[(0, 1), (1, 1), (0, 1), (1, 1), (0, 1), (1, 1)])
        );
    }

    #[test]
    fn parse_commutator_and_negative_exponents() {
        let p = parse("gens: x, y\nrels: [x, y], (x y)^-2\n");
        assert_eq!(
            p.relators()[0],
            Word::from_letters(&[(0, -1), (1, -1), (0, 1), (1, 1)])
        );
        assert_eq!(
            p.relators()[1],
            Word::from_letters(&[(1, -1), (0, -1), (1, -1), (0, -1)])
        );
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_presentation("# c\ngens: x\nrels: x ^\n").unwrap_err();
        match err {
            Error::Parse { line, col, .. } => {
                assert_eq!(line, 3);
                assert_eq!(col, 10);
            }
            other => panic!("wrong error: {other}"),
        }
        let err = parse_presentation("gens: x\nrels: y^2\n").unwrap_err();
        match err {
            Error::Parse { line, col, msg } => {
                assert_eq!(line, 2);
                assert_eq!(col, 7);
                assert!(msg.contains("unknown generator"));
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_trivial_relator() {
        let err = parse_presentation("gens: x\nrels: x x^-1\n").unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("trivial"));
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_duplicate_generator() {
        assert!(parse_presentation("gens: x, x\nrels: x^2\n").is_err());
    }

    #[test]
    fn parse_rejects_huge_exponent() {
        let err = parse_presentation("gens: x\nrels: x^999999999\n").unwrap_err();
        match err {
            Error::Parse { msg, .. } => assert!(msg.contains("letters")),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn enumerate_cyclic_groups() {
        let ep = enumerate("gens: x\nrels: x^2\n");
        assert_eq!(ep.group.order(), 2);
        assert_eq!(ep.group.mul(1, 1), 0);
        assert_eq!(ep.quotient.images(), &[1]);

        let ep = enumerate("gens: x\nrels: x^3\n");
        assert_eq!(ep.group.order(), 3);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(ep.group.mul(a, b), (a + b) % 3);
            }
        }

        let ep = enumerate("gens: x\nrels: x^4\n");
        assert_eq!(ep.group.order(), 4);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(ep.group.mul(a, b), (a + b) % 4);
            }
        }
    }

    #[test]
    fn enumerate_trivial_group() {
        let ep = enumerate("gens: x\nrels: x\n");
        assert_eq!(ep.group.order(), 1);
        assert_eq!(ep.quotient.images(), &[0]);
        assert_eq!(ep.schreier.rank(), 1);
        assert_eq!(ep.schreier.basis_index(0, 0), Some(0));
        let w = Word::generator(0);
        assert_eq!(ep.schreier.rewrite(&ep.group, &ep.quotient, &w).unwrap(), vec![bi(1)]);
    }

    #[test]
    fn enumerate_klein_four() {
        let ep = enumerate("gens: x, y\nrels: x^2, y^2, [x, y]\n");
        let g = &ep.group;
        assert_eq!(g.order(), 4);
        for a in 0..4 {
            assert_eq!(g.mul(a, a), 0, "every element squares to the identity");
            for b in 0..4 {
                assert_eq!(g.mul(a, b), g.mul(b, a));
            }
        }
    }

    #[test]
    fn enumerate_symmetric_three() {
        let ep = enumerate("gens: x, y\nrels: x^2, y^2, (x y)^3\n");
        let g = &ep.group;
        let q = &ep.quotient;
        assert_eq!(g.order(), 6);
        let x = q.image(0);
        let y = q.image(1);
        assert_eq!(g.element_order(x), 2);
        assert_eq!(g.element_order(y), 2);
        assert_eq!(g.element_order(g.mul(x, y)), 3);
        assert_ne!(g.mul(x, y), g.mul(y, x), "the group is nonabelian");
    }

    #[test]
    fn enumeration_survives_redundant_generators() {
        let ep = enumerate("gens: x, y, z\nrels: x^2, y^2, (x y)^3, z^-1 x y\n");
        assert_eq!(ep.group.order(), 6);
        let z = ep.quotient.image(2);
        let xy = ep.group.mul(ep.quotient.image(0), ep.quotient.image(1));
        assert_eq!(z, xy);
    }

    #[test]
    fn enumeration_is_deterministic() {
        let p = parse("gens: x, y\nrels: x^2, y^2, (x y)^3\n");
        let (g1, q1) = coset_enumerate(&p, 20_000).unwrap();
        let (g2, q2) = coset_enumerate(&p, 20_000).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(q1, q2);
    }

    #[test]
    fn enumeration_limit_is_reported() {
        let p = parse("gens: x, y\nrels: x^2\n");
        match coset_enumerate(&p, 100) {
            Err(Error::EnumerationLimit { limit }) => assert_eq!(limit, 100),
            other => panic!("expected the limit error, got {other:?}"),
        }
    }

    #[test]
    fn evaluate_reduces_exponents() {
        let ep = enumerate("gens: x\nrels: x^2\n");
        let w = Word::from_letters(&[(0, 3)]);
        assert_eq!(ep.quotient.evaluate(&ep.group, &w), 1);
        let w = Word::from_letters(&[(0, 1_000_000_001)]);
        assert_eq!(ep.quotient.evaluate(&ep.group, &w), 1);
        let w = Word::from_letters(&[(0, -7)]);
        assert_eq!(ep.quotient.evaluate(&ep.group, &w), 1);
    }

    #[test]
    fn schreier_on_order_two() {
        let ep = enumerate("gens: x\nrels: x^2\n");
        let sd = &ep.schreier;
        assert_eq!(sd.rank(), 1);
        assert_eq!(sd.transversal(0), &Word::empty());
        assert_eq!(sd.transversal(1), &Word::generator(0));
        assert_eq!(sd.basis_index(0, 0), None, "tree edge");
        assert_eq!(sd.basis_index(1, 0), Some(0));
        let sg = sd.schreier_generator(&ep.group, &ep.quotient, 1, 0);
        assert_eq!(sg, Word::from_letters(&[(0, 2)]));
    }

    #[test]
    fn schreier_satisfies_nielsen_schreier() {
        for text in [
            "gens: x\nrels: x\n",
            "gens: x\nrels: x^2\n",
            "gens: x\nrels: x^3\n",
            "gens: x\nrels: x^4\n",
            "gens: x, y\nrels: x^2, y^2, [x, y]\n",
            "gens: x, y\nrels: x^2, y^2, (x y)^3\n",
            "gens: x, y, z\nrels: x^2, y^2, [x, y], z^-1 x y\n",
            "gens: x, y, z\nrels: x^2, y^2, (x y)^3, z^-1 x y\n",
        ] {
            let ep = enumerate(text);
            let m = ep.group.order();
            let d = ep.presentation.num_generators();
            assert_eq!(ep.schreier.rank(), d * m - m + 1);
            let trivial_pairs = (0..m)
                .flat_map(|a| (0..d).map(move |s| (a, s)))
                .filter(|&(a, s)| ep.schreier.basis_index(a, s).is_none())
                .count();
            assert_eq!(trivial_pairs, m - 1);
            for a in 0..m {
                let w = ep.schreier.transversal(a);
                assert_eq!(ep.quotient.evaluate(&ep.group, w), a);
                assert!(
                    w.letters().iter().all(|&(_, e)| e > 0),
                    "transversal words use positive letters"
                );
                // Prefix closure: every expanded prefix is again a
                // transversal word.
                let flat = w.flat();
                let mut state = ep.group.identity();
                for &(s, _) in &flat {
                    let prefix_len = ep.schreier.transversal(state).letter_len();
                    state = ep.group.mul(state, ep.quotient.image(s));
                    assert_eq!(ep.schreier.transversal(state).letter_len(), prefix_len + 1);
                }
            }
        }
    }

    #[test]
    fn rewrite_powers_of_the_relator() {
        let ep = enumerate("gens: x\nrels: x^2\n");
        let sd = &ep.schreier;
        let r = |w: &Word| sd.rewrite(&ep.group, &ep.quotient, w).unwrap();
        assert_eq!(r(&Word::from_letters(&[(0, 2)])), vec![bi(1)]);
        assert_eq!(r(&Word::from_letters(&[(0, 4)])), vec![bi(2)]);
        assert_eq!(r(&Word::from_letters(&[(0, -2)])), vec![bi(-1)]);
        assert_eq!(r(&Word::empty()), vec![bi(0)]);
    }

    #[test]
    fn rewrite_rejects_non_relations() {
        let ep = enumerate("gens: x\nrels: x^2\n");
        let w = Word::from_letters(&[(0, 3)]);
        match ep.schreier.rewrite(&ep.group, &ep.quotient, &w) {
            Err(Error::NotARelation { element }) => assert_eq!(element, 1),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn rewrite_is_additive() {
        let ep = enumerate("gens: x, y\nrels: x^2, y^2, (x y)^3\n");
        let sd = &ep.schreier;
        let r = |w: &Word| sd.rewrite(&ep.group, &ep.quotient, w).unwrap();
        let conj = |w: &Word, c: &Word| c.concat(w).concat(&c.inverse());
        let rels = ep.presentation.relators().to_vec();
        let carriers = [
            Word::empty(),
            Word::generator(0),
            Word::generator(1).inverse(),
            Word::from_letters(&[(0, 1), (1, 1)]),
            Word::from_letters(&[(1, -1), (0, 1), (1, 1)]),
        ];
        let mut samples = Vec::new();
        for rel in &rels {
            for c in &carriers {
                samples.push(conj(rel, c));
                samples.push(conj(&rel.inverse(), c));
            }
        }
        for u in &samples {
            for v in &samples {
                let sum: Vec<BigInt> = r(u)
                    .iter()
                    .zip(r(v).iter())
                    .map(|(a, b)| a + b)
                    .collect();
                assert_eq!(r(&u.concat(v)), sum);
            }
        }
    }

    #[test]
    fn shortest_words_cover_the_group() {
        let ep = enumerate("gens: x, y\nrels: x^2, y^2, (x y)^3\n");
        let words = shortest_words(&ep.group, &ep.quotient);
        assert_eq!(words.len(), 6);
        assert!(words[0].is_empty());
        for (el, w) in words.iter().enumerate() {
            assert_eq!(ep.quotient.evaluate(&ep.group, w), el);
            assert!(w.letter_len() <= 3);
        }
    }

    #[test]
    fn cayley_validation_catches_bad_tables() {
        // Z/4 with one entry corrupted: still row/column permutations but
        // not associative.
        let mut t = vec![
            vec![0, 1, 2, 3],
            vec![1, 2, 3, 0],
            vec![2, 3, 0, 1],
            vec![3, 0, 1, 2],
        ];
        t[2][3] = 0;
        t[2][1] = 1;
        t[3][3] = 1;
        t[3][1] = 2;
        t[1][3] = 2;
        t[1][1] = 0;
        assert!(matches!(
            CayleyGroup::new(t, 0),
            Err(Error::BadGroupTable(_))
        ));
    }

    #[test]
    fn quotient_validation_requires_generation() {
        // x -> identity in Z/2 does not generate.
        let table = vec![vec![0, 1], vec![1, 0]];
        let g = CayleyGroup::new(table, 0).unwrap();
        let p = parse("gens: x\nrels: x^2\n");
        assert!(matches!(
            QuotientMap::new(vec![0], &p, &g),
            Err(Error::BadQuotientMap(_))
        ));
        assert!(QuotientMap::new(vec![1], &p, &g).is_ok());
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(raw in proptest::collection::vec((0usize..3, -3i64..=3), 0..12)) {
            let once = reduce(&raw);
            let twice = reduce(once.letters());
            prop_assert_eq!(&once, &twice);
            let mut doubled = once.letters().to_vec();
            doubled.extend(once.inverse().letters().iter().copied());
            prop_assert!(reduce(&doubled).is_empty());
        }

        #[test]
        fn concat_respects_length_bound(
            a in proptest::collection::vec((0usize..3, -3i64..=3), 0..10),
            b in proptest::collection::vec((0usize..3, -3i64..=3), 0..10),
        ) {
            let u = reduce(&a);
            let v = reduce(&b);
            let w = u.concat(&v);
            prop_assert!(w.letter_len() <= u.letter_len() + v.letter_len());
            prop_assert_eq!(w.inverse(), v.inverse().concat(&u.inverse()));
        }
    }
}
